"""Monad and monoidal structure: unit, join, pushforward, bind, product, strengths."""

from __future__ import annotations

from .errors import DomainMismatch, NotProduct, SpaceMismatch
from .functions import ContinuousMap, projection
from .kernels import LeftStrengthKernel, RightStrengthKernel, UnitKernel
from .measures import BindNode, Dirac, JoinNode, Kernel, Measure, Mixture, ProductNode, Pushforward
from .spaces import ProductSpace, SpaceDescriptor


def unit(x, space: SpaceDescriptor) -> Dirac:
    """``delta_x``."""
    return Dirac(x, space)


def join(pi: Mixture) -> Measure | Mixture:
    """Average a finite mixture of measures.

    On a mixture of mixtures (two levels up) this averages one level,
    returning the flattened mixture of measures.
    """
    if not isinstance(pi, Mixture):
        raise SpaceMismatch("join takes a finite mixture")
    if pi.level == 1:
        return JoinNode(pi)
    comps = []
    for inner, w in pi.components:
        comps.extend((m, w * v) for m, v in inner.components)
    return Mixture(tuple(comps))


def pushforward(g: ContinuousMap, mu: Measure) -> Pushforward:
    """``g_* mu = mu(- o g)``."""
    return Pushforward(g, mu)


def bind(mu: Measure, k: Kernel) -> BindNode:
    """Kleisli extension: ``f -> int k(x)(f) dmu(x)``."""
    return BindNode(mu, k)


def bind_factored(mu: Measure, k: Kernel) -> JoinNode:
    """``bind`` through join o pushforward, on a finite base only."""
    if not mu.space.is_finite:
        raise DomainMismatch("the factored form needs a finite base")
    from .measures import FiniteWeighted

    if isinstance(mu, Dirac):
        return JoinNode(Mixture(((k(mu.point), 1.0),)))
    if not isinstance(mu, FiniteWeighted):
        raise DomainMismatch("the factored form needs an atom list")
    return JoinNode(Mixture(tuple((k(x), w) for x, w in mu.atoms)))


def product(mu: Measure, nu: Measure) -> ProductNode:
    """``(mu (x) nu)(f) = nu(y -> mu(x -> f(x, y)))``."""
    return ProductNode(mu, nu)


def strength_left(x, nu: Measure, space: SpaceDescriptor) -> ProductNode:
    """``lambda(x, nu) = delta_x (x) nu``."""
    return ProductNode(Dirac(x, space), nu)


def strength_right(mu: Measure, y, space: SpaceDescriptor) -> ProductNode:
    """``rho(mu, y) = mu (x) delta_y``."""
    return ProductNode(mu, Dirac(y, space))


def _require_product(mu: Measure) -> ProductSpace:
    if not isinstance(mu.space, ProductSpace):
        raise NotProduct(f"{mu.space} is not a product space")
    return mu.space


def marginal_1(mu: Measure) -> Pushforward:
    return Pushforward(projection(_require_product(mu), 1), mu)


def marginal_2(mu: Measure) -> Pushforward:
    return Pushforward(projection(_require_product(mu), 2), mu)


def hexagon_paths(mu: Measure, nu: Measure) -> tuple[BindNode, BindNode]:
    """The two composites ``M(X) x M(Y) -> M(X x Y)`` built from strengths.

    The first integrates ``y`` last (``nu`` outside), the second ``x`` last.
    """
    via_right = BindNode(nu, RightStrengthKernel(nu.space, mu))
    via_left = BindNode(mu, LeftStrengthKernel(mu.space, nu))
    return via_right, via_left


def unit_kernel(space: SpaceDescriptor) -> UnitKernel:
    return UnitKernel(space)


__all__ = [
    "bind",
    "bind_factored",
    "hexagon_paths",
    "join",
    "marginal_1",
    "marginal_2",
    "product",
    "pushforward",
    "strength_left",
    "strength_right",
    "unit",
    "unit_kernel",
]
