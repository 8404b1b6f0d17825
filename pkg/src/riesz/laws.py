"""Executable checks of the monad laws, naturality, Fubini, the hexagon and
strong affineness.

Every check compares two measures on the battery of their space and
reports the largest residual.  Sweeps run over seeded generators; a failing
instance carries a serialized witness that :func:`replay_witness` can
re-evaluate on its own.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .battery import battery, battery_distance
from .errors import NotDeterministicMarginal, NotProbability, NotProduct, RieszError
from .functions import TestFunction, swap_map
from .generators import Instance, MeasureGenerator
from .kernels import UnitKernel
from .measures import (
    Dirac,
    IntegrationConfig,
    JoinNode,
    Measure,
    Mixture,
    ProductNode,
    Pushforward,
    _integrate,
    integrate,
    is_finite_tree,
    is_probability,
    measure_from_json,
    measure_to_json,
)
from .monad import bind, bind_factored, hexagon_paths, join, marginal_1, marginal_2
from .spaces import ProductSpace

AFFINE_ATOM_THRESHOLD = 1.0 - 1e-9
MAX_AFFINE_CARRIER = 8


@dataclass
class LawReport:
    law_name: str
    instances_checked: int = 0
    max_residual: float = 0.0
    tolerance: float = 0.0
    witness: dict | None = None
    parts: list = field(default_factory=list)
    backend: str = ""
    seed: int | None = None

    @property
    def verdict(self) -> str:
        return "fail" if self.failed else "pass"

    @property
    def failed(self) -> bool:
        return not self.max_residual <= self.tolerance or any(p.failed for p in self.parts)

    @property
    def passed(self) -> bool:
        return not self.failed

    def merge(self, other: "LawReport") -> "LawReport":
        """Associative combination: max of residuals, sum of counts."""
        out = LawReport(
            self.law_name,
            self.instances_checked + other.instances_checked,
            max(self.max_residual, other.max_residual),
            max(self.tolerance, other.tolerance),
            backend=self.backend or other.backend,
            seed=self.seed if self.seed is not None else other.seed,
        )
        out.witness = _worse(self.witness, other.witness)
        by_name = {p.law_name: p for p in self.parts}
        out.parts = []
        for p in other.parts:
            out.parts.append(by_name.pop(p.law_name).merge(p) if p.law_name in by_name else p)
        out.parts = [*by_name.values(), *out.parts] if by_name else out.parts
        return out

    def to_json(self) -> dict:
        out = {
            "law_name": self.law_name,
            "verdict": self.verdict,
            "instances_checked": self.instances_checked,
            "max_residual": _num(self.max_residual),
            "tolerance": self.tolerance,
            "backend": self.backend,
            "seed": self.seed,
            "witness": self.witness,
        }
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        return out


def _num(v: float):
    return v if math.isfinite(v) else str(v)


def _worse(a: dict | None, b: dict | None) -> dict | None:
    if a is None or b is None:
        return a or b
    ra, rb = a.get("residual", math.inf), b.get("residual", math.inf)
    return b if _key(rb) > _key(ra) else a


def _key(v):
    return math.inf if v is None or isinstance(v, str) else v


# ---------------------------------------------------------------------------
# single comparisons


def _config(cfg: IntegrationConfig | None, *measures: Measure) -> IntegrationConfig:
    cfg = cfg or IntegrationConfig()
    if cfg.backend != "auto":
        return cfg
    finite = all(is_finite_tree(m) for m in measures)
    return replace(cfg, backend="exact" if finite else "quadrature")


def compare(law: str, lhs: Measure, rhs: Measure, cfg: IntegrationConfig | None = None, **meta) -> LawReport:
    """Battery residual between two measures as a one-instance report."""
    cfg = _config(cfg, lhs, rhs)
    report = LawReport(law, 1, 0.0, cfg.tolerance, backend=cfg.label(), seed=cfg.seed)
    try:
        d = battery_distance(lhs, rhs, cfg)
    except RieszError as exc:
        report.max_residual = math.inf
        report.witness = {"law": law, "error": exc.to_json(), **meta}
        return report
    report.max_residual = d.value
    if d.value > report.tolerance:
        report.witness = _witness(law, lhs, rhs, d, **meta)
    return report


def _witness(law, lhs, rhs, d, **meta) -> dict:
    w = {"law": law, "function": d.function, "residual": d.value, "lhs_value": d.left, "rhs_value": d.right}
    w.update(meta)
    try:
        w["lhs"] = measure_to_json(lhs)
        w["rhs"] = measure_to_json(rhs)
    except RieszError as exc:
        w["serialization_error"] = exc.to_json()
    return w


def replay_witness(witness: dict, cfg: IntegrationConfig | None = None) -> float:
    """Recompute a witness's residual from its serialized inputs alone."""
    lhs, rhs = measure_from_json(witness["lhs"]), measure_from_json(witness["rhs"])
    from .spaces import join_spaces

    bat = battery(join_spaces(lhs.space, rhs.space))
    fn = next(b.fn for b in bat if b.name == witness["function"])
    cfg = _config(cfg, lhs, rhs)
    return abs(integrate(lhs, fn, cfg) - integrate(rhs, fn, cfg))


# per-instance law statements: name -> (lhs, rhs)


def monad_pairs(inst: Instance) -> list[tuple[str, Measure, Measure]]:
    mu = inst.mu
    pairs = [
        ("left_unit", JoinNode(Mixture.point(mu)), mu),
        ("right_unit", bind(mu, UnitKernel(mu.space)), mu),
        ("associativity", JoinNode(join(inst.big_pi)), JoinNode(inst.big_pi.map(JoinNode))),
    ]
    if mu.space.is_finite:
        from .measures import FiniteWeighted

        if isinstance(mu, (Dirac, FiniteWeighted)):
            pairs.append(("right_unit_factored", bind_factored(mu, UnitKernel(mu.space)), mu))
    return pairs


def naturality_pairs(inst: Instance, g=None) -> list[tuple[str, Measure, Measure]]:
    g = g or inst.map
    x = inst.point
    return [
        ("unit_naturality", Pushforward(g, Dirac(x, g.domain)), Dirac(g(x), g.codomain)),
        (
            "join_naturality",
            Pushforward(g, JoinNode(inst.pi)),
            JoinNode(inst.pi.map(lambda m: Pushforward(g, m))),
        ),
    ]


def hexagon_pairs(mu: Measure, nu: Measure) -> list[tuple[str, Measure, Measure]]:
    prod = ProductNode(mu, nu)
    via_right, via_left = hexagon_paths(mu, nu)
    pairs = [("hexagon_right", via_right, prod), ("hexagon_left", via_left, prod)]
    from .kernels import LeftStrengthKernel, RightStrengthKernel
    from .measures import FiniteWeighted

    if isinstance(nu, (Dirac, FiniteWeighted)) and isinstance(mu, (Dirac, FiniteWeighted)):
        # the literal join o M(strength) composites over finite mixtures
        pairs.append(("hexagon_right_factored", bind_factored(nu, RightStrengthKernel(nu.space, mu)), prod))
        pairs.append(("hexagon_left_factored", bind_factored(mu, LeftStrengthKernel(mu.space, nu)), prod))
    return pairs


def fubini_pair(mu: Measure, nu: Measure) -> tuple[str, Measure, Measure]:
    """x-first versus y-first iterated integration, as two measures."""
    y_first = Pushforward(swap_map(ProductSpace(nu.space, mu.space)), ProductNode(nu, mu))
    return ("fubini", ProductNode(mu, nu), y_first)


# ---------------------------------------------------------------------------
# sweeps


def _sweep(
    name: str,
    generator: MeasureGenerator,
    trials: int,
    cfg: IntegrationConfig | None,
    pairs: Callable[[Instance], list],
    threads: int = 1,
) -> LawReport:
    cfg = cfg or IntegrationConfig()
    tol = cfg.tolerance if cfg.backend != "auto" else cfg.tol_abs
    top = LawReport(name, 0, 0.0, 0.0, backend=cfg.label(), seed=generator.seed)

    def one(trial: int) -> LawReport:
        rep = LawReport(name, 1, 0.0, 0.0, backend=cfg.label(), seed=generator.seed)
        try:
            inst = generator.instance(trial)
            items = pairs(inst)
        except RieszError as exc:
            rep.max_residual = math.inf
            rep.witness = {"law": name, "trial": trial, "generator": generator.name, "error": exc.to_json()}
            return rep
        for law, lhs, rhs in items:
            r = compare(law, lhs, rhs, cfg, trial=trial, generator=generator.name)
            if tol is not None:
                r.tolerance = tol
            rep = _fold(rep, r)
        return rep

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    for r in results:
        top = top.merge(r)
    top.instances_checked = trials
    for p in top.parts:
        p.instances_checked = trials
    top.tolerance = max([p.tolerance for p in top.parts], default=cfg.tolerance if tol is None else tol)
    top.max_residual = max([p.max_residual for p in top.parts], default=0.0)
    top.witness = None
    for p in top.parts:
        top.witness = _worse(top.witness, p.witness)
    return top


def _fold(rep: LawReport, part: LawReport) -> LawReport:
    rep.parts = list(rep.parts)
    for i, p in enumerate(rep.parts):
        if p.law_name == part.law_name:
            rep.parts[i] = p.merge(part)
            rep.parts[i].instances_checked = 1
            break
    else:
        rep.parts.append(part)
    rep.max_residual = max(rep.max_residual, part.max_residual)
    rep.tolerance = max(rep.tolerance, part.tolerance)
    rep.witness = _worse(rep.witness, part.witness)
    return rep


def check_monad_laws(generator: MeasureGenerator, trials: int, cfg: IntegrationConfig | None = None, threads: int = 1) -> LawReport:
    """Both unit laws and associativity on ``trials`` generated instances."""
    return _sweep("monad", generator, trials, cfg, monad_pairs, threads)


def check_naturality(g, generator: MeasureGenerator, trials: int, cfg: IntegrationConfig | None = None, threads: int = 1) -> LawReport:
    """Naturality of unit and join.  ``g=None`` uses each instance's own map."""

    def pairs(inst):
        if g is not None and not inst.space.is_subspace_of(g.domain):
            return []
        return naturality_pairs(inst, g)

    return _sweep("naturality", generator, trials, cfg, pairs, threads)


def check_hexagon(generator: MeasureGenerator, trials: int, cfg: IntegrationConfig | None = None, threads: int = 1) -> LawReport:
    return _sweep("hexagon", generator, trials, cfg, lambda inst: hexagon_pairs(inst.mu, inst.other), threads)


def check_fubini_sweep(generator: MeasureGenerator, trials: int, cfg: IntegrationConfig | None = None, threads: int = 1) -> LawReport:
    return _sweep("fubini", generator, trials, cfg, lambda inst: [fubini_pair(inst.mu, inst.other)], threads)


def check_fubini(mu: Measure, nu: Measure, f: TestFunction, cfg: IntegrationConfig | None = None) -> LawReport:
    """``|int int f dmu dnu - int int f dnu dmu|`` for one observable."""
    law, x_first, y_first = fubini_pair(mu, nu)
    cfg = _config(cfg, x_first)
    a = integrate(x_first, f, cfg)
    b = integrate(y_first, f, cfg)
    rep = LawReport(law, 1, abs(a - b), cfg.tolerance, backend=cfg.label(), seed=cfg.seed)
    rep.values = (a, b)
    if rep.failed:
        rep.witness = {"law": law, "x_first": a, "y_first": b, "function": f.to_json(), "residual": abs(a - b)}
    return rep


def check_hexagon_instance(mu: Measure, nu: Measure, cfg: IntegrationConfig | None = None) -> LawReport:
    top = LawReport("hexagon", 1, 0.0, 0.0)
    for law, lhs, rhs in hexagon_pairs(mu, nu):
        top = _fold(top, compare(law, lhs, rhs, cfg))
    top.backend, top.seed = top.parts[0].backend, top.parts[0].seed
    return top


def check_pullback_strength(
    x_gen: MeasureGenerator,
    y_gen: MeasureGenerator,
    trials: int,
    cfg: IntegrationConfig | None = None,
    threads: int = 1,
) -> LawReport:
    """Commuting square: ``(pi_2)_*(nu (x) delta_y) = delta_y`` and ``(pi_1)_*`` recovers ``nu``."""

    def pairs(inst):
        rng = y_gen.rng(inst.trial)
        y_space = y_gen.space(rng)
        y = y_gen.point(rng, y_space)
        nu = inst.mu
        joint = ProductNode(nu, Dirac(y, y_space))
        return [
            ("second_marginal", marginal_2(joint), Dirac(y, y_space)),
            ("first_marginal", marginal_1(joint), nu),
        ]

    return _sweep("pullback_strength", x_gen, trials, cfg, pairs, threads)


# ---------------------------------------------------------------------------
# strong affineness on finite carriers


def _carrier_index(space):
    pts = space.points()
    key = {_hkey(p): i for i, p in enumerate(pts)}
    return pts, key


def _hkey(p):
    return (type(p).__name__ if not isinstance(p, (int, float)) or isinstance(p, bool) else "num", p)


def _subset_matrix(n: int) -> np.ndarray:
    """Row ``s`` is the indicator vector of the subset with bitmask ``s``."""
    s = np.arange(2**n)[:, None]
    return ((s >> np.arange(n)[None, :]) & 1).astype(float)


@dataclass
class AffineReport(LawReport):
    rectangles: int = 0
    atom: object = None


def check_strongly_affine(mu: Measure, cfg: IntegrationConfig | None = None) -> AffineReport:
    """Factorization ``mu(A x B) = nu(A) delta_y(B)`` over all rectangles.

    ``mu`` must be a probability on a product of finite carriers whose
    second marginal is a point mass; otherwise ``NotDeterministicMarginal``
    (or ``NotProbability``) is raised as a precondition signal.
    """
    space = mu.space
    if not isinstance(space, ProductSpace):
        raise NotProduct(f"{space} is not a product space")
    if not (space.left.is_finite and space.right.is_finite):
        raise NotDeterministicMarginal("strong affineness is checked on finite carriers only")
    xs, xkey = _carrier_index(space.left)
    ys, ykey = _carrier_index(space.right)
    if max(len(xs), len(ys)) > MAX_AFFINE_CARRIER:
        raise NotDeterministicMarginal(f"carriers are limited to {MAX_AFFINE_CARRIER} points")
    exact = IntegrationConfig("exact", seed=(cfg.seed if cfg else IntegrationConfig().seed))
    tol = max(exact.tolerance, cfg.tol_abs or 0.0) if cfg else exact.tolerance
    if not is_probability(mu, exact):
        raise NotProbability("strong affineness needs a probability measure")

    SA, SB = _subset_matrix(len(xs)), _subset_matrix(len(ys))

    def idx(batch, space_, key):
        return np.array([key[_hkey(p)] for p in space_.from_batch(batch)], dtype=int)

    # second marginal: locate the point mass
    m2 = _integrate(marginal_2(mu), lambda b: np.eye(len(ys))[idx(b, space.right, ykey)], exact, len(ys))
    j = int(np.argmax(m2))
    if not m2[j] >= AFFINE_ATOM_THRESHOLD:
        raise NotDeterministicMarginal(f"second marginal has no atom of mass >= {AFFINE_ATOM_THRESHOLD} (max {m2[j]:.6g})")

    # mu(A x B) for every rectangle, one vectorised pass
    n_a, n_b = SA.shape[0], SB.shape[0]

    def rect(batch):
        ia, ib = idx(batch[0], space.left, xkey), idx(batch[1], space.right, ykey)
        return (SA[:, ia].T[:, :, None] * SB[:, ib].T[:, None, :]).reshape(len(ia), n_a * n_b)

    joint = _integrate(mu, rect, exact, n_a * n_b).reshape(n_a, n_b)
    nu_a = _integrate(marginal_1(mu), lambda b: SA[:, idx(b, space.left, xkey)].T, exact, n_a)
    dirac_b = SB[:, j]
    residual = float(np.max(np.abs(joint - np.outer(nu_a, dirac_b))))

    rep = AffineReport("strongly_affine", 1, 0.0, tol, backend=exact.label(), seed=exact.seed)
    rep.rectangles = n_a * n_b
    rep.atom = ys[j]
    rep = _fold(rep, _affine_part("factorization", residual, tol))
    if residual > tol:
        worst = np.unravel_index(int(np.argmax(np.abs(joint - np.outer(nu_a, dirac_b)))), joint.shape)
        rep.parts[-1].witness = {
            "law": "factorization",
            "residual": residual,
            "A": [xs[i] for i in range(len(xs)) if SA[worst[0], i]],
            "B": [ys[i] for i in range(len(ys)) if SB[worst[1], i]],
            "measure": measure_to_json(mu),
        }

    # pullback universality: Phi(nu, y) = (nu (x) delta_y, y) with inverse (pi_1)_*
    nu = marginal_1(mu)
    y = ys[j]
    phi = ProductNode(nu, Dirac(y, space.right))
    for law, lhs, rhs in (
        ("phi_surjective", phi, mu),
        ("phi_left_inverse", marginal_1(phi), nu),
        ("phi_second_marginal", marginal_2(phi), Dirac(y, space.right)),
    ):
        part = compare(law, lhs, rhs, exact)
        part.tolerance = tol
        rep = _fold(rep, part)
    rep.witness = None
    for p in rep.parts:
        rep.witness = _worse(rep.witness, p.witness)
    return rep


def _affine_part(name, residual, tol) -> LawReport:
    return LawReport(name, 1, residual, tol, backend="exact")


def check_affine_corpus(measures: list[Measure], cfg: IntegrationConfig | None = None) -> LawReport:
    """Run :func:`check_strongly_affine` over a list, counting precondition rejections separately."""
    top = LawReport("strongly_affine", 0, 0.0, IntegrationConfig("exact").tolerance, backend="exact")
    rejected = 0
    for mu in measures:
        try:
            rep = check_strongly_affine(mu, cfg)
        except (NotDeterministicMarginal, NotProbability):
            rejected += 1
            continue
        top = _fold(top, rep)
        top.instances_checked += 1
        for p in top.parts:
            p.instances_checked = top.instances_checked
    top.rejected = rejected
    return top


def affine_instances(seed: int = 0, trials: int = 20, max_points: int = MAX_AFFINE_CARRIER) -> list[Measure]:
    """Seeded finite joints whose second marginal is a point mass.

    They mix three constructions: factorized ``nu (x) delta_y``, raw atom
    tables with a constant second column, and binds whose kernels always
    land on the same ``y``.
    """
    from .kernels import TableKernel
    from .measures import BindNode, FiniteWeighted
    from .spaces import FiniteSet, IntRange

    out = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t, 7])
        n, m = int(rng.integers(1, max_points + 1)), int(rng.integers(1, max_points + 1))
        X_ = FiniteSet(tuple(f"x{i}" for i in range(n)))
        Y_ = IntRange(0, m - 1)
        y = int(rng.integers(0, m))
        w = rng.dirichlet(np.ones(n))
        nu = FiniteWeighted(tuple((f"x{i}", float(w[i])) for i in range(n)), X_)
        kind = t % 3
        if kind == 0:
            out.append(ProductNode(nu, Dirac(y, Y_)))
        elif kind == 1:
            P = ProductSpace(X_, Y_)
            out.append(FiniteWeighted(tuple(((f"x{i}", y), float(w[i])) for i in range(n)), P))
        else:
            P = ProductSpace(X_, Y_)
            rows = tuple((f"x{i}", Dirac((f"x{i}", y), P)) for i in range(n))
            out.append(BindNode(nu, TableKernel(X_, rows)))
    return out


def correlated_instances(seed: int = 0, trials: int = 5) -> list[Measure]:
    """Joints with a spread-out second marginal: precondition rejections."""
    from .measures import FiniteWeighted
    from .spaces import FiniteSet, IntRange

    out = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t, 11])
        n = int(rng.integers(2, 6))
        X_, Y_ = FiniteSet(tuple(f"x{i}" for i in range(n))), IntRange(0, 1)
        w = rng.dirichlet(np.ones(n))
        atoms = tuple(((f"x{i}", i % 2), float(w[i])) for i in range(n))
        out.append(FiniteWeighted(atoms, ProductSpace(X_, Y_)))
    return out


__all__ = [
    "AffineReport",
    "LawReport",
    "affine_instances",
    "check_affine_corpus",
    "check_fubini",
    "check_fubini_sweep",
    "check_hexagon",
    "check_hexagon_instance",
    "check_monad_laws",
    "check_naturality",
    "check_pullback_strength",
    "check_strongly_affine",
    "compare",
    "correlated_instances",
    "fubini_pair",
    "hexagon_pairs",
    "monad_pairs",
    "naturality_pairs",
    "replay_witness",
]

