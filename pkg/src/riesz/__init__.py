"""Probability measures as integration functionals.

Measures are construction trees read through ``integrate``; the package
provides the monad operations, law and convergence checkers, and a small
probabilistic language (``.rpl``) whose programs denote measures.
"""

from .battery import battery, battery_distance, battery_equal
from .errors import RieszError
from .functions import ContinuousMap, TestFunction
from .measures import (
    Exact,
    IntegrationConfig,
    Measure,
    MonteCarlo,
    Quadrature,
    bernoulli,
    dirac,
    finite,
    integrate,
    sample,
    total_mass,
    uniform,
)
from .monad import bind, join, product, pushforward, unit
from .spaces import FiniteSet, IntRange, ProductSpace, RealInterval, RealLine

__version__ = "0.1.0"

__all__ = [
    "ContinuousMap",
    "Exact",
    "FiniteSet",
    "IntRange",
    "IntegrationConfig",
    "Measure",
    "MonteCarlo",
    "ProductSpace",
    "Quadrature",
    "RealInterval",
    "RealLine",
    "RieszError",
    "TestFunction",
    "battery",
    "battery_distance",
    "battery_equal",
    "bernoulli",
    "bind",
    "dirac",
    "finite",
    "integrate",
    "join",
    "product",
    "pushforward",
    "sample",
    "total_mass",
    "uniform",
    "unit",
]
