"""fatoulab: numerics for holomorphic composition dynamics.

The package turns a family of constructive arguments about composition
operators into runnable experiments: hyperbolic-contraction classification of
inner-map sequences on the unit disc, wandering-domain orbit models,
fixed-point conjugacies (Koenigs and Boettcher coordinates), Runge-step
universality constructions for (weighted) composition operators, and
argument-principle range probes. Everything is deterministic given the
config and seed.
"""
from . import dynamics, hyperbolic, maps, range_analysis, regions, universality
from .errors import FatouLabError

__all__ = [
    "FatouLabError",
    "dynamics",
    "hyperbolic",
    "maps",
    "range_analysis",
    "regions",
    "universality",
]

__version__ = "0.1.0"
