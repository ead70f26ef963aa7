"""Exception hierarchy shared across the package.

Every error raised by fatoulab derives from :class:`FatouLabError`, so callers
can catch the whole family with one clause. Errors that carry partial results
(e.g. a best-so-far fit) expose them as attributes.
"""
from __future__ import annotations


class FatouLabError(Exception):
    """Base class for all fatoulab errors."""


class DomainError(FatouLabError):
    """An argument lies outside the mathematical domain of the operation."""


class PoleError(FatouLabError):
    """Evaluation hit (or got numerically too close to) a Moebius pole."""


class OverflowSignal(FatouLabError):
    """An orbit or weight product left the trusted floating-point range.

    Attributes
    ----------
    step : int
        Index at which the overflow was detected.
    partial : list
        Whatever had been computed before the blow-up.
    """

    def __init__(self, message: str, step: int = -1, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial if partial is not None else []


class MapSpecError(FatouLabError):
    """A JSON or inline map/region spec failed to parse.

    The message carries a ``$.path`` style position so the offending node can
    be located inside nested specs.
    """


class MeshTooCoarse(FatouLabError):
    """A disc cover's Lipschitz bound exploded; retry with a smaller mesh."""


class DegenerateError(FatouLabError):
    """A constructive step degenerated (e.g. a target collapsed to zero)."""


class NotFixed(FatouLabError):
    """The supplied point is not a fixed point within tolerance."""


class WrongClass(FatouLabError):
    """A conjugacy or model was requested for a fixed point of the wrong type."""


class BranchAmbiguity(FatouLabError):
    """Root-branch tracking hit two equidistant candidates and a retry failed."""


class NotSelfMap(FatouLabError):
    """The map does not send the required domain into itself."""


class NoConvergence(FatouLabError):
    """An iteration ran out of budget without settling (e.g. elliptic rotation)."""


class NotFound(FatouLabError):
    """A bounded search (run-away index, separation index) was exhausted."""


class NotConverged(FatouLabError):
    """A fit failed to reach its tolerance. Carries the best attempt.

    Attributes
    ----------
    result
        Best-so-far result object, or None when nothing was attempted.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class InjectivityViolation(FatouLabError):
    """Sampled points collided under an iterate that must act injectively."""


class WeightVanishes(FatouLabError):
    """A weight function is numerically zero along the orbit."""


class BoundaryZero(FatouLabError):
    """A zero-counting contour passes too close to a zero of the integrand."""


class WindingUnresolved(FatouLabError):
    """Phase accumulation did not settle near an integer winding number."""


class ConvergenceNotObserved(FatouLabError):
    """A scheduled image condition never held within the given schedule."""
