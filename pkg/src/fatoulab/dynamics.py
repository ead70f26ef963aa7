"""Fixed-point analysis, local conjugacies and escape rendering.

Fixed points are located by damped Newton iteration on f(z) - z from a grid
of seeds, classified by their multiplier, and fed into the two classical
linearizations: the Koenigs coordinate at an attracting point and the
Boettcher coordinate at a superattracting point, both realized as finite
iterate towers with explicit defect measurement. The Denjoy-Wolff estimator
iterates a self-map of the unit disc and reports the interior or boundary
limit point.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchAmbiguity,
    DomainError,
    NoConvergence,
    NotFixed,
    NotSelfMap,
    PoleError,
    WrongClass,
)
from .maps import Add, Const, MapExpr, Mul, Var, derivative, eval_at, eval_deriv, nth_derivative
from .regions import ClosedDisc, CompactRegion, FiniteSet, Polygon

# Multiplier bands for classification.
MULTIPLIER_EPS = 1e-9
# A candidate must satisfy |f(z) - z| below this to be reported as fixed.
FIXED_RESIDUAL_TOL = 1e-10
# Newton stops once the residual is below this.
NEWTON_TOL = 1e-12
# Roots closer than this collapse to one report.
DEDUP_TOL = 1e-8
# Highest derivative order probed when counting parabolic petals.
MAX_PETAL_ORDER = 8

CLASS_SUPERATTRACTING = "Superattracting"
CLASS_ATTRACTING = "Attracting"
CLASS_PARABOLIC = "Parabolic"
CLASS_REPELLING = "Repelling"
CLASS_INDIFFERENT = "IndifferentOther"


@dataclass(frozen=True)
class FixedPointInfo:
    location: complex
    multiplier: complex
    label: str
    petal_count: int | None
    residual: float

    def to_jsonable(self) -> dict:
        return {
            "location": [self.location.real, self.location.imag],
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "label": self.label,
            "petal_count": self.petal_count,
            "residual": self.residual,
        }


def _displacement(f: MapExpr) -> MapExpr:
    return Add(f, Mul(Const(-1), Var()))


def classify_fixed_point(f: MapExpr, z0: complex) -> FixedPointInfo:
    """Classify a fixed point by its multiplier.

    Bands (eps = 1e-9): |m| < eps superattracting; |m| < 1 - eps attracting;
    |m - 1| < eps parabolic, with the petal count read off the first
    non-vanishing derivative of f(z) - z beyond the linear term;
    |m| > 1 + eps repelling; anything else indifferent of unresolved type.
    """
    z0 = complex(z0)
    residual = abs(complex(eval_at(f, z0)) - z0)
    if residual > 1e-8:
        raise NotFixed(f"|f(z) - z| = {residual:g} at {z0}")
    lam = complex(eval_deriv(f, z0))
    mag = abs(lam)
    petals = None
    if mag < MULTIPLIER_EPS:
        label = CLASS_SUPERATTRACTING
    elif mag < 1 - MULTIPLIER_EPS:
        label = CLASS_ATTRACTING
    elif abs(lam - 1) < MULTIPLIER_EPS:
        label = CLASS_PARABOLIC
        disp = _displacement(f)
        expr = derivative(disp)
        for order in range(2, MAX_PETAL_ORDER + 2):
            expr = derivative(expr)
            if abs(complex(eval_at(expr, z0))) > MULTIPLIER_EPS:
                petals = order - 1
                break
    elif mag > 1 + MULTIPLIER_EPS:
        label = CLASS_REPELLING
    else:
        label = CLASS_INDIFFERENT
    return FixedPointInfo(
        location=z0, multiplier=lam, label=label, petal_count=petals, residual=residual
    )


def _component_seeds(comp, grid_step: float) -> np.ndarray:
    if isinstance(comp, FiniteSet):
        return np.asarray(comp.points, dtype=complex)
    if isinstance(comp, ClosedDisc):
        x0 = comp.center.real - comp.radius
        x1 = comp.center.real + comp.radius
        y0 = comp.center.imag - comp.radius
        y1 = comp.center.imag + comp.radius
    elif isinstance(comp, Polygon):
        xs = [v.real for v in comp.vertices]
        ys = [v.imag for v in comp.vertices]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    else:  # pragma: no cover
        raise DomainError(f"unsupported component {comp!r}")
    nx = max(2, int(math.floor((x1 - x0) / grid_step)) + 1)
    ny = max(2, int(math.floor((y1 - y0) / grid_step)) + 1)
    gx, gy = np.meshgrid(x0 + np.arange(nx) * grid_step, y0 + np.arange(ny) * grid_step)
    pts = (gx + 1j * gy).ravel()
    keep = [p for p in pts if comp.contains(complex(p))]
    return np.asarray(keep, dtype=complex)


def find_fixed_points(
    f: MapExpr,
    search: CompactRegion,
    grid_step: float,
    max_newton: int = 50,
) -> list:
    """Newton search for fixed points of ``f`` inside ``search``.

    Seeds a grid of step ``grid_step`` over every component, runs damped
    Newton on f(z) - z (step halved up to 8 times on residual increase, at
    most ``max_newton`` iterations), keeps converged roots with residual
    below 1e-10, deduplicates to 1e-8, and classifies each root. Seeds that
    diverge, hit poles, or stall are dropped silently.
    """
    if grid_step <= 0:
        raise DomainError("grid_step must be positive")
    disp = _displacement(f)
    roots = []
    for comp in search.components:
        for seed in _component_seeds(comp, grid_step):
            root = _newton(disp, complex(seed), max_newton)
            if root is not None:
                roots.append(root)
    kept = []
    for root in sorted(roots, key=lambda z: (z.real, z.imag)):
        if all(abs(root - other) > DEDUP_TOL for other in kept):
            kept.append(root)
    out = []
    for root in kept:
        residual = abs(complex(eval_at(f, root)) - root)
        if residual < FIXED_RESIDUAL_TOL:
            out.append(classify_fixed_point(f, root))
    return out


def _newton(disp: MapExpr, z: complex, max_newton: int):
    try:
        value = complex(eval_at(disp, z))
    except (PoleError, OverflowError):
        return None
    for _ in range(max_newton):
        if abs(value) < NEWTON_TOL:
            return z
        try:
            slope = complex(eval_deriv(disp, z))
        except (PoleError, OverflowError):
            return None
        if slope == 0 or not math.isfinite(abs(slope)):
            return None
        step = value / slope
        scale = 1.0
        for _ in range(8):
            cand = z - scale * step
            try:
                cand_value = complex(eval_at(disp, cand))
            except (PoleError, OverflowError):
                scale *= 0.5
                continue
            if abs(cand_value) <= abs(value) or abs(cand_value) < NEWTON_TOL:
                z, value = cand, cand_value
                break
            scale *= 0.5
        else:
            return None
        if not math.isfinite(abs(z)):
            return None
    return z if abs(value) < NEWTON_TOL else None


# --- local conjugacies ---------------------------------------------------------


@dataclass
class ConjugacyMap:
    """Finite-depth linearizing coordinate at a fixed point.

    ``kind`` is "koenigs" (attracting, phi(z) = m^-N (f^N(z) - z0)) or
    "boettcher" (superattracting of local degree p, phi(z) = (f^N(z) - z0)^(1/p^N)
    with the root branch continued along the orbit). ``depth`` is the number
    of iterations actually used; Koenigs depth is capped so |m|^-N stays
    representable.
    """

    kind: str
    f: MapExpr
    base: complex
    depth: int
    multiplier: complex | None = None
    degree: int | None = None

    def __call__(self, z):
        if self.kind == "koenigs":
            return self._koenigs_eval(z)
        return self._boettcher_eval(z)

    def _koenigs_eval(self, z):
        w = z
        for _ in range(self.depth):
            w = eval_at(self.f, w)
        return (w - self.base) * self.multiplier ** (-self.depth)

    def _boettcher_eval(self, z):
        try:
            return self._boettcher_once(complex(z))
        except BranchAmbiguity:
            # One nudge is allowed before giving up; keeps ray continuity.
            return self._boettcher_once(complex(z) + 1e-12)

    def _boettcher_once(self, z: complex) -> complex:
        p = self.degree
        u_prev = z - self.base
        if u_prev == 0:
            return 0.0 + 0.0j
        r = u_prev
        scale = 1
        for k in range(1, self.depth + 1):
            u = complex(eval_at(self.f, self.base + u_prev)) - self.base
            scale *= p
            if u == 0 or abs(u) < 1e-280 or abs(u) > 1e150:
                break
            upow = u_prev**p
            if upow == 0:
                break
            q = u / upow
            if q != 1.0:
                ang = cmath.phase(q)
                if math.pi - abs(ang) < 1e-9:
                    raise BranchAmbiguity(
                        f"p-th root branch ambiguous at iterate {k} (ratio on negative axis)"
                    )
                r *= cmath.exp(complex(math.log(abs(q)), ang) / scale)
            u_prev = u
        return r

    def defect(self, z: complex) -> float:
        """Conjugacy defect at z: how far phi fails its functional equation."""
        fz = complex(eval_at(self.f, complex(z)))
        if self.kind == "koenigs":
            return abs(complex(self(fz)) - self.multiplier * complex(self(z)))
        return abs(complex(self(fz)) - complex(self(z)) ** self.degree)


def koenigs(f: MapExpr, z0: complex, depth: int) -> ConjugacyMap:
    """Koenigs coordinate at an attracting (not superattracting) fixed point."""
    info = classify_fixed_point(f, z0)
    if info.label != CLASS_ATTRACTING:
        raise WrongClass(f"koenigs needs an attracting fixed point, got {info.label}")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    lam = info.multiplier
    cap = int(280 / -math.log10(abs(lam)))
    return ConjugacyMap(
        kind="koenigs", f=f, base=complex(z0), depth=min(depth, cap), multiplier=lam
    )


def boettcher(f: MapExpr, z0: complex, depth: int) -> ConjugacyMap:
    """Boettcher coordinate at a superattracting fixed point.

    The local degree is the order of the first non-vanishing derivative at
    the fixed point. Evaluation underflows are handled per point by stopping
    the tower early; by then the remaining correction factors are far below
    double precision.
    """
    info = classify_fixed_point(f, z0)
    if info.label != CLASS_SUPERATTRACTING:
        raise WrongClass(f"boettcher needs a superattracting fixed point, got {info.label}")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    degree = None
    expr = f
    for order in range(1, 13):
        expr = derivative(expr)
        if abs(complex(eval_at(expr, z0))) > MULTIPLIER_EPS:
            degree = order
            break
    if degree is None or degree < 2:
        raise WrongClass("could not read a local degree >= 2 at the fixed point")
    return ConjugacyMap(kind="boettcher", f=f, base=complex(z0), depth=depth, degree=degree)


# --- Denjoy-Wolff ---------------------------------------------------------------


@dataclass(frozen=True)
class DWEstimate:
    point: complex
    boundary_flag: bool
    iterations_used: int
    residual: float


_SELFMAP_PROBES = tuple(
    r * cmath.exp(2j * cmath.pi * k / 5)
    for r in (0.15, 0.45, 0.75, 0.95)
    for k in range(5)
)

# Orbit modulus beyond this is treated as boundary convergence evidence.
_BOUNDARY_BAND = 1e-6


def denjoy_wolff(f: MapExpr, max_iter: int = 10000, tol: float = 1e-12) -> DWEstimate:
    """Iterate from the origin and estimate the Denjoy-Wolff point.

    Interior candidates are accepted only when strictly attracting
    (|f'(p)| < 1 - 1e-9); an indifferent interior fixed point means the map
    is an elliptic rotation, whose orbits never settle, and raises
    NoConvergence. A monotone climb into the band |z| > 1 - 1e-6 is reported
    as a boundary point with the late-orbit direction, normalized to unit
    modulus.
    """
    for probe in _SELFMAP_PROBES:
        try:
            if abs(complex(eval_at(f, probe))) >= 1:
                raise NotSelfMap(f"|f({probe:.3f})| >= 1; not a self-map of the disc")
        except PoleError as exc:
            raise NotSelfMap(f"pole inside the disc at probe {probe:.3f}") from exc
    z = 0.0 + 0.0j
    for n in range(1, max_iter + 1):
        z_next = complex(eval_at(f, z))
        if abs(z_next) >= 1 - _BOUNDARY_BAND:
            direction = _boundary_direction(f, z_next, max_iter - n)
            return DWEstimate(
                point=direction,
                boundary_flag=True,
                iterations_used=n,
                residual=abs(z_next - direction),
            )
        if abs(z_next - z) < tol:
            residual = abs(complex(eval_at(f, z_next)) - z_next)
            mult = abs(complex(eval_deriv(f, z_next)))
            if mult < 1 - MULTIPLIER_EPS and residual < 1e-8:
                return DWEstimate(
                    point=z_next, boundary_flag=False, iterations_used=n, residual=residual
                )
            raise NoConvergence(
                f"orbit froze at an indifferent point {z_next:.6f} (|f'| = {mult:.9f});"
                " elliptic rotations have no Denjoy-Wolff limit"
            )
        z = z_next
    raise NoConvergence(f"orbit did not settle within {max_iter} iterations")


def _boundary_direction(f: MapExpr, z: complex, budget: int) -> complex:
    tail = [z]
    for _ in range(min(16, budget)):
        try:
            z = complex(eval_at(f, z))
        except PoleError:
            break
        tail.append(z)
    mean = sum(w / abs(w) for w in tail[-8:])
    return mean / abs(mean)


# --- escape-time rendering -------------------------------------------------------


def escape_render(
    f: MapExpr,
    window: tuple,
    resolution: tuple,
    max_iter: int,
    escape_radius: float = 2.0,
) -> np.ndarray:
    """Escape-time counts over a pixel grid; sentinel max_iter = never escaped.

    ``window`` is (x0, y0, x1, y1); ``resolution`` is (nx, ny). Pixel centers
    are sampled; row 0 is the top of the window. The count is the number of
    applications taken for the modulus to first exceed the escape radius
    (0 for points already outside, ``max_iter`` if it never did).
    """
    x0, y0, x1, y1 = (float(v) for v in window)
    nx, ny = (int(v) for v in resolution)
    if nx < 1 or ny < 1 or x1 <= x0 or y1 <= y0 or max_iter < 1:
        raise DomainError("bad render window/resolution/max_iter")
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y1 - (np.arange(ny) + 0.5) * (y1 - y0) / ny
    z = xs[None, :] + 1j * ys[:, None]
    counts = np.full(z.shape, max_iter, dtype=np.int32)
    alive = np.abs(z) <= escape_radius
    counts[~alive] = 0
    for it in range(1, max_iter + 1):
        if not alive.any():
            break
        with np.errstate(all="ignore"):
            z_new = eval_at(f, z[alive], check_poles=False)
            z[alive] = z_new
        gone = alive & (~np.isfinite(z.real) | ~np.isfinite(z.imag) | (np.abs(z) > escape_radius))
        counts[gone] = it
        alive &= ~gone
    return counts


def write_pgm(path, counts: np.ndarray, max_iter: int) -> None:
    """Write escape counts as a binary P5 PGM, scaled onto 0..255."""
    scaled = (counts.astype(np.int64) * 255) // max_iter
    data = scaled.astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
