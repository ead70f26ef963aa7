"""Run-away witnesses, the numerical Runge step, and weighted-orbit tools.

The operators studied here act on a function by composing with iterates of a
fixed map, optionally multiplying by a weight cocycle along the way.  All of
the routines are sample based: separations are certified through disc covers,
polynomial fits are validated on held-out points, and every index search
breaks ties toward the smallest index.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    InjectivityViolation,
    NotConverged,
    NotFound,
    OverflowSignal,
    PoleError,
    WeightVanishes,
)
from .maps import (
    ESCAPE_MAGNITUDE,
    Add,
    Affine,
    Compose,
    Const,
    MapExpr,
    Poly,
    compose_n,
    eval_at,
)
from .regions import (
    CompactRegion,
    Contour,
    FiniteSet,
    covers_disjoint,
    disc,
    image_cover,
    sample_boundary,
    sample_interior,
    self_cover,
)

# Degree ladder for the least-squares Runge step.
DEGREE_STEP = 8
DEFAULT_DEGREE_CAP = 64
DEFAULT_VALIDATION_FACTOR = 4

# Default certification mesh for witness searches.
DEFAULT_MESH = 1.0 / 64

# Per-region sampling used by the step builders.
BOUNDARY_SAMPLES = 192
INTERIOR_SAMPLES = 96

INJECTIVITY_TOL = 1e-10
WEIGHT_FLOOR = 1e-12
LOG10_OVERFLOW = 300.0

# Images must clear the guard disc by this factor before a builder stage
# accepts an index.  Below ~1.8 the guard-versus-image fit needs degrees
# past the default cap; much above 2 the schedule spreads the sites so far
# apart that the single-basis least squares hits its conditioning floor
# (both measured with a Lawson minimax probe).
GUARD_CLEARANCE = 2.0


# --- separation witnesses ----------------------------------------------------


@dataclass(frozen=True)
class SeparationWitness:
    """Certified index at which an image cover leaves a reference cover.

    ``m`` is the witness index (called N for run-away searches), ``margin``
    the smallest gap between the two disc covers, and ``method`` records how
    the certificate was produced.
    """

    m: int
    margin: float
    method: str = ""

    def __post_init__(self):
        if self.m < 0:
            raise DomainError("witness index must be nonnegative")
        if not self.margin > 0:
            raise DomainError("witness margin must be positive")

    def to_jsonable(self) -> dict:
        return {"m": self.m, "margin": self.margin, "method": self.method}


def _separation_search(
    f: MapExpr,
    ref: CompactRegion,
    moving: CompactRegion,
    m_max: int,
    mesh: float,
    start: int,
) -> SeparationWitness:
    ref_cover = self_cover(ref, mesh)
    for m in range(start, m_max + 1):
        img = image_cover(compose_n(f, m), moving, mesh)
        sep = covers_disjoint(ref_cover, img)
        if sep.disjoint:
            return SeparationWitness(m, sep.margin, f"certified-cover mesh={mesh:g}")
    raise NotFound(
        f"no separation index up to {m_max} at mesh {mesh:g}; "
        "raise the horizon or refine the mesh"
    )


def find_runaway_N(
    f: MapExpr, K: CompactRegion, n_max: int = 50, mesh: float = DEFAULT_MESH
) -> SeparationWitness:
    """Smallest N with cover(K) disjoint from cover(f^N(K)).

    N = 0 is vacuous (a nonempty set always meets itself), so the search
    starts at 1.  The returned witness stores N in the ``m`` field.
    """
    return _separation_search(f, K, K, n_max, mesh, start=1)


def find_separation_m(
    f: MapExpr,
    K: CompactRegion,
    L: CompactRegion,
    m_max: int = 50,
    mesh: float = DEFAULT_MESH,
) -> SeparationWitness:
    """Smallest m with cover(K) disjoint from cover(f^m(L)); m = 0 allowed."""
    return _separation_search(f, K, L, m_max, mesh, start=0)


# --- polynomial fitting -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RungeTarget:
    """One sample cloud with prescribed values on it."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        vals = np.asarray(self.values, dtype=complex).ravel()
        if pts.size == 0 or pts.shape != vals.shape:
            raise DomainError("target needs matching nonempty points/values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True)
class RungeRequest:
    targets: tuple
    epsilon: float
    degree_cap: int = DEFAULT_DEGREE_CAP
    validation_factor: int = DEFAULT_VALIDATION_FACTOR

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise DomainError("request needs at least one target")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.degree_cap < 0:
            raise DomainError("degree_cap must be nonnegative")
        if self.validation_factor < 1:
            raise DomainError("validation_factor must be >= 1")


@dataclass(frozen=True)
class RungeResult:
    """Fitted polynomial in centered coordinates, with per-target errors.

    ``polynomial`` evaluates p((z - center) / scale); keeping the fit in the
    centered basis avoids the huge monomial coefficients an expansion in z
    would produce at high degree.
    """

    polynomial: MapExpr
    coefficients: tuple
    center: complex
    scale: float
    degree: int
    fit_errors: tuple
    validation_errors: tuple
    converged: bool

    def to_jsonable(self) -> dict:
        return {
            "coefficients": [[c.real, c.imag] for c in self.coefficients],
            "center": [self.center.real, self.center.imag],
            "scale": self.scale,
            "degree": self.degree,
            "fit_errors": list(self.fit_errors),
            "validation_errors": list(self.validation_errors),
            "converged": self.converged,
        }


def _split_indices(n: int, factor: int):
    """Deterministic fit/validation split: every (factor+1)-th point fits."""
    idx = np.arange(n)
    keep = idx % (factor + 1) == 0
    return idx[keep], idx[~keep]


def _sup_error(p: MapExpr, pts: np.ndarray, vals: np.ndarray) -> float:
    if pts.size == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(eval_at(p, pts)) - vals)))


def runge_fit(request: RungeRequest) -> RungeResult:
    """Least-squares polynomial matching every target cloud at once.

    Each target cloud is split into fit points and a validation_factor times
    denser held-out set.  The degree escalates in steps of 8 until the worst
    held-out sup error drops to epsilon; the linear system is built in the
    centered coordinate u = (z - mu)/sigma to keep the Vandermonde columns
    on a common scale.  Raises NotConverged carrying the best attempt.
    """
    splits = []
    for t in request.targets:
        fit_idx, val_idx = _split_indices(len(t), request.validation_factor)
        splits.append(
            (
                t.points[fit_idx],
                t.values[fit_idx],
                t.points[val_idx],
                t.values[val_idx],
            )
        )
    fit_pts = np.concatenate([s[0] for s in splits])
    fit_vals = np.concatenate([s[1] for s in splits])
    n_fit = fit_pts.size
    if 4 * n_fit < request.degree_cap:
        raise DomainError(
            f"{n_fit} fit samples cannot support degree cap {request.degree_cap}"
        )

    mu = complex(fit_pts.mean())
    sigma = max(float(np.max(np.abs(fit_pts - mu))), 1e-12)
    u_fit = (fit_pts - mu) / sigma

    degrees = []
    for d in list(range(DEGREE_STEP, request.degree_cap + 1, DEGREE_STEP)) + [
        request.degree_cap
    ]:
        d = min(d, max(0, n_fit - 1))
        if d not in degrees:
            degrees.append(d)

    best = None
    best_err = math.inf
    for d in degrees:
        vand = u_fit[:, None] ** np.arange(d + 1)[None, :]
        coeffs, *_ = np.linalg.lstsq(vand, fit_vals, rcond=None)
        p = Compose(Poly(tuple(coeffs)), Affine(1.0 / sigma, -mu / sigma))
        fit_errors = tuple(_sup_error(p, s[0], s[1]) for s in splits)
        val_errors = tuple(_sup_error(p, s[2], s[3]) for s in splits)
        worst = max(val_errors)
        result = RungeResult(
            polynomial=p,
            coefficients=tuple(complex(c) for c in coeffs),
            center=mu,
            scale=sigma,
            degree=d,
            fit_errors=fit_errors,
            validation_errors=val_errors,
            converged=worst <= request.epsilon,
        )
        if worst < best_err:
            best, best_err = result, worst
        if result.converged:
            return result
    raise NotConverged(
        f"held-out error {best_err:g} stayed above {request.epsilon:g} "
        f"at degree cap {request.degree_cap}",
        result=best,
    )


def target_from_region(
    region: CompactRegion,
    func: MapExpr,
    *,
    boundary_n: int = BOUNDARY_SAMPLES,
    interior_n: int = INTERIOR_SAMPLES,
    seed: int = 0,
) -> RungeTarget:
    """Sample a region and evaluate a map on it, as one fit target."""
    pts = _region_cloud(region, boundary_n, interior_n, seed)
    return RungeTarget(pts, np.asarray(eval_at(func, pts)))


def _region_cloud(
    region: CompactRegion, boundary_n: int, interior_n: int, seed: int
) -> np.ndarray:
    """Boundary plus seeded interior samples, exact duplicates removed."""
    parts = [sample_boundary(region, boundary_n)]
    if interior_n > 0 and any(
        not isinstance(c, FiniteSet) for c in region.components
    ):
        parts.append(sample_interior(region, interior_n, seed))
    cloud = np.concatenate(parts)
    _, first = np.unique(cloud, return_index=True)
    return cloud[np.sort(first)]


# --- the (weighted) transition step -------------------------------------------


def _weight_products(f: MapExpr, omega: MapExpr, pts: np.ndarray, m: int):
    """Orbit x = f^m(pts) and the weight cocycle along it.

    Magnitudes are accumulated as log10 sums and phases separately, so the
    product survives far outside the float range; the reconstructed factors
    are exactly 1.0 whenever the weight is constant 1.
    """
    x = pts.copy()
    logmag = np.zeros(pts.shape, dtype=float)
    phase = np.zeros(pts.shape, dtype=float)
    for k in range(m):
        wk = np.asarray(eval_at(omega, x))
        small = np.abs(wk) <= WEIGHT_FLOOR
        if small.any():
            i = int(np.argmax(small))
            raise WeightVanishes(
                f"weight vanished at orbit step {k} of sample {pts[i]}"
            )
        logmag += np.log10(np.abs(wk))
        phase += np.angle(wk)
        if float(np.max(np.abs(logmag))) > LOG10_OVERFLOW:
            raise OverflowSignal(
                f"weight product left the +-{LOG10_OVERFLOW:g} log10 range",
                step=k,
            )
        x = np.asarray(eval_at(f, x))
    forward = 10.0**logmag * np.exp(1j * phase)
    inverse = 10.0 ** (-logmag) * np.exp(-1j * phase)
    return x, forward, inverse


def _check_injective(images: np.ndarray, origins: np.ndarray, m: int) -> None:
    if images.size < 2:
        return
    diffs = np.abs(images[:, None] - images[None, :])
    np.fill_diagonal(diffs, np.inf)
    i, j = np.unravel_index(int(np.argmin(diffs)), diffs.shape)
    if diffs[i, j] < INJECTIVITY_TOL:
        raise InjectivityViolation(
            f"f^{m} maps samples {origins[i]} and {origins[j]} to the "
            f"same point {images[i]}"
        )


def weighted_universal_step(
    f: MapExpr,
    omega: MapExpr,
    K: CompactRegion,
    g: MapExpr,
    L: CompactRegion,
    h: MapExpr,
    epsilon: float,
    m_max: int = 50,
    *,
    mesh: float = 1.0 / 128,
    seed: int = 0,
    boundary_n: int = BOUNDARY_SAMPLES,
    interior_n: int = INTERIOR_SAMPLES,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    validation_factor: int = DEFAULT_VALIDATION_FACTOR,
):
    """One transition of the weighted composition operator, realized by a fit.

    Finds the smallest m separating f^m(L) from K, then fits one polynomial
    p against g on K and against h(w)/prod_{k<m} omega(f^k(w)) at the points
    f^m(w).  The inverse branch of f^m is never computed: pairing each L
    sample with its image carries the same data.  Success means both held-out
    checks pass: |p - g| < epsilon on K and the weighted composition
    |prod omega * p(f^m(w)) - h(w)| < epsilon on L.

    Returns (SeparationWitness, RungeResult); raises NotFound, NotConverged,
    InjectivityViolation, WeightVanishes, or OverflowSignal.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    witness = _separation_search(f, K, L, m_max, mesh, start=0)
    m = witness.m

    k_pts = _region_cloud(K, boundary_n, interior_n, seed)
    g_vals = np.asarray(eval_at(g, k_pts))
    l_pts = _region_cloud(L, boundary_n, interior_n, seed + 1)
    h_vals = np.asarray(eval_at(h, l_pts))

    x, forward, inverse = _weight_products(f, omega, l_pts, m)
    _check_injective(x, l_pts, m)

    # The fit sees the data divided by the cocycle, so its tolerance has to
    # absorb the largest magnification the cocycle applies on the way back.
    max_forward = float(np.max(np.abs(forward)))
    eps_fit = min(epsilon, epsilon / max_forward)
    request = RungeRequest(
        (RungeTarget(k_pts, g_vals), RungeTarget(x, h_vals * inverse)),
        eps_fit,
        degree_cap,
        validation_factor,
    )
    result = runge_fit(request)
    p = result.polynomial

    _, val_k = _split_indices(k_pts.size, validation_factor)
    _, val_l = _split_indices(l_pts.size, validation_factor)
    err_k = _sup_error(p, k_pts[val_k], g_vals[val_k])
    weighted = forward[val_l] * np.asarray(eval_at(p, x[val_l]))
    err_l = float(np.max(np.abs(weighted - h_vals[val_l])))
    final = dataclasses.replace(
        result,
        validation_errors=(err_k, err_l),
        converged=bool(err_k < epsilon and err_l < epsilon),
    )
    if not final.converged:
        raise NotConverged(
            f"step validation error {max(err_k, err_l):g} not below {epsilon:g}",
            result=final,
        )
    return witness, final


def universal_step(
    f: MapExpr,
    K: CompactRegion,
    g: MapExpr,
    L: CompactRegion,
    h: MapExpr,
    epsilon: float,
    m_max: int = 50,
    **kwargs,
):
    """Unweighted transition step; same contract as the weighted one.

    Implemented as the weighted step with weight constant 1, whose cocycle
    reconstructs as exactly 1.0, so the two entry points produce identical
    bits for identical inputs.
    """
    return weighted_universal_step(
        f, Const(1.0), K, g, L, h, epsilon, m_max, **kwargs
    )


# --- weighted orbits -----------------------------------------------------------


@dataclass(frozen=True)
class WeightedOrbitRecord:
    """Values W^n(z) = prod_{j<n} omega(f^j(z)) * g(f^n(z)) for n = 0..N."""

    base_point: complex
    values: tuple
    log_magnitudes: tuple

    def to_jsonable(self) -> dict:
        return {
            "base_point": [self.base_point.real, self.base_point.imag],
            "values": [[v.real, v.imag] for v in self.values],
            "log_magnitudes": list(self.log_magnitudes),
        }


def weighted_orbit(
    f: MapExpr, omega: MapExpr, g: MapExpr, z: complex, N: int
) -> WeightedOrbitRecord:
    """Weighted orbit at one point, with a log10 ledger of the cocycle.

    The values multiply the raw complex weights directly (so integer data
    stays exact as long as it fits a double); the ledger mirrors the product
    in log10 magnitude and triggers OverflowSignal beyond +-300.
    """
    if N < 0:
        raise DomainError("orbit length must be nonnegative")
    z = complex(z)
    values = []
    ledger = []
    prod = complex(1.0)
    cum = 0.0
    x = z
    for n in range(N + 1):
        values.append(prod * complex(eval_at(g, x)))
        ledger.append(cum)
        if n == N:
            break
        w = complex(eval_at(omega, x))
        if abs(w) <= WEIGHT_FLOOR:
            raise WeightVanishes(f"weight vanished at orbit step {n} of {z}")
        prod *= w
        cum += math.log10(abs(w))
        if abs(cum) > LOG10_OVERFLOW:
            raise OverflowSignal(
                f"weight product left the +-{LOG10_OVERFLOW:g} log10 range",
                step=n,
                partial=WeightedOrbitRecord(z, tuple(values), tuple(ledger)),
            )
        x = complex(eval_at(f, x))
        if abs(x) > ESCAPE_MAGNITUDE:
            raise OverflowSignal(
                f"orbit escaped past {ESCAPE_MAGNITUDE:g}",
                step=n,
                partial=WeightedOrbitRecord(z, tuple(values), tuple(ledger)),
            )
    return WeightedOrbitRecord(z, tuple(values), tuple(ledger))


# --- diagonal builder ----------------------------------------------------------


@dataclass(frozen=True)
class StageRecord:
    """Diagnostics for one correction stage of the diagonal builder."""

    task_index: int
    n: int
    guard_radius: float
    epsilon: float
    degree: int
    fit_errors: tuple
    validation_errors: tuple
    earlier_sup: tuple

    def to_jsonable(self) -> dict:
        return {
            "task_index": self.task_index,
            "n": self.n,
            "guard_radius": self.guard_radius,
            "epsilon": self.epsilon,
            "degree": self.degree,
            "fit_errors": list(self.fit_errors),
            "validation_errors": list(self.validation_errors),
            "earlier_sup": list(self.earlier_sup),
        }


@dataclass(frozen=True)
class PartialUniversal:
    """Sum of correction stages approximating several targets at once."""

    polynomial: MapExpr
    stages: tuple
    guard_radii: tuple
    witness_indices: tuple
    final_errors: tuple
    epsilon: float
    converged: bool

    def to_jsonable(self) -> dict:
        return {
            "stages": [s.to_jsonable() for s in self.stages],
            "guard_radii": list(self.guard_radii),
            "witness_indices": list(self.witness_indices),
            "final_errors": list(self.final_errors),
            "epsilon": self.epsilon,
            "converged": self.converged,
        }


def _cover_min_clearance(cover) -> float:
    """Smallest |center| - radius over a cover: distance to the origin side."""
    return float(np.min(np.abs(cover.centers) - cover.radii))


def build_partial_universal(
    f: MapExpr,
    tasks,
    epsilon: float,
    radii=None,
    n_max: int = 60,
    *,
    mesh: float = DEFAULT_MESH,
    seed: int = 0,
    boundary_n: int = BOUNDARY_SAMPLES,
    interior_n: int = INTERIOR_SAMPLES,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    validation_factor: int = DEFAULT_VALIDATION_FACTOR,
    clearance: float = GUARD_CLEARANCE,
) -> PartialUniversal:
    """Diagonal construction: one polynomial hitting every (region, target).

    The schedule comes first: stage k gets an index n_k (strictly
    increasing) whose image cover of L_k clears the guard disc D(0, R_k) by
    the clearance factor.  Guard radii grow adaptively (or come from
    ``radii``) so that all earlier image regions stay inside.  Then stage k
    fits a correction q_k against the remaining defect h_k - g on
    f^{n_k}(L_k), against 0 on the guard disc, and against 0 on every later
    image site, with budget epsilon_k = epsilon / 2^k.  The later-site
    zeros keep each correction tame where future defects are measured;
    without them the running sum would have to be cancelled far outside its
    controlled region, which costs more relative precision than a double
    carries.  The guard disc is exact geometry, so its side of the
    separation needs no cover, and the geometric series of budgets caps
    every task's final error at twice its own stage budget.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    tasks = [(region, target) for region, target in tasks]
    if not tasks:
        return PartialUniversal(
            polynomial=Const(0.0),
            stages=(),
            guard_radii=(),
            witness_indices=(),
            final_errors=(),
            epsilon=epsilon,
            converged=True,
        )
    if radii is not None:
        radii = [float(r) for r in radii]
        if len(radii) != len(tasks):
            raise DomainError("radii schedule must match the task count")
        if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
            raise DomainError("radii must be positive and strictly increasing")

    clouds = [
        _region_cloud(region, boundary_n, interior_n, seed + k)
        for k, (region, _) in enumerate(tasks)
    ]
    target_vals = [np.asarray(eval_at(t, c)) for (_, t), c in zip(tasks, clouds)]
    extent = max(float(np.max(np.abs(c))) for c in clouds)

    g_sum: MapExpr = Const(0.0)
    stages = []
    guard_radii = []
    indices = []
    image_pts = []

    def _partial(converged: bool) -> PartialUniversal:
        final = tuple(
            float(np.max(np.abs(np.asarray(eval_at(g_sum, y)) - tv)))
            for y, tv in zip(image_pts, target_vals[: len(image_pts)])
        )
        return PartialUniversal(
            polynomial=g_sum,
            stages=tuple(stages),
            guard_radii=tuple(guard_radii),
            witness_indices=tuple(indices),
            final_errors=final,
            epsilon=epsilon,
            converged=converged,
        )

    # Schedule pass: pin every guard radius and image index before any fit,
    # so the fits can hold each correction down on the later sites too.
    prev_n = 0
    prev_r = None
    for k, (region, _target) in enumerate(tasks, start=1):
        if radii is not None:
            r_k = radii[k - 1]
            if extent > r_k:
                raise NotConverged(
                    f"stage {k}: guard radius {r_k:g} does not contain "
                    f"earlier structure of extent {extent:g}",
                    result=_partial(False),
                )
        else:
            floor = 2.0 * prev_r if prev_r is not None else 2.0 * max(1.0, extent)
            r_k = max(floor, 1.15 * extent)

        # Smallest strictly-increasing index whose image clears the guard.
        n_k = None
        for n in range(prev_n + 1, n_max + 1):
            cover = image_cover(compose_n(f, n), region, mesh)
            if _cover_min_clearance(cover) >= clearance * r_k:
                n_k = n
                break
        if n_k is None:
            raise NotConverged(
                f"stage {k}: no index up to {n_max} clears guard radius "
                f"{r_k:g} by factor {clearance:g}",
                result=_partial(False),
            )

        y = np.asarray(eval_at(compose_n(f, n_k), clouds[k - 1]))
        guard_radii.append(r_k)
        indices.append(n_k)
        image_pts.append(y)
        extent = max(extent, float(np.max(np.abs(y))))
        prev_n = n_k
        prev_r = r_k

    # Fit pass: each correction matches the remaining defect on its own
    # image, vanishes on the guard disc, and vanishes on every later site.
    zeros_like = [np.zeros(y.shape, complex) for y in image_pts]
    for k in range(1, len(tasks) + 1):
        eps_k = epsilon / 2.0**k
        y = image_pts[k - 1]
        defect = target_vals[k - 1] - np.asarray(eval_at(g_sum, y))
        guard_cloud = _region_cloud(
            disc(0.0, guard_radii[k - 1]), boundary_n, interior_n, seed + 1000 + k
        )
        fit_targets = [
            RungeTarget(y, defect),
            RungeTarget(guard_cloud, np.zeros(guard_cloud.shape, complex)),
        ]
        for later in range(k, len(tasks)):
            fit_targets.append(RungeTarget(image_pts[later], zeros_like[later]))
        request = RungeRequest(tuple(fit_targets), eps_k, degree_cap, validation_factor)
        try:
            rr = runge_fit(request)
        except NotConverged as exc:
            raise NotConverged(
                f"stage {k}: {exc}", result=_partial(False)
            ) from exc
        q_k = rr.polynomial
        earlier = tuple(
            float(np.max(np.abs(np.asarray(eval_at(q_k, pts)))))
            for pts in image_pts[: k - 1]
        )
        g_sum = q_k if k == 1 else Add(g_sum, q_k)
        stages.append(
            StageRecord(
                task_index=k - 1,
                n=indices[k - 1],
                guard_radius=guard_radii[k - 1],
                epsilon=eps_k,
                degree=rr.degree,
                fit_errors=rr.fit_errors,
                validation_errors=rr.validation_errors,
                earlier_sup=earlier,
            )
        )

    record = _partial(True)
    bad = [
        j
        for j, err in enumerate(record.final_errors)
        if err > 2.0 * epsilon / 2.0 ** (j + 1)
    ]
    if bad:
        record = dataclasses.replace(record, converged=False)
        raise NotConverged(
            f"tasks {bad} exceeded twice their stage budget", result=record
        )
    return record


# --- orbit density -------------------------------------------------------------


@dataclass(frozen=True)
class DensityRecord:
    """Best approximation index for one target along a composition orbit."""

    best_n: int
    best_error: float
    errors: tuple

    def to_jsonable(self) -> dict:
        return {
            "best_n": self.best_n,
            "best_error": self.best_error,
            "errors": list(self.errors),
        }


def orbit_density(
    f: MapExpr,
    g: MapExpr,
    targets,
    n_max: int,
    *,
    boundary_n: int = 64,
    interior_n: int = 32,
    seed: int = 0,
) -> list:
    """Sampled sup of |g(f^n(.)) - h| per target, minimized over n <= n_max.

    Ties go to the smallest n.  Orbit escapes or poles turn into +inf error
    entries rather than exceptions, so a partial schedule still reports.
    """
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    records = []
    for t_index, (region, target) in enumerate(targets):
        pts = _region_cloud(region, boundary_n, interior_n, seed + t_index)
        t_vals = np.asarray(eval_at(target, pts))
        errors = []
        x = pts.copy()
        for n in range(n_max + 1):
            with np.errstate(all="ignore"):
                gv = np.asarray(eval_at(g, x, check_poles=False))
                gap = np.abs(gv - t_vals)
            errors.append(
                float(np.max(gap)) if np.all(np.isfinite(gap)) else math.inf
            )
            if n < n_max:
                with np.errstate(all="ignore"):
                    x = np.asarray(eval_at(f, x, check_poles=False))
        best = int(np.argmin(errors))
        records.append(DensityRecord(best, errors[best], tuple(errors)))
    return records


# --- composition sequences -------------------------------------------------------


def composition_sequence_orbit(maps, mode: str, z: complex) -> list:
    """Orbit of z under a left or right composition sequence.

    Left yields F_n = f_n o ... o f_1 incrementally; Right yields
    G_n = f_1 o ... o f_n, recomputed per index since each step changes the
    innermost map.  Returns [F_1(z), ..., F_N(z)] (respectively G_n).  On a
    pole or escape the raised error carries the partial list in ``partial``.
    """
    maps = list(maps)
    mode_norm = mode.strip().lower()
    if mode_norm not in ("left", "right"):
        raise DomainError(f"mode must be Left or Right, got {mode!r}")
    z = complex(z)
    out = []

    def _step(expr, value, index):
        try:
            value = complex(eval_at(expr, value))
        except PoleError as exc:
            err = PoleError(f"composition step {index}: {exc}")
            err.partial = list(out)
            raise err from exc
        if abs(value) > ESCAPE_MAGNITUDE:
            raise OverflowSignal(
                f"composition escaped past {ESCAPE_MAGNITUDE:g}",
                step=index,
                partial=list(out),
            )
        return value

    if mode_norm == "left":
        v = z
        for n, expr in enumerate(maps, start=1):
            v = _step(expr, v, n)
            out.append(v)
    else:
        for n in range(1, len(maps) + 1):
            v = z
            for expr in maps[n - 1 :: -1]:
                v = _step(expr, v, n)
            out.append(v)
    return out


# --- cyclicity obstruction --------------------------------------------------------


@dataclass(frozen=True)
class CyclicityReport:
    """Contour integrals separating a candidate from the cyclic vector 1/(z-a)."""

    candidate_integral: complex
    witness_integral: complex
    reference: complex
    gap: float
    node_count: int

    def to_jsonable(self) -> dict:
        return {
            "candidate_integral": [
                self.candidate_integral.real,
                self.candidate_integral.imag,
            ],
            "witness_integral": [
                self.witness_integral.real,
                self.witness_integral.imag,
            ],
            "reference": [self.reference.real, self.reference.imag],
            "gap": self.gap,
            "node_count": self.node_count,
        }


def cyclicity_obstruction(
    candidate: MapExpr, contour: Contour, a: complex
) -> CyclicityReport:
    """Trapezoid contour integral of the candidate against the 1/(z-a) witness.

    On a circle the trapezoid rule with the exact parametric derivative is
    spectrally accurate, so polynomial candidates integrate to roundoff while
    the witness reproduces 2 pi i; the gap between the two is the obstruction.
    """
    a = complex(a)
    if abs(a - contour.center) >= contour.radius:
        raise DomainError("witness pole a must lie strictly inside the contour")
    zs = contour.nodes()
    weights = (
        (zs - contour.center)
        * (1j * contour.orientation)
        * (2.0 * np.pi / contour.node_count)
    )
    vals = np.asarray(eval_at(candidate, zs))
    candidate_integral = complex(np.sum(vals * weights))
    witness_integral = complex(np.sum(weights / (zs - a)))
    reference = 2j * np.pi * contour.orientation
    return CyclicityReport(
        candidate_integral=candidate_integral,
        witness_integral=witness_integral,
        reference=reference,
        gap=abs(candidate_integral - reference),
        node_count=contour.node_count,
    )


# --- finite sets -------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteUniversalReport:
    """Weighted-orbit hits of target vectors on a finite point set."""

    points: tuple
    per_target: tuple
    evacuating_observed: bool
    evacuation_threshold: float

    def to_jsonable(self) -> dict:
        return {
            "points": [[p.real, p.imag] for p in self.points],
            "per_target": [
                {"best_n": n, "best_error": e} for n, e in self.per_target
            ],
            "evacuating_observed": self.evacuating_observed,
            "evacuation_threshold": self.evacuation_threshold,
        }


def _finite_points(E) -> np.ndarray:
    if isinstance(E, FiniteSet):
        return np.asarray(E.points, dtype=complex)
    if isinstance(E, CompactRegion) and all(
        isinstance(c, FiniteSet) for c in E.components
    ):
        return np.concatenate(
            [np.asarray(c.points, dtype=complex) for c in E.components]
        )
    raise DomainError("E must be a finite point set")


def finite_set_universal_check(
    f: MapExpr,
    omega: MapExpr,
    E,
    targets,
    g: MapExpr,
    n_max: int,
) -> FiniteUniversalReport:
    """Best weighted-orbit match for each target vector on a finite set.

    Checks that iterates stay injective on the set (pairwise images at least
    1e-10 apart) and reports a heuristic evacuation flag: the last quarter of
    the orbit must stay outside twice the set's starting extent.  Injectivity
    is not evacuation; a cycle passes the former and fails the latter.
    Overflowing orbit tails degrade into +inf errors instead of raising.
    """
    pts = _finite_points(E)
    npts = pts.size
    target_rows = [np.asarray(t, dtype=complex).ravel() for t in targets]
    for row in target_rows:
        if row.size != npts:
            raise DomainError("each target vector must match the set size")
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")

    rows = []
    min_moduli = []
    x = pts.copy()
    prod = np.ones(npts, dtype=complex)
    cum = np.zeros(npts, dtype=float)
    orbit_alive = True
    ledger_ok = True
    for n in range(n_max + 1):
        if orbit_alive and ledger_ok:
            rows.append(prod * np.asarray(eval_at(g, x)))
        else:
            rows.append(None)
        # An escaped orbit has left every compact set, so its minimum
        # modulus counts as infinite for the evacuation heuristic.
        min_moduli.append(
            float(np.min(np.abs(x))) if orbit_alive else math.inf
        )
        if n == n_max or not orbit_alive:
            continue
        w = np.asarray(eval_at(omega, x))
        small = np.abs(w) <= WEIGHT_FLOOR
        if small.any():
            i = int(np.argmax(small))
            raise WeightVanishes(
                f"weight vanished at orbit step {n} of point {pts[i]}"
            )
        prod = prod * w
        cum += np.log10(np.abs(w))
        if float(np.max(np.abs(cum))) > LOG10_OVERFLOW:
            ledger_ok = False
        x = np.asarray(eval_at(f, x))
        _check_injective(x, pts, n + 1)
        if float(np.max(np.abs(x))) > ESCAPE_MAGNITUDE:
            orbit_alive = False

    per_target = []
    for row_vals in target_rows:
        errors = [
            float(np.max(np.abs(r - row_vals))) if r is not None else math.inf
            for r in rows
        ]
        errors = [e if math.isfinite(e) else math.inf for e in errors]
        best = int(np.argmin(errors))
        per_target.append((best, errors[best]))

    threshold = 2.0 * (float(np.max(np.abs(pts))) + 1.0)
    window = max(1, (n_max + 1) // 4)
    evacuating = all(m > threshold for m in min_moduli[-window:])
    return FiniteUniversalReport(
        points=tuple(complex(p) for p in pts),
        per_target=tuple(per_target),
        evacuating_observed=evacuating,
        evacuation_threshold=threshold,
    )
