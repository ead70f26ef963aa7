"""Zero counting by the argument principle and range probes near fixed points.

The probes here certify small claims (a value is attained inside a disc, a
winding number is an integer) and report larger ones (an essential
singularity's image spreads over a grid) as explicitly heuristic evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryZero,
    ConvergenceNotObserved,
    DegenerateError,
    DomainError,
    WindingUnresolved,
)
from .maps import Add, Compose, Const, MapExpr, compose_n, eval_at
from .regions import (
    ClosedDisc,
    CompactRegion,
    Polygon,
    polygon,
    sample_boundary,
    sample_interior,
)

BOUNDARY_FLOOR = 1e-8
WINDING_RESIDUAL_TOL = 0.1
# np.angle folds a true phase increment t into t - 2*pi*round(t/(2*pi)), so a
# root hiding between two samples (true jump above pi) shows up as a wrapped
# value of magnitude at least pi/2 as long as the true jump stays below
# 3*pi/2. Doubling on pi/2 therefore catches every single-root alias; a pair
# of roots inside one sample arc needs the doubled grid anyway.
PHASE_JUMP_LIMIT = math.pi / 2
MAX_WINDING_NODES = 2**16

APPROACH_TOL = 0.1


# --- zero counting -----------------------------------------------------------


@dataclass(frozen=True)
class ZeroCountReport:
    disc: ClosedDisc
    count: int
    winding_residual: float
    nodes_used: int

    def to_jsonable(self) -> dict:
        return {
            "disc": [self.disc.center.real, self.disc.center.imag, self.disc.radius],
            "count": self.count,
            "winding_residual": self.winding_residual,
            "nodes_used": self.nodes_used,
        }


def _as_disc(obj) -> ClosedDisc:
    if isinstance(obj, ClosedDisc):
        return obj
    if isinstance(obj, CompactRegion):
        if len(obj.components) == 1 and isinstance(obj.components[0], ClosedDisc):
            return obj.components[0]
    raise DomainError("zero counting needs a single closed disc")


def count_zeros(expr: MapExpr, disc_obj, nodes: int = 1024) -> ZeroCountReport:
    """Zeros of expr inside a disc, from the boundary winding number.

    The phase of expr is accumulated around the circle; any step whose
    wrapped phase jump reaches pi/2 may hide a root between the samples, so
    the node count doubles (up to 2^16) until all jumps are small.  Raises
    BoundaryZero when the sampled boundary modulus drops to 1e-8 (shrink or
    grow the disc slightly and retry), and WindingUnresolved when the jumps
    never settle or the accumulated total is far from a nonnegative integer.
    """
    d = _as_disc(disc_obj)
    n = int(nodes)
    if n < 8:
        raise DomainError("need at least 8 winding nodes")
    while True:
        zs = d.center + d.radius * np.exp(2j * np.pi * np.arange(n) / n)
        vals = np.asarray(eval_at(expr, zs))
        low = float(np.min(np.abs(vals)))
        if not np.all(np.isfinite(vals)) or low <= BOUNDARY_FLOOR:
            raise BoundaryZero(
                f"boundary modulus {low:g} at radius {d.radius:g} is too "
                "close to a zero"
            )
        jumps = np.angle(np.roll(vals, -1) / vals)
        if float(np.max(np.abs(jumps))) >= PHASE_JUMP_LIMIT:
            if n < MAX_WINDING_NODES:
                n *= 2
                continue
            raise WindingUnresolved(
                f"phase jumps stayed near pi at {MAX_WINDING_NODES} nodes"
            )
        total = float(np.sum(jumps)) / (2.0 * math.pi)
        count = round(total)
        residual = abs(total - count)
        if residual >= WINDING_RESIDUAL_TOL:
            raise WindingUnresolved(
                f"winding integral {total:g} is {residual:g} from an integer"
            )
        if count < 0:
            raise WindingUnresolved(
                f"negative winding {count} for a map declared pole-free"
            )
        return ZeroCountReport(d, int(count), residual, n)


# --- full range probes ---------------------------------------------------------


@dataclass(frozen=True)
class TargetOutcome:
    target: complex
    attained: bool
    witness_n: int
    witness_disc: ClosedDisc | None
    count: int
    note: str = ""

    def to_jsonable(self) -> dict:
        return {
            "target": [self.target.real, self.target.imag],
            "attained": self.attained,
            "witness_n": self.witness_n,
            "witness_disc": (
                None
                if self.witness_disc is None
                else [
                    self.witness_disc.center.real,
                    self.witness_disc.center.imag,
                    self.witness_disc.radius,
                ]
            ),
            "count": self.count,
            "note": self.note,
        }


@dataclass(frozen=True)
class FullRangeReport:
    base_point: complex | None
    radius: float
    outcomes: tuple
    schedule: tuple

    def to_jsonable(self) -> dict:
        return {
            "base_point": (
                None
                if self.base_point is None
                else [self.base_point.real, self.base_point.imag]
            ),
            "radius": self.radius,
            "outcomes": [o.to_jsonable() for o in self.outcomes],
            "schedule": list(self.schedule),
        }


def _core_disc(region: CompactRegion) -> ClosedDisc:
    """A disc inside the region on which zero counts are run."""
    if len(region.components) != 1:
        raise DomainError("base region must have a single component")
    comp = region.components[0]
    if isinstance(comp, ClosedDisc):
        return comp
    if isinstance(comp, Polygon):
        centroid = complex(np.mean(np.asarray(comp.vertices, dtype=complex)))
        verts = list(comp.vertices) + [comp.vertices[0]]
        rho = math.inf
        for a, b in zip(verts, verts[1:]):
            seg = b - a
            t = ((centroid - a) / seg).real if seg != 0 else 0.0
            t = min(max(t, 0.0), 1.0)
            rho = min(rho, abs(centroid - (a + t * seg)))
        if not rho > 0:
            raise DomainError("degenerate polygon core")
        return ClosedDisc(centroid, 0.9 * rho)
    raise DomainError("base region must be a disc or polygon")


def _normalize_base_point(z0):
    if z0 is None:
        return None
    z0 = complex(z0)
    if not (math.isfinite(z0.real) and math.isfinite(z0.imag)):
        return None
    return z0


def full_range_probe(
    f: MapExpr,
    g: MapExpr,
    z0,
    r: float,
    U_base: CompactRegion,
    targets,
    n_schedule,
    *,
    samples: int = 96,
    seed: int = 0,
    nodes: int = 1024,
    shrink: float = 0.99,
    shrink_retries: int = 5,
) -> FullRangeReport:
    """Check which targets g attains on forward images of a base region.

    ``z0`` is a finite accumulation point or None for infinity; the image
    condition at index n asks every sampled f^n(U_base) point to lie within
    r of z0 (respectively beyond modulus r).  A target counts as attained at
    the first scheduled n where the condition holds and g o f^n - target has
    winding count >= 1 over a slightly shrunk core disc of the base region;
    on a boundary zero the disc shrinks 1 percent and retries.  Raises
    ConvergenceNotObserved when no scheduled index meets the image condition.
    """
    z0 = _normalize_base_point(z0)
    if not r > 0:
        raise DomainError("radius parameter must be positive")
    schedule = [int(n) for n in n_schedule]
    if not schedule or any(n < 0 for n in schedule):
        raise DomainError("schedule must be nonempty and nonnegative")
    core = _core_disc(U_base)
    cloud = np.concatenate(
        [
            sample_boundary(U_base, samples),
            sample_interior(U_base, max(1, samples // 2), seed),
        ]
    )

    passing = []
    for n in schedule:
        with np.errstate(all="ignore"):
            img = np.asarray(eval_at(compose_n(f, n), cloud, check_poles=False))
        if not np.all(np.isfinite(img)):
            ok = z0 is None
        elif z0 is None:
            ok = bool(np.all(np.abs(img) > r))
        else:
            ok = bool(np.all(np.abs(img - z0) < r))
        if ok:
            passing.append(n)
    if not passing:
        raise ConvergenceNotObserved(
            f"image condition never held along schedule {schedule}"
        )

    outcomes = []
    for c in targets:
        c = complex(c)
        found = None
        note = "no scheduled index attained the value"
        for n in passing:
            expr = Add(Compose(g, compose_n(f, n)), Const(-c))
            d = ClosedDisc(core.center, core.radius * shrink)
            report = None
            for _ in range(shrink_retries):
                try:
                    report = count_zeros(expr, d, nodes)
                    break
                except BoundaryZero:
                    d = ClosedDisc(d.center, d.radius * shrink)
                except WindingUnresolved as exc:
                    note = f"winding unresolved at n={n}: {exc}"
                    break
            if report is not None and report.count >= 1:
                found = TargetOutcome(c, True, n, report.disc, report.count)
                break
        outcomes.append(
            found
            if found is not None
            else TargetOutcome(c, False, -1, None, 0, note)
        )
    return FullRangeReport(z0, float(r), tuple(outcomes), tuple(schedule))


# --- essential singularity sampling ---------------------------------------------


@dataclass(frozen=True)
class EssentialSingularityReport:
    """Heuristic Casorati-Weierstrass evidence; not a certificate."""

    radii: tuple
    fractions: tuple
    approached: tuple
    omitted: tuple
    picard_candidate: complex | None
    tolerance: float
    note: str = "heuristic sampling evidence"

    def to_jsonable(self) -> dict:
        return {
            "radii": list(self.radii),
            "fractions": list(self.fractions),
            "approached": [list(row) for row in self.approached],
            "omitted": [[v.real, v.imag] for v in self.omitted],
            "picard_candidate": (
                None
                if self.picard_candidate is None
                else [self.picard_candidate.real, self.picard_candidate.imag]
            ),
            "tolerance": self.tolerance,
            "note": self.note,
        }


def essential_singularity_probe(
    g: MapExpr,
    z0,
    radii,
    value_grid,
    samples_per_ring: int = 256,
    *,
    rings_per_annulus: int = 3,
) -> EssentialSingularityReport:
    """Fraction of a value grid approached on shrinking punctured annuli.

    For a finite z0 each radius rho samples rings_per_annulus circles spread
    between 0.6 and 1.0 times rho; for z0 = None (infinity) the circles grow
    from rho to 1.5 times rho instead.  A grid value counts as approached when
    some sampled image lands within 0.1 of it.  When exactly one grid value is
    never approached at any radius it is reported as the Picard candidate.
    Maps with an essential singularity need a generous rings_per_annulus: the
    image of a single circle is a thin curve, and only the radial sweep makes
    the sampled image fill out annuli in the target plane.  Diagnostic output
    only.
    """
    z0 = _normalize_base_point(z0)
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise DomainError("radii must be positive")
    grid = np.asarray([complex(v) for v in value_grid])
    if grid.size == 0:
        raise DomainError("value grid must be nonempty")
    if rings_per_annulus < 1:
        raise DomainError("rings_per_annulus must be at least 1")
    lo, hi = (1.0, 1.5) if z0 is None else (0.6, 1.0)
    if rings_per_annulus == 1:
        subs = (hi,)
    else:
        subs = tuple(np.linspace(lo, hi, rings_per_annulus))

    approached_rows = []
    fractions = []
    for rho in radii:
        pts = []
        for i, s in enumerate(subs):
            angles = (
                2 * np.pi * (np.arange(samples_per_ring) + i / len(subs))
                / samples_per_ring
            )
            ring = (rho * s) * np.exp(1j * angles)
            pts.append(ring if z0 is None else z0 + ring)
        pts = np.concatenate(pts)
        with np.errstate(all="ignore"):
            imgs = np.asarray(eval_at(g, pts, check_poles=False))
        imgs = imgs[np.isfinite(imgs)]
        if imgs.size == 0:
            row = np.zeros(grid.shape, dtype=bool)
        else:
            dist = np.min(np.abs(imgs[:, None] - grid[None, :]), axis=0)
            row = dist < APPROACH_TOL
        approached_rows.append(tuple(bool(b) for b in row))
        fractions.append(float(np.mean(row)))

    ever = np.any(np.asarray(approached_rows, dtype=bool), axis=0)
    omitted = tuple(complex(v) for v in grid[~ever])
    return EssentialSingularityReport(
        radii=tuple(radii),
        fractions=tuple(fractions),
        approached=tuple(approached_rows),
        omitted=omitted,
        picard_candidate=omitted[0] if len(omitted) == 1 else None,
        tolerance=APPROACH_TOL,
    )


# --- bounded-scaling demonstration ------------------------------------------------


@dataclass(frozen=True)
class JuliaBoundReport:
    M: float
    scaled_selfmap_ok: bool
    max_scaled_modulus: float

    def to_jsonable(self) -> dict:
        return {
            "M": self.M,
            "scaled_selfmap_ok": self.scaled_selfmap_ok,
            "max_scaled_modulus": self.max_scaled_modulus,
        }


def julia_not_plane_demo(
    g: MapExpr, sample_count: int = 512, *, seed: int = 0
) -> JuliaBoundReport:
    """Scale g by twice its sampled sup on the closed unit disc.

    The scaled map g/M then maps the disc well inside itself on fresh
    verification samples, which is the bounded-orbit ingredient of the
    argument that such a g cannot have the whole plane as its Julia set.
    Poles inside the disc surface as PoleError.
    """
    if sample_count < 8:
        raise DomainError("sample_count must be at least 8")
    unit = CompactRegion((ClosedDisc(0.0, 1.0),))
    calib = np.concatenate(
        [
            sample_boundary(unit, sample_count // 2),
            sample_interior(unit, sample_count // 2, seed),
        ]
    )
    m_val = 2.0 * float(np.max(np.abs(np.asarray(eval_at(g, calib)))))
    if m_val == 0.0:
        raise DegenerateError("map vanishes identically on the sample cloud")
    fresh = np.concatenate(
        [
            sample_boundary(unit, sample_count // 2),
            sample_interior(unit, sample_count // 2, seed + 1),
        ]
    )
    worst = float(np.max(np.abs(np.asarray(eval_at(g, fresh)))) / m_val)
    return JuliaBoundReport(
        M=m_val, scaled_selfmap_ok=worst < 1.0, max_scaled_modulus=worst
    )


# --- sector regions -----------------------------------------------------------------


def sector_region(
    vertex: complex,
    axis_angle: float,
    opening: float,
    radius: float,
    arc_points: int = 64,
) -> CompactRegion:
    """Circular sector as a polygon: vertex, two radial edges, sampled arc."""
    if not 0 < opening < 2 * math.pi:
        raise DomainError("opening must lie strictly between 0 and 2 pi")
    if not radius > 0:
        raise DomainError("radius must be positive")
    if arc_points < 2:
        raise DomainError("need at least 2 arc points")
    vertex = complex(vertex)
    angles = axis_angle - opening / 2 + opening * np.arange(arc_points) / (
        arc_points - 1
    )
    verts = [vertex] + [
        vertex + radius * complex(math.cos(a), math.sin(a)) for a in angles
    ]
    return polygon(verts)
