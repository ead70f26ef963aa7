"""Compact plane regions, boundary sampling, and certified disc covers.

Regions are finite unions of closed discs, simple polygons and finite point
sets. The cover machinery converts a region into a union of small discs and
pushes it forward through a holomorphic map with a sampled Cauchy-type
Lipschitz bound, which is what the run-away and separation searches consume.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MapSpecError, MeshTooCoarse
from .maps import MapExpr, eval_at

# Radius used for the degenerate "point disc" images of finite sets.
POINT_RADIUS = 1e-300
# Default blow-up cap for the cover Lipschitz bound.
BLOWUP_CAP = 1e6
# Circle samples used for the sampled Cauchy bound in image_cover.
CIRCLE_SAMPLES = 64


def _worker_count() -> int:
    """Worker cap from FATOULAB_THREADS (0 or unset = auto)."""
    raw = os.environ.get("FATOULAB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"FATOULAB_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise DomainError("FATOULAB_THREADS must be >= 0")
    if n == 0:
        return min(4, os.cpu_count() or 1)
    return n


@dataclass(frozen=True)
class ClosedDisc:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise DomainError("disc radius must be positive")

    def scaled(self, factor: float) -> "ClosedDisc":
        return ClosedDisc(self.center, self.radius * factor)

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) <= self.radius


@dataclass(frozen=True)
class Polygon:
    """Simple (non-self-intersecting) closed polygon, vertices in order."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 3:
            raise DomainError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)
        self._check_simple()

    def _check_simple(self):
        n = len(self.vertices)
        segs = [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # shared endpoint with a neighbour is fine
                if _segments_cross(*segs[i], *segs[j]):
                    raise DomainError(f"polygon self-intersects (edges {i} and {j})")

    def contains(self, z: complex) -> bool:
        return bool(_points_in_polygon(np.asarray([z], dtype=complex), self.vertices)[0])


@dataclass(frozen=True)
class FiniteSet:
    points: tuple

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        if not pts:
            raise DomainError("finite set must be non-empty")
        object.__setattr__(self, "points", pts)

    def contains(self, z: complex) -> bool:
        return any(abs(z - p) < 1e-12 for p in self.points)


Component = object  # ClosedDisc | Polygon | FiniteSet


@dataclass(frozen=True)
class CompactRegion:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("region needs at least one component")
        for c in comps:
            if not isinstance(c, (ClosedDisc, Polygon, FiniteSet)):
                raise DomainError(f"unsupported region component: {c!r}")
        object.__setattr__(self, "components", comps)

    def contains(self, z: complex) -> bool:
        return any(c.contains(z) for c in self.components)


def disc(center: complex, radius: float) -> CompactRegion:
    return CompactRegion((ClosedDisc(center, radius),))


def polygon(vertices) -> CompactRegion:
    return CompactRegion((Polygon(tuple(vertices)),))


def finite_set(points) -> CompactRegion:
    return CompactRegion((FiniteSet(tuple(points)),))


def _cross(o: complex, a: complex, b: complex) -> float:
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    return False


def _points_in_polygon(points: np.ndarray, vertices: tuple) -> np.ndarray:
    """Even-odd ray casting, vectorized over points."""
    px, py = points.real, points.imag
    inside = np.zeros(points.shape, dtype=bool)
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        cond = (a.imag > py) != (b.imag > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = (b.real - a.real) * (py - a.imag) / (b.imag - a.imag) + a.real
        hit = cond & (px < xcross)
        inside ^= hit
    return inside


def _dist_to_edges(points: np.ndarray, vertices: tuple) -> np.ndarray:
    best = np.full(points.shape, np.inf)
    n = len(vertices)
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        ab = b - a
        denom = abs(ab) ** 2
        t = np.clip(((points - a) * np.conj(ab)).real / denom, 0.0, 1.0)
        best = np.minimum(best, np.abs(points - (a + t * ab)))
    return best


# --- boundary sampling -------------------------------------------------------


def sample_boundary(region: CompactRegion, n_per_component: int) -> np.ndarray:
    """Deterministic boundary samples, concatenated per component.

    Discs sample n equally spaced angles starting at angle 0; polygons sample
    n points equally spaced in arclength along the edge chain starting at the
    first vertex; finite sets contribute their points as-is. Eight or more
    points per component is the useful regime.
    """
    if n_per_component < 1:
        raise DomainError("n_per_component must be >= 1")
    out = []
    for comp in region.components:
        if isinstance(comp, ClosedDisc):
            angles = 2 * np.pi * np.arange(n_per_component) / n_per_component
            out.append(comp.center + comp.radius * np.exp(1j * angles))
        elif isinstance(comp, Polygon):
            verts = np.asarray(comp.vertices + (comp.vertices[0],), dtype=complex)
            seg_len = np.abs(np.diff(verts))
            cum = np.concatenate([[0.0], np.cumsum(seg_len)])
            total = cum[-1]
            s = total * np.arange(n_per_component) / n_per_component
            idx = np.searchsorted(cum, s, side="right") - 1
            idx = np.clip(idx, 0, len(seg_len) - 1)
            frac = (s - cum[idx]) / seg_len[idx]
            out.append(verts[idx] + frac * (verts[idx + 1] - verts[idx]))
        elif isinstance(comp, FiniteSet):
            out.append(np.asarray(comp.points, dtype=complex))
    return np.concatenate(out)


def sample_interior(region: CompactRegion, count: int, seed: int = 0) -> np.ndarray:
    """Seeded quasi-uniform interior samples (for brute-force validation)."""
    rng = np.random.default_rng(seed)
    out = []
    per = max(1, count // len(region.components))
    for comp in region.components:
        if isinstance(comp, ClosedDisc):
            u = rng.random(per)
            theta = rng.random(per) * 2 * np.pi
            out.append(comp.center + comp.radius * np.sqrt(u) * np.exp(1j * theta))
        elif isinstance(comp, Polygon):
            verts = comp.vertices
            xs = [v.real for v in verts]
            ys = [v.imag for v in verts]
            got = []
            while len(got) < per:
                cand = (
                    rng.uniform(min(xs), max(xs), per * 2)
                    + 1j * rng.uniform(min(ys), max(ys), per * 2)
                )
                mask = _points_in_polygon(cand, verts)
                got.extend(cand[mask].tolist())
            out.append(np.asarray(got[:per], dtype=complex))
        elif isinstance(comp, FiniteSet):
            pts = np.asarray(comp.points, dtype=complex)
            reps = int(np.ceil(per / len(pts)))
            out.append(np.tile(pts, reps)[:per])
    return np.concatenate(out)[:count]


# --- disc covers -------------------------------------------------------------


@dataclass(frozen=True)
class DiscCover:
    """Union of discs known to contain some region or image."""

    centers: np.ndarray
    radii: np.ndarray
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "centers", np.asarray(self.centers, dtype=complex))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        if self.centers.shape != self.radii.shape or self.centers.ndim != 1:
            raise DomainError("cover centers/radii must be matching 1-d arrays")
        if self.centers.size == 0:
            raise DomainError("cover must contain at least one disc")

    def __len__(self) -> int:
        return int(self.centers.size)

    def bound_radius(self) -> float:
        """Radius of a disc about 0 containing the whole cover."""
        return float(np.max(np.abs(self.centers) + self.radii))


def _grid_for_disc(comp: ClosedDisc, mesh: float) -> np.ndarray:
    rho = mesh
    s = mesh * math.sqrt(2.0)
    reach = comp.radius + rho
    n = int(math.ceil(reach / s))
    k = np.arange(-n, n + 1)
    gx, gy = np.meshgrid(k * s, k * s)
    pts = comp.center + gx.ravel() + 1j * gy.ravel()
    keep = np.abs(pts - comp.center) <= reach
    return pts[keep]


def _grid_for_polygon(comp: Polygon, mesh: float) -> np.ndarray:
    rho = mesh
    s = mesh * math.sqrt(2.0)
    xs = [v.real for v in comp.vertices]
    ys = [v.imag for v in comp.vertices]
    x0, x1 = min(xs) - rho, max(xs) + rho
    y0, y1 = min(ys) - rho, max(ys) + rho
    nx = int(math.ceil((x1 - x0) / s)) + 1
    ny = int(math.ceil((y1 - y0) / s)) + 1
    gx, gy = np.meshgrid(x0 + np.arange(nx) * s, y0 + np.arange(ny) * s)
    pts = gx.ravel() + 1j * gy.ravel()
    inside = _points_in_polygon(pts, comp.vertices)
    near = _dist_to_edges(pts, comp.vertices) <= rho
    return pts[inside | near]


def self_cover(region: CompactRegion, mesh: float) -> DiscCover:
    """Cover a region by discs of radius ``mesh`` on a square grid.

    Every grid cell that can touch the region contributes a disc, so the
    union of discs contains the region; discs may stick out by up to one
    mesh length.
    """
    if mesh <= 0:
        raise DomainError("mesh must be positive")
    centers = []
    radii = []
    for comp in region.components:
        if isinstance(comp, ClosedDisc):
            pts = _grid_for_disc(comp, mesh)
            centers.append(pts)
            radii.append(np.full(pts.shape, mesh))
        elif isinstance(comp, Polygon):
            pts = _grid_for_polygon(comp, mesh)
            centers.append(pts)
            radii.append(np.full(pts.shape, mesh))
        elif isinstance(comp, FiniteSet):
            pts = np.asarray(comp.points, dtype=complex)
            centers.append(pts)
            radii.append(np.full(pts.shape, POINT_RADIUS))
    return DiscCover(np.concatenate(centers), np.concatenate(radii), source="self")


def image_cover(
    f: MapExpr,
    region: CompactRegion,
    mesh: float,
    *,
    blowup_cap: float = BLOWUP_CAP,
    circle_samples: int = CIRCLE_SAMPLES,
) -> DiscCover:
    """Certified-style cover of f(region) from sampled Cauchy estimates.

    Each mesh disc D(z, rho) of the region contributes D(f(z), rho * L) where
    L = max |f(w) - f(z)| over the sampled circle |w - z| = 2 rho, divided by
    rho. Since f - f(z) maps D(z, 2 rho) into a disc of that max radius, the
    Schwarz-Pick bound makes L a true Lipschitz constant on D(z, rho), up to
    the circle being sampled at ``circle_samples`` points. Finite-set
    components map straight to point discs.

    Raises MeshTooCoarse when rho * L exceeds ``blowup_cap``.
    """
    if mesh <= 0:
        raise DomainError("mesh must be positive")
    centers = []
    radii = []
    offsets = 2 * mesh * np.exp(
        2j * np.pi * np.arange(circle_samples) / circle_samples
    )
    for comp in region.components:
        if isinstance(comp, FiniteSet):
            pts = np.asarray(comp.points, dtype=complex)
            centers.append(np.asarray([complex(eval_at(f, p)) for p in pts]))
            radii.append(np.full(pts.shape, POINT_RADIUS))
            continue
        if isinstance(comp, ClosedDisc):
            pts = _grid_for_disc(comp, mesh)
        else:
            pts = _grid_for_polygon(comp, mesh)
        fc = _eval_parallel(f, pts)
        circle = pts[:, None] + offsets[None, :]
        fcircle = _eval_parallel(f, circle)
        lip = np.max(np.abs(fcircle - fc[:, None]), axis=1) / mesh
        worst = float(np.max(lip) * mesh)
        if worst > blowup_cap:
            raise MeshTooCoarse(
                f"cover radius {worst:g} exceeds cap {blowup_cap:g}; shrink the mesh"
            )
        centers.append(fc)
        radii.append(mesh * lip)
    return DiscCover(np.concatenate(centers), np.concatenate(radii), source="image")


def _eval_parallel(f: MapExpr, pts: np.ndarray) -> np.ndarray:
    """Evaluate f over an array, splitting across FATOULAB_THREADS workers."""
    workers = _worker_count()
    if workers <= 1 or pts.shape[0] < 4 * workers:
        return np.asarray(eval_at(f, pts), dtype=complex)
    blocks = np.array_split(np.arange(pts.shape[0]), workers)
    out = np.empty(pts.shape, dtype=complex)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(idx, pool.submit(eval_at, f, pts[idx])) for idx in blocks if idx.size]
        for idx, fut in futures:
            out[idx] = fut.result()
    return out


@dataclass(frozen=True)
class CoverSeparation:
    disjoint: bool
    margin: float


def covers_disjoint(a: DiscCover, b: DiscCover) -> CoverSeparation:
    """Pairwise gap between two covers: margin = min(|ca-cb| - ra - rb)."""
    margin = math.inf
    chunk = 512
    for i in range(0, len(a), chunk):
        ca = a.centers[i : i + chunk, None]
        ra = a.radii[i : i + chunk, None]
        gaps = np.abs(ca - b.centers[None, :]) - ra - b.radii[None, :]
        margin = min(margin, float(gaps.min()))
    return CoverSeparation(disjoint=margin > 0, margin=margin)


# --- contours ----------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """Circular quadrature contour; node_count is a power of two >= 64."""

    center: complex
    radius: float
    orientation: int = 1
    node_count: int = 512

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise DomainError("contour radius must be positive")
        if self.orientation not in (1, -1):
            raise DomainError("orientation must be +1 or -1")
        n = self.node_count
        if n < 64 or (n & (n - 1)) != 0:
            raise DomainError("node_count must be a power of two >= 64")

    def nodes(self) -> np.ndarray:
        angles = 2 * np.pi * np.arange(self.node_count) / self.node_count
        return self.center + self.radius * np.exp(1j * self.orientation * angles)


# --- JSON region specs -------------------------------------------------------
#
# Schema: {"discs": [[cx, cy, r], ...], "polygons": [[[x, y], ...], ...],
#          "points": [[x, y], ...]}; every key optional, at least one present.


def parse_region(spec, path: str = "$") -> CompactRegion:
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise MapSpecError(f"invalid JSON at {path}: {exc}") from exc
    if not isinstance(spec, dict):
        raise MapSpecError(f"expected an object at {path}")
    comps = []
    for i, entry in enumerate(spec.get("discs", [])):
        p = f"{path}.discs[{i}]"
        if not (isinstance(entry, list) and len(entry) == 3):
            raise MapSpecError(f"expected [cx, cy, r] at {p}")
        try:
            comps.append(ClosedDisc(complex(entry[0], entry[1]), float(entry[2])))
        except (TypeError, DomainError) as exc:
            raise MapSpecError(f"bad disc at {p}: {exc}") from exc
    for i, entry in enumerate(spec.get("polygons", [])):
        p = f"{path}.polygons[{i}]"
        if not isinstance(entry, list):
            raise MapSpecError(f"expected a vertex list at {p}")
        try:
            comps.append(Polygon(tuple(complex(v[0], v[1]) for v in entry)))
        except (TypeError, IndexError, DomainError) as exc:
            raise MapSpecError(f"bad polygon at {p}: {exc}") from exc
    pts = spec.get("points", [])
    if pts:
        try:
            comps.append(FiniteSet(tuple(complex(v[0], v[1]) for v in pts)))
        except (TypeError, IndexError, DomainError) as exc:
            raise MapSpecError(f"bad points at {path}.points: {exc}") from exc
    if not comps:
        raise MapSpecError(f"region at {path} has no components")
    return CompactRegion(tuple(comps))


def region_to_json(region: CompactRegion) -> dict:
    discs = []
    polys = []
    points = []
    for comp in region.components:
        if isinstance(comp, ClosedDisc):
            discs.append([comp.center.real, comp.center.imag, comp.radius])
        elif isinstance(comp, Polygon):
            polys.append([[v.real, v.imag] for v in comp.vertices])
        elif isinstance(comp, FiniteSet):
            points.extend([[p.real, p.imag] for p in comp.points])
    out = {}
    if discs:
        out["discs"] = discs
    if polys:
        out["polygons"] = polys
    if points:
        out["points"] = points
    return out
