"""Unit-disc hyperbolic geometry and contraction analysis of inner-map chains.

The classifier follows the standard trichotomy for forward compositions of
holomorphic self-maps of the disc: distances between orbit pairs either
collapse to zero (contracting), stabilize at positive values (semi-
contracting), or are eventually carried isometrically. For chains of
degree-two Blaschke factors fixing the origin the first two cases are decided
by whether sum(1 - |a_n|) diverges.

Also here: the deterministic disc exhaustion of the unit disc and the greedy
construction of a factor chain whose partial compositions are nowhere
eventually injective (every exhaustion disc eventually contains a critical
point of the next factor).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DomainError
from .maps import MapExpr, blaschke_factor, eval_at, eval_deriv
from .regions import ClosedDisc

# Partial sums of (1 - |a_n|) above this count as numerically divergent.
# At horizon 5000 the harmonic chain reaches ~8.1 and the geometric chain
# stays near 1, so the cut sits between them with margin on both sides.
DIVERGENCE_THRESHOLD = 5.0
# Final hyperbolic traces below this count as collapsed.
CONTRACTING_THRESHOLD = 1e-3
# Constancy tolerance for the eventually-isometric verdict.
ISO_TOL = 1e-9
# Tail increment over the second half of the horizon for "sum converged".
CAUCHY_TAIL_TOL = 1e-6

DEFAULT_HORIZON = 5000
DEFAULT_PAIRS = ((0.3 + 0.0j, -0.2 + 0.1j), (0.4j, 0.2 + 0.0j))


def hyp_dist(z: complex, w: complex):
    """Hyperbolic distance on the unit disc (curvature -1).

    d(z, w) = log((1 + rho) / (1 - rho)) with rho = |z - w| / |1 - conj(w) z|.
    Accepts scalars or arrays; raises DomainError when a point leaves the
    open disc.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(w) >= 1):
        raise DomainError("hyp_dist needs points strictly inside the unit disc")
    rho = np.abs(z - w) / np.abs(1 - np.conj(w) * z)
    d = np.log((1 + rho) / (1 - rho))
    if d.ndim == 0:
        return float(d)
    return d


def critical_point(a: complex) -> complex:
    """The in-disc critical point of the factor z (z - a) / (1 - conj(a) z).

    Algebraically (1 - sqrt(1 - |a|^2)) / conj(a); evaluated in the
    cancellation-free form a / (1 + sqrt(1 - |a|^2)), writing 1 - |a|^2 as
    (1 - |a|)(1 + |a|) so parameters within 1e-12 of the unit circle keep
    full relative accuracy.
    """
    a = complex(a)
    mag = abs(a)
    if not 0 < mag < 1:
        raise DomainError(f"need 0 < |a| < 1, got |a| = {mag}")
    root = math.sqrt((1.0 - mag) * (1.0 + mag))
    return a / (1.0 + root)


def param_for_critical(c: complex) -> complex:
    """Inverse of :func:`critical_point`: a = 2c / (1 + |c|^2)."""
    c = complex(c)
    mag = abs(c)
    if not 0 < mag < 1:
        raise DomainError(f"need 0 < |c| < 1, got |c| = {mag}")
    return 2 * c / (1.0 + mag * mag)


def _factor_apply(a: complex, w):
    # Direct formula for the degree-two factor; fast path for long chains.
    return w * (w - a) / (1 - a.conjugate() * w)


@dataclass
class BlaschkeSequence:
    """A chain of degree-two Blaschke factors b_n(z) = z (z - a_n)/(1 - conj(a_n) z).

    Partial compositions are B_n = b_n o ... o b_1. Prefix orbits are memoized
    per starting point; the memo is guarded by a lock so a built sequence can
    be shared across threads.
    """

    params: tuple

    def __post_init__(self):
        params = tuple(complex(a) for a in self.params)
        for i, a in enumerate(params):
            if not 0 < abs(a) < 1:
                raise DomainError(f"parameter {i} has |a| = {abs(a)}, need 0 < |a| < 1")
        self.params = params
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.params)

    def factor(self, n: int) -> MapExpr:
        """The n-th factor as an expression tree (1-indexed)."""
        if not 1 <= n <= len(self.params):
            raise DomainError(f"factor index {n} outside 1..{len(self.params)}")
        return blaschke_factor(self.params[n - 1])

    def prefix_values(self, z: complex, n: int) -> list:
        """[z, B_1(z), ..., B_n(z)], extending the memoized orbit as needed."""
        if n > len(self.params):
            raise DomainError(f"prefix length {n} exceeds chain length {len(self.params)}")
        key = complex(z)
        with self._lock:
            orbit = self._memo.setdefault(key, [key])
            while len(orbit) <= n:
                k = len(orbit)
                orbit.append(complex(_factor_apply(self.params[k - 1], orbit[-1])))
            return orbit[: n + 1]


VERDICT_CONTRACTING = "Contracting"
VERDICT_SEMI = "SemiContracting"
VERDICT_ISOMETRIC = "EventuallyIsometric"
VERDICT_INCONCLUSIVE = "Inconclusive"


@dataclass
class ClassificationReport:
    verdict: str
    horizon: int
    pairs: tuple
    tail_partial_sums: np.ndarray  # partial sums of (1 - |multiplier_n|)
    traces: np.ndarray  # shape (n_pairs, horizon + 1), hyperbolic distances
    final_traces: np.ndarray
    iso_from: int | None
    notes: str = ""

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "horizon": self.horizon,
            "pairs": [[[p[0].real, p[0].imag], [p[1].real, p[1].imag]] for p in self.pairs],
            "tail_sum": float(self.tail_partial_sums[-1]),
            "final_traces": [float(t) for t in self.final_traces],
            "iso_from": self.iso_from,
            "notes": self.notes,
        }


def _sequence_factors(seq, horizon: int):
    """Normalize input to (apply_fn(n, values), multipliers array, is_blaschke)."""
    if isinstance(seq, BlaschkeSequence):
        if len(seq) < horizon:
            raise DomainError(f"chain length {len(seq)} is shorter than horizon {horizon}")
        params = np.asarray(seq.params[:horizon], dtype=complex)
        lam = np.abs(params)

        def apply(n: int, values: np.ndarray) -> np.ndarray:
            return _factor_apply(complex(params[n - 1]), values)

        return apply, lam, True
    factors = list(seq)
    if len(factors) < horizon:
        raise DomainError(f"factor list length {len(factors)} is shorter than horizon {horizon}")
    lam = np.asarray(
        [min(1.0, abs(complex(eval_deriv(m, 0.0)))) for m in factors[:horizon]], dtype=float
    )

    def apply(n: int, values: np.ndarray) -> np.ndarray:
        return eval_at(factors[n - 1], values)

    return apply, lam, False


def classify_sequence(
    seq,
    pairs=DEFAULT_PAIRS,
    horizon: int = DEFAULT_HORIZON,
) -> ClassificationReport:
    """Classify the forward composition chain on hyperbolic distance evidence.

    ``seq`` is a :class:`BlaschkeSequence` or an explicit list of disc
    self-map expressions (one per step). Evidence gathered over the horizon:
    partial sums of (1 - |b_n'(0)|) and hyperbolic distance traces
    d(B_n(z), B_n(z')) for each pair.

    Verdicts:

    * ``Contracting``: the multiplier sum is numerically divergent
      (> DIVERGENCE_THRESHOLD) and every trace ends below
      CONTRACTING_THRESHOLD.
    * ``SemiContracting``: the sum converged (tail increment below
      CAUCHY_TAIL_TOL over the second half) and traces stabilized at values
      above CONTRACTING_THRESHOLD.
    * ``EventuallyIsometric``: traces constant within ISO_TOL from some index
      in the first half onward. Degree-two factor chains are never
      isometries, so this verdict is reserved for general factor lists;
      for a BlaschkeSequence the convergent branch reports SemiContracting.
    * ``Inconclusive`` otherwise.

    The semi/isometric boundary is a documented heuristic: beyond the point
    where per-step contraction drops under machine precision the two are
    observationally identical, and only the structural degree-two argument
    separates them.
    """
    if horizon < 10:
        raise DomainError("horizon must be at least 10")
    pairs = tuple((complex(p[0]), complex(p[1])) for p in pairs)
    if not pairs:
        raise DomainError("need at least one probe pair")
    for z, w in pairs:
        if abs(z) >= 1 or abs(w) >= 1 or z == w:
            raise DomainError("probe pairs must be distinct points inside the disc")

    apply, lam, is_blaschke = _sequence_factors(seq, horizon)
    partial = np.cumsum(1.0 - lam)

    left = np.asarray([p[0] for p in pairs], dtype=complex)
    right = np.asarray([p[1] for p in pairs], dtype=complex)
    traces = np.empty((len(pairs), horizon + 1), dtype=float)
    traces[:, 0] = hyp_dist(left, right)
    for n in range(1, horizon + 1):
        left = apply(n, left)
        right = apply(n, right)
        traces[:, n] = hyp_dist(left, right)

    half = horizon // 2
    final = traces[:, -1]
    tail_sum = float(partial[-1])
    tail_late = float(partial[-1] - partial[half - 1])

    # Smallest index from which every trace stays within ISO_TOL of its final value.
    drift = np.abs(traces - final[:, None]).max(axis=0)
    beyond = np.maximum.accumulate(drift[::-1])[::-1]
    iso_idx = np.nonzero(beyond <= ISO_TOL)[0]
    iso_from = int(iso_idx[0]) if iso_idx.size else None

    verdict = VERDICT_INCONCLUSIVE
    notes = ""
    if tail_sum >= DIVERGENCE_THRESHOLD:
        if bool(np.all(final < CONTRACTING_THRESHOLD)):
            verdict = VERDICT_CONTRACTING
        else:
            notes = "multiplier sum diverged but traces have not collapsed; extend horizon"
    elif tail_late < CAUCHY_TAIL_TOL:
        if not is_blaschke and iso_from is not None and iso_from <= half:
            verdict = VERDICT_ISOMETRIC
        elif bool(np.all(final > CONTRACTING_THRESHOLD)):
            verdict = VERDICT_SEMI
            if is_blaschke and iso_from is not None and iso_from <= half:
                notes = (
                    "late traces are constant at machine precision; degree-two factors"
                    " cannot be isometries, so stabilization is reported as"
                    " semi-contracting"
                )
        else:
            notes = "multiplier sum converged but a trace collapsed; probe pair degenerate"
    else:
        notes = "multiplier sum neither clearly divergent nor Cauchy at this horizon"
    return ClassificationReport(
        verdict=verdict,
        horizon=horizon,
        pairs=pairs,
        tail_partial_sums=partial,
        traces=traces,
        final_traces=final,
        iso_from=iso_from,
        notes=notes,
    )


# --- deterministic disc exhaustion -------------------------------------------


def revisit_schedule(count: int) -> list:
    """First ``count`` terms of the diagonal revisit order 1,2,1,3,1,2,4,...

    Block d emits index d followed by 1..d-1, so every index recurs in every
    later block; any item list scheduled this way repeats each item
    infinitely often.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    out = []
    d = 1
    while len(out) < count:
        out.append(d)
        out.extend(range(1, d))
        d += 1
    return out[:count]


def _base_exhaustion(n: int) -> list:
    """First n admissible (center, radius) pairs in the documented order.

    Level L = 2, 3, ... carries radius 1/L and Gaussian-rational centers
    (p + q i)/L ordered lexicographically in (p, q), keeping those with
    |center| + 1/L < 1. Level 2 admits only the origin, so the base list
    starts with D(0, 1/2).
    """
    base = []
    level = 2
    while len(base) < n:
        r = 1.0 / level
        bound = level - 1  # |p + q i| < level - 1 keeps |center| + r < 1
        for p in range(-bound, bound + 1):
            for q in range(-bound, bound + 1):
                if math.hypot(p, q) < bound:
                    base.append(ClosedDisc(complex(p, q) / level, r))
        level += 1
    return base[:n]


def disc_exhaustion(count: int) -> list:
    """Deterministic exhaustion of the unit disc by closed rational discs.

    Returns ``count`` discs D(k, r) with |k| + r < 1, each recurring
    infinitely often under the revisit schedule; the first entry is always
    D(0, 1/2).
    """
    schedule = revisit_schedule(count)
    base = _base_exhaustion(max(schedule))
    return [base[j - 1] for j in schedule]


# --- nowhere eventually injective chain --------------------------------------


@dataclass(frozen=True)
class NoninjectiveStep:
    """Record of one greedy step: factor ``factor_index`` kills injectivity
    on the exhaustion disc ``exhaustion_index`` by placing its critical point
    at ``target`` = B_n(center)."""

    factor_index: int
    exhaustion_index: int
    center: complex
    target: complex


@dataclass
class NoninjectiveConstruction:
    sequence: BlaschkeSequence
    steps: tuple
    skips: tuple


# Stand-in parameter once a scheduled image underflows to exact zero; see
# build_noninjective_sequence. Any value well under 1e-9 works, this one
# leaves every derived quantity comfortably normal.
_UNDERFLOW_PARAM = 1e-12


def build_noninjective_sequence(exhaustion, length: int) -> NoninjectiveConstruction:
    """Greedy chain whose every tail fails injectivity on every exhaustion disc.

    Starts from a_1 = 1/2. At step n the next parameter solves
    critical_point(a_{n+1}) = B_n(k), where k is the center of the scheduled
    exhaustion disc, so b_{n+1} has a critical point exactly on the image of
    that disc's center. Origin-centered discs have B_n(k) = 0 exactly (every
    factor fixes 0) and no factor puts a critical point there; those schedule
    entries are skipped and recorded.

    The images shrink roughly quadratically once the parameters get small, so
    past a dozen or so factors B_n(k) underflows to exact zero even for
    off-origin centers. The true next parameter is about twice the image
    value, unrepresentable in a double, and skipping would starve the
    schedule. Those steps continue with _UNDERFLOW_PARAM instead; the
    derivative of the new factor at the recorded (zero) point then has
    magnitude |a|, three decades inside the 1e-9 vanishing tolerance.
    """
    if length < 1:
        raise DomainError("length must be >= 1")
    discs = list(exhaustion)
    if not discs:
        raise DomainError("exhaustion must be non-empty")
    params = [0.5 + 0.0j]
    values = {}  # exhaustion index (1-based) -> B_n(center) under current prefix
    steps = []
    skips = []
    schedule = iter(revisit_schedule(8 * length + 64))

    def current_value(j: int, n: int) -> complex:
        if j not in values:
            v = complex(discs[(j - 1) % len(discs)].center)
            for a in params[:n]:
                v = _factor_apply(a, v)
            values[j] = v
        return values[j]

    while len(params) < length:
        n = len(params)
        try:
            j = next(schedule)
        except StopIteration as exc:  # pragma: no cover - schedule is oversized
            raise DegenerateError("revisit schedule exhausted") from exc
        target = current_value(j, n)
        center = discs[(j - 1) % len(discs)].center
        if target == 0 and center == 0:
            skips.append(NoninjectiveStep(n + 1, j, center, target))
            continue
        if target == 0:
            a_next = complex(_UNDERFLOW_PARAM)
        else:
            a_next = param_for_critical(target)
        params.append(a_next)
        steps.append(
            NoninjectiveStep(n + 1, j, discs[(j - 1) % len(discs)].center, target)
        )
        for key in values:
            values[key] = complex(_factor_apply(a_next, values[key]))
    return NoninjectiveConstruction(
        sequence=BlaschkeSequence(tuple(params)), steps=tuple(steps), skips=tuple(skips)
    )


# --- wandering orbit model ----------------------------------------------------


@dataclass
class WanderingModel:
    """Orbit model on a chain of translated unit discs U_n = t_n + D.

    The step from U_n to U_{n+1} is z -> t_{n+1} + m_{n+1}(z - t_n) where
    m_{n+1} is the n-th entry of ``factors`` (any holomorphic self-maps of
    the closed unit disc). Translation centers must be pairwise more than 2
    apart so the discs never meet.
    """

    factors: tuple
    translations: tuple

    def __post_init__(self):
        self.factors = tuple(self.factors)
        self.translations = tuple(complex(t) for t in self.translations)
        if len(self.translations) < 2:
            raise DomainError("need at least two translation centers")
        t = self.translations
        for i in range(len(t)):
            for j in range(i + 1, len(t)):
                if abs(t[i] - t[j]) <= 2:
                    raise DomainError(
                        f"translation centers {i} and {j} are within distance 2"
                    )

    @classmethod
    def from_blaschke(cls, seq: BlaschkeSequence, translations) -> "WanderingModel":
        return cls(
            factors=tuple(seq.factor(n) for n in range(1, len(seq) + 1)),
            translations=tuple(translations),
        )


def model_orbit(model: WanderingModel, z0: complex, n: int) -> list:
    """Orbit [z_0, ..., z_n] through the translated discs of the model."""
    t = model.translations
    if n > len(t) - 1 or n > len(model.factors):
        raise DomainError(
            f"orbit length {n} exceeds model data "
            f"({len(model.factors)} factors, {len(t)} centers)"
        )
    z0 = complex(z0)
    if abs(z0 - t[0]) > 1:
        raise DomainError("starting point must lie in the first disc")
    orbit = [z0]
    for k in range(n):
        w = orbit[-1] - t[k]
        orbit.append(t[k + 1] + complex(eval_at(model.factors[k], w)))
    return orbit


# --- parameter files ----------------------------------------------------------


def load_params(path) -> list:
    """Read a newline-delimited "re im" parameter file."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise DomainError(f"{path}:{lineno}: expected 're im', got {text!r}")
            out.append(complex(float(parts[0]), float(parts[1])))
    return out


def save_params(path, params) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in params:
            a = complex(a)
            fh.write(f"{a.real!r} {a.imag!r}\n")
