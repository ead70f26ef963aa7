"""Holomorphic map expressions: a small immutable AST with exact derivatives.

The AST covers the maps the rest of the package composes and iterates:
polynomials, Moebius transforms, integer powers, products, sums, exp, affine
maps and explicit composition. Derivatives are produced symbolically by tree
transformation (never by finite differences), so multipliers and critical
points come out at full double precision.

Expressions evaluate on scalars or on numpy arrays; array evaluation is what
the cover and rendering code relies on.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import DomainError, MapSpecError, OverflowSignal, PoleError

# Orbit values beyond this magnitude count as escaped to infinity.
ESCAPE_MAGNITUDE = 1e150
# Relative denominator threshold for declaring a Moebius pole hit.
POLE_RTOL = 1e-14

ComplexLike = Union[complex, float, int]


class MapExpr:
    """Base class for expression nodes. Instances are immutable and hashable."""

    __slots__ = ()

    def __call__(self, z):
        return eval_at(self, z)


@dataclass(frozen=True)
class Const(MapExpr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Var(MapExpr):
    """The identity map z -> z."""


@dataclass(frozen=True)
class Poly(MapExpr):
    """Polynomial with coefficients in ascending degree order."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if not coeffs:
            raise DomainError("Poly needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        for k in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return 0


@dataclass(frozen=True)
class Mobius(MapExpr):
    """z -> (a z + b) / (c z + d), with a d - b c != 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.a * self.d - self.b * self.c == 0:
            raise DomainError("degenerate Moebius: ad - bc = 0")


@dataclass(frozen=True)
class Pow(MapExpr):
    """Integer power of an inner expression, k >= 1."""

    inner: MapExpr
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise DomainError(f"Pow exponent must be a positive integer, got {self.k!r}")


@dataclass(frozen=True)
class Compose(MapExpr):
    outer: MapExpr
    inner: MapExpr


@dataclass(frozen=True)
class Mul(MapExpr):
    left: MapExpr
    right: MapExpr


@dataclass(frozen=True)
class Add(MapExpr):
    left: MapExpr
    right: MapExpr


@dataclass(frozen=True)
class Exp(MapExpr):
    inner: MapExpr


@dataclass(frozen=True)
class Affine(MapExpr):
    """z -> scale * z + shift."""

    scale: complex
    shift: complex

    def __post_init__(self):
        object.__setattr__(self, "scale", complex(self.scale))
        object.__setattr__(self, "shift", complex(self.shift))


def blaschke_factor(a: ComplexLike) -> MapExpr:
    """Degree-two inner factor z * (z - a) / (1 - conj(a) z) with 0 < |a| < 1.

    Fixes the origin, maps the closed unit disc into itself, and has one
    critical point inside the disc (see :func:`fatoulab.hyperbolic.critical_point`).
    """
    a = complex(a)
    if not 0 < abs(a) < 1:
        raise DomainError(f"Blaschke factor parameter needs 0 < |a| < 1, got |a| = {abs(a)}")
    return Mul(Var(), Mobius(1, -a, -a.conjugate(), 1))


def _const_like(value: complex, z):
    if isinstance(z, np.ndarray):
        return np.full(z.shape, value, dtype=complex)
    return value


def _check_pole(den, scale, expr):
    bad = abs(den) < POLE_RTOL * scale
    if isinstance(bad, np.ndarray):
        hit = bool(np.any(bad | (den == 0)))
    else:
        hit = bool(bad) or den == 0
    if hit:
        raise PoleError(f"Moebius denominator vanished while evaluating {expr!r}")


def eval_at(expr: MapExpr, z, *, check_poles: bool = True):
    """Evaluate ``expr`` at ``z`` (complex scalar or numpy complex array).

    Raises
    ------
    PoleError
        When |c z + d| < 1e-14 (|c z| + |d|) in any Moebius node and
        ``check_poles`` is on. With ``check_poles=False`` poles produce
        inf/nan and are left to the caller (render loops use this).
    """
    if isinstance(expr, Const):
        return _const_like(expr.value, z)
    if isinstance(expr, Var):
        return z
    if isinstance(expr, Affine):
        return expr.scale * z + expr.shift
    if isinstance(expr, Poly):
        coeffs = expr.coeffs
        if len(coeffs) == 1:
            return _const_like(coeffs[0], z)
        acc = coeffs[-1]
        for c in coeffs[-2::-1]:
            acc = acc * z + c
        return acc
    if isinstance(expr, Mobius):
        num = expr.a * z + expr.b
        den = expr.c * z + expr.d
        if check_poles:
            _check_pole(den, abs(expr.c * z) + abs(expr.d), expr)
            return num / den
        with np.errstate(divide="ignore", invalid="ignore"):
            return num / den
    if isinstance(expr, Pow):
        v = eval_at(expr.inner, z, check_poles=check_poles)
        return v**expr.k
    if isinstance(expr, Compose):
        v = eval_at(expr.inner, z, check_poles=check_poles)
        return eval_at(expr.outer, v, check_poles=check_poles)
    if isinstance(expr, Mul):
        return eval_at(expr.left, z, check_poles=check_poles) * eval_at(
            expr.right, z, check_poles=check_poles
        )
    if isinstance(expr, Add):
        return eval_at(expr.left, z, check_poles=check_poles) + eval_at(
            expr.right, z, check_poles=check_poles
        )
    if isinstance(expr, Exp):
        v = eval_at(expr.inner, z, check_poles=check_poles)
        if isinstance(v, np.ndarray):
            return np.exp(v)
        return cmath.exp(v)
    raise TypeError(f"not a MapExpr: {expr!r}")


def _mul(left: MapExpr, right: MapExpr) -> MapExpr:
    # Folding keeps derivative trees small; used only inside the differentiator.
    if isinstance(left, Const):
        if left.value == 0:
            return Const(0)
        if left.value == 1:
            return right
        if isinstance(right, Const):
            return Const(left.value * right.value)
    if isinstance(right, Const):
        if right.value == 0:
            return Const(0)
        if right.value == 1:
            return left
    return Mul(left, right)


def _add(left: MapExpr, right: MapExpr) -> MapExpr:
    if isinstance(left, Const) and left.value == 0:
        return right
    if isinstance(right, Const) and right.value == 0:
        return left
    if isinstance(left, Const) and isinstance(right, Const):
        return Const(left.value + right.value)
    return Add(left, right)


@lru_cache(maxsize=None)
def derivative(expr: MapExpr) -> MapExpr:
    """Symbolic derivative of ``expr`` as a new expression tree."""
    if isinstance(expr, Const):
        return Const(0)
    if isinstance(expr, Var):
        return Const(1)
    if isinstance(expr, Affine):
        return Const(expr.scale)
    if isinstance(expr, Poly):
        if len(expr.coeffs) == 1:
            return Const(0)
        return Poly(tuple(k * c for k, c in enumerate(expr.coeffs) if k > 0))
    if isinstance(expr, Mobius):
        det = expr.a * expr.d - expr.b * expr.c
        if expr.c == 0:
            # Affine case (az+b)/d; the generic form below would build a
            # degenerate Moebius for the reciprocal.
            return Const(det / (expr.d * expr.d))
        # (az+b)/(cz+d) differentiates to det / (cz+d)^2.
        return _mul(Const(det), Pow(Mobius(0, 1, expr.c, expr.d), 2))
    if isinstance(expr, Pow):
        inner_d = derivative(expr.inner)
        if expr.k == 1:
            return inner_d
        return _mul(Const(expr.k), _mul(Pow(expr.inner, expr.k - 1), inner_d))
    if isinstance(expr, Compose):
        return _mul(Compose(derivative(expr.outer), expr.inner), derivative(expr.inner))
    if isinstance(expr, Mul):
        return _add(
            _mul(derivative(expr.left), expr.right),
            _mul(expr.left, derivative(expr.right)),
        )
    if isinstance(expr, Add):
        return _add(derivative(expr.left), derivative(expr.right))
    if isinstance(expr, Exp):
        return _mul(expr, derivative(expr.inner))
    raise TypeError(f"not a MapExpr: {expr!r}")


def eval_deriv(expr: MapExpr, z, *, check_poles: bool = True):
    """Evaluate the derivative of ``expr`` at ``z`` via the symbolic tree."""
    return eval_at(derivative(expr), z, check_poles=check_poles)


def nth_derivative(expr: MapExpr, n: int) -> MapExpr:
    """n-fold symbolic derivative (n >= 0)."""
    if n < 0:
        raise DomainError("derivative order must be >= 0")
    for _ in range(n):
        expr = derivative(expr)
    return expr


def compose_n(expr: MapExpr, n: int) -> MapExpr:
    """Expression for the n-th iterate; n = 0 gives the identity."""
    if n < 0:
        raise DomainError("iterate count must be >= 0")
    if n == 0:
        return Var()
    out = expr
    for _ in range(n - 1):
        out = Compose(expr, out)
    return out


def iterate(expr: MapExpr, z: complex, n: int) -> list:
    """Orbit [z, f(z), ..., f^n(z)] as python complex numbers.

    Raises OverflowSignal (carrying the partial orbit) as soon as an iterate
    exceeds ESCAPE_MAGNITUDE, and propagates PoleError from Moebius nodes.
    """
    orbit = [complex(z)]
    for k in range(1, n + 1):
        value = complex(eval_at(expr, orbit[-1]))
        if abs(value) > ESCAPE_MAGNITUDE:
            raise OverflowSignal(
                f"orbit escaped past {ESCAPE_MAGNITUDE:g} at step {k}", step=k, partial=orbit
            )
        orbit.append(value)
    return orbit


# --- JSON map specs ---------------------------------------------------------
#
# Schema: every node is {"op": <name>, ...}; complex scalars are [re, im]
# pairs. Ops: const(value), var, poly(coeffs), mobius(a,b,c,d),
# pow(inner, k), compose(outer, inner), mul(left, right), add(left, right),
# exp(inner), affine(scale, shift), blaschke(a).


def _parse_scalar(node, path: str) -> complex:
    if isinstance(node, (int, float)):
        return complex(node)
    if (
        isinstance(node, list)
        and len(node) == 2
        and all(isinstance(x, (int, float)) for x in node)
    ):
        return complex(node[0], node[1])
    raise MapSpecError(f"expected number or [re, im] pair at {path}, got {node!r}")


def _require(node: dict, key: str, path: str):
    if key not in node:
        raise MapSpecError(f"missing field '{key}' at {path}")
    return node[key]


def parse_map(spec, path: str = "$") -> MapExpr:
    """Build a MapExpr from a JSON-style dict (or a JSON string)."""
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise MapSpecError(f"invalid JSON at {path}: {exc}") from exc
    if not isinstance(spec, dict):
        raise MapSpecError(f"expected an object at {path}, got {type(spec).__name__}")
    op = spec.get("op")
    if op is None:
        raise MapSpecError(f"missing 'op' at {path}")
    try:
        if op == "const":
            return Const(_parse_scalar(_require(spec, "value", path), f"{path}.value"))
        if op == "var":
            return Var()
        if op == "poly":
            coeffs = _require(spec, "coeffs", path)
            if not isinstance(coeffs, list) or not coeffs:
                raise MapSpecError(f"'coeffs' must be a non-empty list at {path}.coeffs")
            return Poly(
                tuple(
                    _parse_scalar(c, f"{path}.coeffs[{i}]") for i, c in enumerate(coeffs)
                )
            )
        if op == "mobius":
            return Mobius(
                *(
                    _parse_scalar(_require(spec, key, path), f"{path}.{key}")
                    for key in ("a", "b", "c", "d")
                )
            )
        if op == "pow":
            k = _require(spec, "k", path)
            if not isinstance(k, int):
                raise MapSpecError(f"'k' must be an integer at {path}.k")
            return Pow(parse_map(_require(spec, "inner", path), f"{path}.inner"), k)
        if op == "compose":
            return Compose(
                parse_map(_require(spec, "outer", path), f"{path}.outer"),
                parse_map(_require(spec, "inner", path), f"{path}.inner"),
            )
        if op == "mul":
            return Mul(
                parse_map(_require(spec, "left", path), f"{path}.left"),
                parse_map(_require(spec, "right", path), f"{path}.right"),
            )
        if op == "add":
            return Add(
                parse_map(_require(spec, "left", path), f"{path}.left"),
                parse_map(_require(spec, "right", path), f"{path}.right"),
            )
        if op == "exp":
            return Exp(parse_map(_require(spec, "inner", path), f"{path}.inner"))
        if op == "affine":
            return Affine(
                _parse_scalar(_require(spec, "scale", path), f"{path}.scale"),
                _parse_scalar(_require(spec, "shift", path), f"{path}.shift"),
            )
        if op == "blaschke":
            return blaschke_factor(_parse_scalar(_require(spec, "a", path), f"{path}.a"))
    except DomainError as exc:
        raise MapSpecError(f"invalid parameters at {path}: {exc}") from exc
    raise MapSpecError(f"unknown op '{op}' at {path}")


def _scalar_json(value: complex) -> list:
    return [value.real, value.imag]


def map_to_json(expr: MapExpr) -> dict:
    """Serialize a MapExpr back to its JSON-style dict form."""
    if isinstance(expr, Const):
        return {"op": "const", "value": _scalar_json(expr.value)}
    if isinstance(expr, Var):
        return {"op": "var"}
    if isinstance(expr, Poly):
        return {"op": "poly", "coeffs": [_scalar_json(c) for c in expr.coeffs]}
    if isinstance(expr, Mobius):
        return {
            "op": "mobius",
            "a": _scalar_json(expr.a),
            "b": _scalar_json(expr.b),
            "c": _scalar_json(expr.c),
            "d": _scalar_json(expr.d),
        }
    if isinstance(expr, Pow):
        return {"op": "pow", "inner": map_to_json(expr.inner), "k": expr.k}
    if isinstance(expr, Compose):
        return {
            "op": "compose",
            "outer": map_to_json(expr.outer),
            "inner": map_to_json(expr.inner),
        }
    if isinstance(expr, Mul):
        return {"op": "mul", "left": map_to_json(expr.left), "right": map_to_json(expr.right)}
    if isinstance(expr, Add):
        return {"op": "add", "left": map_to_json(expr.left), "right": map_to_json(expr.right)}
    if isinstance(expr, Exp):
        return {"op": "exp", "inner": map_to_json(expr.inner)}
    if isinstance(expr, Affine):
        return {
            "op": "affine",
            "scale": _scalar_json(expr.scale),
            "shift": _scalar_json(expr.shift),
        }
    raise TypeError(f"not a MapExpr: {expr!r}")
