"""Winding-number zero counts and the heuristic range probes."""

import cmath

import numpy as np
import pytest

from fatoulab.errors import (
    BoundaryZero,
    ConvergenceNotObserved,
    DegenerateError,
    DomainError,
)
from fatoulab.maps import Affine, Exp, Mobius, Poly, Var, eval_at
from fatoulab.range_analysis import (
    count_zeros,
    essential_singularity_probe,
    full_range_probe,
    julia_not_plane_demo,
    sector_region,
)
from fatoulab.regions import ClosedDisc, disc

CUBIC = Poly((-1.0, 0.0, 0.0, 1.0))  # z^3 - 1


def test_count_zeros_cubic():
    rep = count_zeros(CUBIC, ClosedDisc(0.0, 2.0), 1024)
    assert rep.count == 3
    assert rep.winding_residual < 0.01
    rep = count_zeros(CUBIC, ClosedDisc(1.0, 0.5), 1024)
    assert rep.count == 1
    assert rep.winding_residual < 0.01


def test_count_zeros_random_known_roots():
    rng = np.random.default_rng(1234)
    for _ in range(50):
        k = int(rng.integers(1, 9))
        while True:
            roots = 1.5 * np.sqrt(rng.random(k)) * np.exp(
                2j * np.pi * rng.random(k)
            )
            # keep every root clear of both test circles
            if np.all(np.abs(np.abs(roots) - 2.0) >= 0.05) and np.all(
                np.abs(np.abs(roots) - 1.0) >= 0.05
            ):
                break
        coeffs = tuple(np.poly(roots)[::-1])  # ascending order
        p = Poly(coeffs)
        big = count_zeros(p, ClosedDisc(0.0, 2.0), 1024)
        small = count_zeros(p, ClosedDisc(0.0, 1.0), 1024)
        assert big.count == k
        assert small.count == int(np.sum(np.abs(roots) < 1.0))
        assert big.winding_residual < 0.01
        assert small.winding_residual < 0.01


def test_count_zeros_boundary_zero_raises():
    with pytest.raises(BoundaryZero):
        count_zeros(Affine(1.0, -1.0), ClosedDisc(0.0, 1.0), 64)


def test_count_zeros_doubles_until_unambiguous():
    root = 0.9 * cmath.exp(1j * cmath.pi / 8)
    rep = count_zeros(Affine(1.0, -root), ClosedDisc(0.0, 1.0), nodes=8)
    assert rep.count == 1
    assert rep.nodes_used > 8


def test_count_zeros_near_boundary_root_not_miscounted():
    # a root this close to the circle once aliased to a silent count of 0
    root = 0.999999 * cmath.exp(1j * cmath.pi / 8)
    rep = count_zeros(Affine(1.0, -root), ClosedDisc(0.0, 1.0), nodes=8)
    assert rep.count == 1
    assert rep.nodes_used > 1024


def test_full_range_probe_interior_accumulation():
    # f = z/2 pulls the base disc into D(0, 0.3) from n = 1 on
    rep = full_range_probe(
        Poly((0.0, 0.5)), Var(), 0.0, 0.3, disc(0.0, 0.5), [0.1], [0, 1, 2, 3]
    )
    out = rep.outcomes[0]
    assert out.attained and out.witness_n == 1 and out.count == 1
    assert rep.base_point == 0.0


def test_full_range_probe_escape_to_infinity():
    rep = full_range_probe(
        Affine(1.0, 2.0),
        Var(),
        None,
        3.0,
        disc(0.0, 0.5),
        [4.2, 99.0],
        [0, 1, 2, 3],
    )
    hit, miss = rep.outcomes
    assert hit.attained and hit.witness_n == 2 and hit.count == 1
    assert not miss.attained and miss.witness_n == -1
    assert rep.base_point is None


def test_full_range_probe_reports_no_convergence():
    with pytest.raises(ConvergenceNotObserved):
        full_range_probe(
            Affine(1.0, 2.0), Var(), None, 10.0, disc(0.0, 0.5), [1.0], [0]
        )


def test_essential_singularity_coverage_grows():
    # exp(1/z) near 0: shrinking annuli approach every grid value, including 0,
    # once the radial sweep is dense enough for the image spirals to close up.
    g = Exp(Mobius(0.0, 1.0, 1.0, 0.0))
    rep = essential_singularity_probe(
        g,
        0.0,
        (0.5, 0.2, 0.1),
        (0.0, 1.0, -1.0, 1j, -1j, 2.0),
        samples_per_ring=512,
        rings_per_annulus=128,
    )
    assert rep.fractions[0] < rep.fractions[1] < rep.fractions[2]
    assert rep.fractions[2] == 1.0
    assert rep.omitted == ()
    assert rep.picard_candidate is None
    assert all(row[0] for row in rep.approached)  # 0 approached at every radius


def test_essential_singularity_picard_candidate_when_one_value_missed():
    # The identity near 0 only ever approaches grid values close to the rings.
    rep = essential_singularity_probe(
        Poly((0.0, 1.0)), 0.0, (0.5, 0.1), (0.0, 0.45, 3.0)
    )
    assert rep.omitted == (3.0 + 0.0j,)
    assert rep.picard_candidate == 3.0 + 0.0j


def test_essential_singularity_escape_at_infinity():
    # A polynomial on growing rings escapes every bounded grid value.
    rep = essential_singularity_probe(
        Poly((0.0, 0.0, 1.0)), None, (10.0, 100.0), (0.0, 1.0, -2.0)
    )
    assert rep.fractions == (0.0, 0.0)
    assert len(rep.omitted) == 3
    assert rep.picard_candidate is None


def test_essential_singularity_validation():
    g = Exp(Mobius(0.0, 1.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        essential_singularity_probe(g, 0.0, (), (1.0,))
    with pytest.raises(DomainError):
        essential_singularity_probe(g, 0.0, (0.5, -0.1), (1.0,))
    with pytest.raises(DomainError):
        essential_singularity_probe(g, 0.0, (0.5,), ())
    with pytest.raises(DomainError):
        essential_singularity_probe(g, 0.0, (0.5,), (1.0,), rings_per_annulus=0)


def test_julia_bound_scaled_selfmap():
    rep = julia_not_plane_demo(Poly((0.0, 0.0, 1.0)))
    assert rep.scaled_selfmap_ok
    assert rep.M == pytest.approx(2.0, rel=1e-6)
    assert rep.max_scaled_modulus < 1.0


def test_julia_bound_rejects_zero_map():
    with pytest.raises(DegenerateError):
        julia_not_plane_demo(Poly((0.0,)))


def test_sector_region_geometry():
    reg = sector_region(0.0, 0.0, cmath.pi / 2, 2.0, arc_points=16)
    poly = reg.components[0]
    assert len(poly.vertices) == 17  # vertex plus the sampled arc
    assert reg.contains(1.0)  # on the axis
    assert reg.contains(0.5 + 0.3j)
    assert not reg.contains(1.5j)  # outside the half-opening
    assert not reg.contains(-1.0)


def test_sector_region_validation():
    with pytest.raises(DomainError):
        sector_region(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        sector_region(0.0, 0.0, 1.0, -1.0)
    with pytest.raises(DomainError):
        sector_region(0.0, 0.0, 1.0, 1.0, arc_points=1)
