"""Separation searches, Runge fits, transition steps, the diagonal builder."""

import math

import numpy as np
import pytest

from fatoulab.errors import (
    DomainError,
    NotConverged,
    NotFound,
    OverflowSignal,
    PoleError,
    WeightVanishes,
)
from fatoulab.maps import Affine, Const, Mobius, Poly, Var, compose_n, eval_at
from fatoulab.regions import (
    Contour,
    FiniteSet,
    covers_disjoint,
    disc,
    image_cover,
    self_cover,
)
from fatoulab.universality import (
    RungeRequest,
    RungeTarget,
    WeightedOrbitRecord,
    build_partial_universal,
    composition_sequence_orbit,
    cyclicity_obstruction,
    find_runaway_N,
    find_separation_m,
    finite_set_universal_check,
    orbit_density,
    runge_fit,
    target_from_region,
    universal_step,
    weighted_orbit,
    weighted_universal_step,
)

SQUARE = Poly((0.0, 0.0, 1.0))


def test_runaway_translation():
    w = find_runaway_N(Affine(1.0, 1.0), disc(0.0, 1.0))
    assert w.m == 3
    assert w.margin >= 0.9
    # the certificate itself survives a finer mesh
    ref = self_cover(disc(0.0, 1.0), 1.0 / 96)
    img = image_cover(compose_n(Affine(1.0, 1.0), 3), disc(0.0, 1.0), 1.0 / 96)
    sep = covers_disjoint(ref, img)
    assert sep.disjoint and sep.margin >= 0.9


def test_separation_translation_pair():
    w = find_separation_m(
        Affine(1.0, 2.0), disc(0.0, 0.75), disc(0.0, 0.5), mesh=1.0 / 128
    )
    assert w.m == 1
    assert w.margin >= 0.7


def test_separation_zero_for_disjoint_sets():
    w = find_separation_m(Affine(1.0, 2.0), disc(0.0, 0.5), disc(4.0, 0.5))
    assert w.m == 0


def test_separation_not_found_for_rotation():
    rot = Mobius(1j, 0.0, 0.0, 1.0)
    with pytest.raises(NotFound):
        find_separation_m(rot, disc(0.0, 0.75), disc(0.0, 0.5), m_max=8)


def test_runge_fit_constant_on_far_disc():
    tgt = target_from_region(disc(5.0, 0.5), Const(1.0))
    res = runge_fit(RungeRequest((tgt,), 1e-6))
    assert res.converged
    assert res.degree <= 8
    assert max(res.validation_errors) < 1e-6


def test_runge_fit_two_disjoint_sites():
    t1 = target_from_region(disc(0.0, 0.75), Const(0.0))
    t2 = target_from_region(disc(4.0, 0.5), Const(1.0))
    res = runge_fit(RungeRequest((t1, t2), 1e-2))
    assert res.converged and res.degree <= 40
    # fresh oracle grid, disjoint from the fit cloud
    th = np.exp(2j * np.pi * np.arange(1024) / 1024)
    rad = np.sqrt(np.linspace(0.3, 1.0, 1024))
    inner = 0.75 * th * rad
    outer = 4.0 + 0.5 * th * rad
    p = res.polynomial
    assert float(np.max(np.abs(np.asarray(eval_at(p, inner))))) < 1.25e-2
    assert float(np.max(np.abs(np.asarray(eval_at(p, outer)) - 1.0))) < 1.25e-2


def test_runge_fit_needs_enough_samples():
    tiny = RungeTarget(np.array([0.0, 1.0, 2.0]), np.zeros(3))
    with pytest.raises(DomainError):
        runge_fit(RungeRequest((tiny,), 1e-3, degree_cap=64))


def test_runge_fit_reports_best_attempt():
    # conjugation is not holomorphic; no polynomial gets close
    pts = np.exp(2j * np.pi * np.arange(256) / 256)
    bad = RungeTarget(pts, np.conj(pts))
    with pytest.raises(NotConverged) as info:
        runge_fit(RungeRequest((bad,), 1e-12, degree_cap=16))
    best = info.value.result
    assert best is not None and not best.converged
    assert max(best.validation_errors) > 0.1


def test_universal_step_worked_example():
    witness, res = universal_step(
        Affine(1.0, 2.0),
        disc(0.0, 0.75),
        SQUARE,
        disc(0.0, 0.5),
        Const(1.0),
        1e-2,
    )
    assert witness.m == 1
    assert res.converged
    assert res.degree <= 64
    assert all(e < 1e-2 for e in res.validation_errors)


def test_unit_weight_reproduces_plain_step_exactly():
    args = (disc(0.0, 0.5), SQUARE, disc(0.0, 0.5), Const(1.0), 1e-2)
    w1, r1 = universal_step(Affine(1.0, 2.0), *args)
    w2, r2 = weighted_universal_step(Affine(1.0, 2.0), Const(1.0), *args)
    assert w1 == w2
    assert r1.coefficients == r2.coefficients
    assert r1.validation_errors == r2.validation_errors


def test_weighted_step_with_constant_weight():
    f = Affine(1.0, 2.0)
    witness, res = weighted_universal_step(
        f, Const(2.0), disc(0.0, 0.5), SQUARE, disc(0.0, 0.5), Const(1.0), 1e-2
    )
    assert witness.m == 1 and res.converged
    # fresh check of the weighted composition itself
    th = 0.5 * np.exp(2j * np.pi * np.arange(512) / 512)
    img = np.asarray(eval_at(f, th))
    gap = np.abs(2.0 * np.asarray(eval_at(res.polynomial, img)) - 1.0)
    assert float(gap.max()) < 1e-2


def test_weighted_step_zero_weight_raises():
    with pytest.raises(WeightVanishes):
        weighted_universal_step(
            Affine(1.0, 2.0),
            Const(0.0),
            disc(0.0, 0.5),
            SQUARE,
            disc(0.0, 0.5),
            Const(1.0),
            1e-2,
        )


def test_weighted_orbit_factorial():
    # f = z+1, omega = z, g = 1 from z = 1: the cocycle is n!
    rec = weighted_orbit(Affine(1.0, 1.0), Var(), Const(1.0), 1.0, 10)
    assert rec.values[0] == 1.0  # W^0 = g(z)
    for n in range(11):
        assert rec.values[n] == float(math.factorial(n))
    assert rec.log_magnitudes[0] == 0.0


def test_weighted_orbit_overflow_ledger():
    with pytest.raises(OverflowSignal) as info:
        weighted_orbit(Var(), Const(1e100), Const(1.0), 0.5, 10)
    exc = info.value
    assert exc.step == 3
    assert isinstance(exc.partial, WeightedOrbitRecord)
    assert exc.partial.values[1] == pytest.approx(1e100)


def test_weighted_orbit_escape_carries_partial():
    with pytest.raises(OverflowSignal) as info:
        weighted_orbit(SQUARE, Const(1.0), Var(), 2.0, 40)
    assert isinstance(info.value.partial, WeightedOrbitRecord)
    assert len(info.value.partial.values) >= 2


def test_builder_empty_tasks_is_zero():
    rec = build_partial_universal(Affine(1.0, 2.0), [], 0.1)
    assert rec.converged
    assert isinstance(rec.polynomial, Const)
    assert rec.stages == ()


def test_builder_single_task():
    rec = build_partial_universal(
        Affine(1.0, 2.0),
        [(disc(0.0, 0.5), Var())],
        0.1,
        boundary_n=256,
        degree_cap=96,
    )
    assert rec.converged
    assert rec.witness_indices == (3,)
    assert rec.final_errors[0] <= 0.1  # twice the stage budget 0.05


def test_builder_three_task_invariants():
    f = Affine(1.0, 2.0)
    tasks = [(disc(0.0, 0.5), Affine(1.0, c)) for c in (0.0, 1.0, 1j)]
    rec = build_partial_universal(
        f, tasks, 0.15, boundary_n=384, degree_cap=96
    )
    assert rec.converged and len(rec.stages) == 3
    # strictly increasing schedule, growing guards
    assert list(rec.witness_indices) == sorted(set(rec.witness_indices))
    assert list(rec.guard_radii) == sorted(rec.guard_radii)
    for j, err in enumerate(rec.final_errors):
        assert err <= 2.0 * 0.15 / 2.0 ** (j + 1)
    # each correction stays inside its own budget on earlier sites
    for stage in rec.stages:
        assert all(s <= stage.epsilon for s in stage.earlier_sup)


def test_builder_validates_radii_schedule():
    f = Affine(1.0, 2.0)
    task = [(disc(0.0, 0.5), Var())]
    with pytest.raises(DomainError):
        build_partial_universal(f, task, 0.1, radii=(2.0, 4.0))
    with pytest.raises(DomainError):
        build_partial_universal(
            f, task + task, 0.1, radii=(4.0, 3.0), boundary_n=256
        )


def test_builder_small_radii_carry_partial():
    with pytest.raises(NotConverged) as info:
        build_partial_universal(
            Affine(1.0, 2.0),
            [(disc(0.0, 0.5), Var())],
            0.1,
            radii=(0.3,),
            boundary_n=256,
        )
    assert info.value.result is not None
    assert not info.value.result.converged


def test_orbit_density_exact_hit():
    # g(f^n(z)) = z + 2n matches z + 4 exactly at n = 2
    recs = orbit_density(
        Affine(1.0, 2.0), Var(), [(disc(0.0, 0.3), Affine(1.0, 4.0))], 5
    )
    assert len(recs) == 1
    assert recs[0].best_n == 2
    assert recs[0].best_error < 1e-14


def test_orbit_density_ties_to_smallest_n():
    recs = orbit_density(
        Affine(1.0, 1.0), Const(0.0), [(disc(0.0, 0.5), Const(0.0))], 4
    )
    assert recs[0].best_n == 0
    assert recs[0].errors == (0.0,) * 5


def test_composition_orbit_modes_agree_for_constant_family():
    maps = [Affine(1.0, 1.0)] * 4
    left = composition_sequence_orbit(maps, "Left", 0.0)
    right = composition_sequence_orbit(maps, "Right", 0.0)
    assert left == right == [1.0, 2.0, 3.0, 4.0]


def test_composition_orbit_right_keeps_first_map_outer():
    maps = [SQUARE, Affine(1.0, 1.0), Affine(1.0, 1.0), Affine(1.0, 1.0)]
    right = composition_sequence_orbit(maps, "Right", 1.0)
    assert right == [1.0, 4.0, 9.0, 16.0]  # (f^{n-1}(1))^2
    left = composition_sequence_orbit(maps, "Left", 1.0)
    assert left == [1.0, 2.0, 3.0, 4.0]


def test_composition_orbit_pole_carries_partial():
    maps = [Affine(1.0, 0.0), Mobius(0.0, 1.0, 1.0, -1.0)]  # id, then 1/(z-1)
    with pytest.raises(PoleError) as info:
        composition_sequence_orbit(maps, "Left", 1.0)
    assert info.value.partial == [1.0]


def test_cyclicity_polynomials_integrate_to_roundoff():
    contour = Contour(0.0, 1.0, node_count=512)
    for k in range(11):
        rep = cyclicity_obstruction(Poly((0.0,) * k + (1.0,)), contour, 0.0)
        assert abs(rep.candidate_integral) < 1e-10
        assert abs(rep.witness_integral - 2j * np.pi) < 1e-8


def test_cyclicity_needs_pole_inside():
    with pytest.raises(DomainError):
        cyclicity_obstruction(Var(), Contour(0.0, 1.0, node_count=512), 2.0)


def test_finite_set_exact_hit_and_evacuation():
    E = FiniteSet((0.0, 1j))
    rep = finite_set_universal_check(
        Affine(1.0, 2.0),
        Const(1.0),
        E,
        [np.array([4.0, 4.0 + 1j])],
        Var(),
        10,
    )
    assert rep.per_target[0][0] == 2
    assert rep.per_target[0][1] < 1e-14
    assert rep.evacuating_observed


def test_finite_set_rejects_mismatched_target():
    with pytest.raises(DomainError):
        finite_set_universal_check(
            Affine(1.0, 2.0),
            Const(1.0),
            FiniteSet((0.0, 1.0)),
            [np.array([1.0, 2.0, 3.0])],
            Var(),
            4,
        )
