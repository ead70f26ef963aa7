"""Disc geometry, factor sequences, trichotomy classifier, greedy chain."""

import math

import numpy as np
import pytest

from fatoulab.errors import DomainError
from fatoulab.hyperbolic import (
    BlaschkeSequence,
    WanderingModel,
    build_noninjective_sequence,
    classify_sequence,
    critical_point,
    disc_exhaustion,
    hyp_dist,
    load_params,
    model_orbit,
    param_for_critical,
    revisit_schedule,
    save_params,
)
from fatoulab.maps import Mobius, Pow, eval_at, eval_deriv

RNG = np.random.default_rng(5)


def test_hyp_dist_radial_oracle():
    # d(0, r) = log((1+r)/(1-r)) for the curvature -1 metric
    for r in (0.1, 0.5, 0.9, 0.99):
        assert hyp_dist(0.0, r) == pytest.approx(math.log((1 + r) / (1 - r)))
    assert hyp_dist(0.3j, 0.3j) == 0.0


def test_hyp_dist_moebius_invariance():
    """Disc automorphisms are isometries; random spot checks."""
    for _ in range(20):
        z, w = (0.8 * np.sqrt(RNG.random(2)) * np.exp(2j * np.pi * RNG.random(2)))
        a = 0.6 * math.sqrt(RNG.random()) * np.exp(2j * np.pi * RNG.random())
        phi = Mobius(1.0, -a, -np.conj(a), 1.0)  # (z - a) / (1 - conj(a) z)
        d0 = hyp_dist(complex(z), complex(w))
        d1 = hyp_dist(complex(eval_at(phi, z)), complex(eval_at(phi, w)))
        assert d1 == pytest.approx(d0, rel=1e-10)


def test_hyp_dist_rejects_boundary():
    with pytest.raises(DomainError):
        hyp_dist(1.0, 0.0)


def test_critical_point_closed_form():
    assert critical_point(0.5) == pytest.approx(2 - math.sqrt(3), abs=1e-12)


def test_critical_point_kills_derivative():
    for _ in range(40):
        a = 0.95 * math.sqrt(RNG.random()) * np.exp(2j * np.pi * RNG.random())
        if a == 0:
            continue
        c = critical_point(complex(a))
        from fatoulab.maps import blaschke_factor

        assert abs(complex(eval_deriv(blaschke_factor(a), c))) < 1e-9


def test_param_critical_round_trip_on_grid():
    radii = np.linspace(0.05, 0.95, 20)
    angles = np.linspace(0.0, 2 * np.pi, 20, endpoint=False)
    for r in radii:
        for t in angles:
            a = r * np.exp(1j * t)
            c = critical_point(complex(a))
            assert abs(param_for_critical(c) - a) < 1e-10


def test_blaschke_sequence_indexing():
    seq = BlaschkeSequence((0.5, 0.3j))
    assert len(seq) == 2
    b1 = seq.factor(1)
    assert abs(complex(eval_at(b1, 0.5))) < 1e-15  # root at the parameter
    with pytest.raises(DomainError):
        seq.factor(0)
    vals = seq.prefix_values(0.2, 2)
    assert len(vals) == 3 and vals[0] == 0.2
    manual = complex(eval_at(seq.factor(2), complex(eval_at(b1, 0.2))))
    assert vals[-1] == pytest.approx(manual)


def test_classifier_contracting_harmonic():
    n = np.arange(1, 5001)
    seq = BlaschkeSequence(tuple((1 - 1 / (n + 1)).astype(complex)))
    rep = classify_sequence(seq)
    assert rep.verdict == "Contracting"
    assert max(rep.final_traces) < 1e-3
    # divergent multiplier deficit series is the supporting evidence
    assert rep.tail_partial_sums[-1] > 5.0


def test_classifier_semicontracting_geometric():
    n = np.arange(1, 5001).astype(float)
    a = np.minimum(1 - np.exp2(-n), np.nextafter(1.0, 0.0))
    rep = classify_sequence(BlaschkeSequence(tuple(a.astype(complex))))
    assert rep.verdict == "SemiContracting"
    assert min(rep.final_traces) > 1e-3
    assert rep.tail_partial_sums[-1] < 1.5  # summable deficits


def test_classifier_eventually_isometric_rotations():
    golden = np.pi * (math.sqrt(5) - 1)
    rots = [Mobius(np.exp(1j * golden * k), 0.0, 0.0, 1.0) for k in range(1, 5001)]
    rep = classify_sequence(rots)
    assert rep.verdict == "EventuallyIsometric"
    assert rep.iso_from == 0

    mixed = [Mobius(0.5, 0.0, 0.0, 1.0)] * 3 + rots[:4997]
    rep2 = classify_sequence(mixed)
    assert rep2.verdict == "EventuallyIsometric"
    assert rep2.iso_from == 3


def test_classifier_report_jsonable():
    seq = BlaschkeSequence(tuple([0.5 + 0j] * 100))
    rep = classify_sequence(seq, horizon=100)
    doc = rep.to_jsonable()
    assert set(doc) == {
        "verdict",
        "horizon",
        "pairs",
        "tail_sum",
        "final_traces",
        "iso_from",
        "notes",
    }


def test_revisit_schedule_prefix_and_recurrence():
    sched = revisit_schedule(10)
    assert sched == [1, 2, 1, 3, 1, 2, 4, 1, 2, 3]
    long = revisit_schedule(200)
    # every small index keeps coming back
    for j in (1, 2, 3, 4, 5):
        assert long.count(j) >= 2


def test_disc_exhaustion_starts_at_half_disc():
    discs = disc_exhaustion(12)
    assert discs[0].center == 0.0
    assert discs[0].radius == 0.5
    for d in discs:
        assert abs(d.center) + d.radius < 1.0
    # the schedule revisits the first disc
    assert sum(1 for d in discs if d.center == 0.0 and d.radius == 0.5) >= 2


def test_noninjective_sequence_critical_residuals():
    cons = build_noninjective_sequence(disc_exhaustion(50), 50)
    assert len(cons.sequence) == 50
    assert cons.steps, "expected at least one constructed collision step"
    for step in cons.steps:
        factor = cons.sequence.factor(step.factor_index)
        assert abs(complex(eval_deriv(factor, step.target))) < 1e-9


def test_wandering_model_validates_spacing():
    seq = BlaschkeSequence((0.5, 0.5))
    with pytest.raises(DomainError):
        WanderingModel.from_blaschke(seq, translations=(0.0, 1.5, 3.0))


def test_wandering_model_orbit_stays_in_discs():
    # quadratic parabolic-style factor; closed disc maps into itself
    b = Pow(Mobius(1.0, 1 / 3, 1 / 3, 1.0), 2)
    model = WanderingModel(factors=(b,) * 8, translations=tuple(3.0 * k for k in range(9)))
    orbit = model_orbit(model, 0.2 + 0.1j, 8)
    assert len(orbit) == 9
    for k, z in enumerate(orbit):
        assert abs(z - 3.0 * k) <= 1.0 + 1e-12


def test_params_file_round_trip(tmp_path):
    params = [0.5 + 0j, -0.25 + 0.1j, 0.9j]
    path = tmp_path / "params.txt"
    save_params(path, params)
    assert load_params(path) == params
    # comments and blank lines are tolerated
    path2 = tmp_path / "manual.txt"
    path2.write_text("# two factors\n0.5 0.0\n\n0.0 0.25\n")
    assert load_params(path2) == [0.5 + 0j, 0.25j]
