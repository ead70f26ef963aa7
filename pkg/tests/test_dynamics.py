"""Fixed points, local conjugacies, Denjoy-Wolff estimates, escape pictures."""

import numpy as np
import pytest

from fatoulab.dynamics import (
    boettcher,
    classify_fixed_point,
    denjoy_wolff,
    escape_render,
    find_fixed_points,
    koenigs,
    write_pgm,
)
from fatoulab.errors import NoConvergence, NotFixed, NotSelfMap, WrongClass
from fatoulab.maps import Affine, Mobius, Poly, Pow, eval_at, eval_deriv
from fatoulab.regions import disc


def _squared_blaschke(a: float) -> Pow:
    return Pow(Mobius(1.0, a, a, 1.0), 2)


def test_attracting_example_at_one():
    b = _squared_blaschke(0.5)  # ((z+1/2)/(1+z/2))^2
    info = classify_fixed_point(b, 1.0)
    assert info.label == "Attracting"
    assert info.multiplier == pytest.approx(2 / 3, abs=1e-9)
    assert info.petal_count is None
    # the branch point of the square sits at the inner zero
    assert abs(complex(eval_deriv(b, -0.5))) < 1e-12


def test_parabolic_example_at_one():
    b = _squared_blaschke(1 / 3)
    info = classify_fixed_point(b, 1.0)
    assert info.label == "Parabolic"
    assert info.multiplier == pytest.approx(1.0, abs=1e-9)
    assert info.petal_count == 2
    # independent order check: displacement scales like h^3, so halving h
    # divides it by 8
    for h in (1e-3, 5e-4):
        d1 = abs(complex(eval_at(b, 1 + h)) - (1 + h))
        d2 = abs(complex(eval_at(b, 1 + h / 2)) - (1 + h / 2))
        assert d1 / d2 == pytest.approx(8.0, rel=1e-2)


def test_classify_rejects_non_fixed_point():
    with pytest.raises(NotFixed):
        classify_fixed_point(Poly((0.0, 0.0, 1.0)), 0.5)


def test_find_fixed_points_of_square():
    pts = find_fixed_points(Poly((0.0, 0.0, 1.0)), disc(0.0, 1.6), 0.3)
    assert len(pts) == 2
    by_label = {p.label: p for p in pts}
    assert abs(by_label["Superattracting"].location) < 1e-8
    rep = by_label["Repelling"]
    assert rep.location == pytest.approx(1.0, abs=1e-8)
    assert rep.multiplier == pytest.approx(2.0, abs=1e-8)
    assert all(p.residual < 1e-10 for p in pts)


def test_koenigs_functional_equation():
    f = Poly((0.0, 0.5, 0.1))  # z/2 + z^2/10, attracting at 0
    conj = koenigs(f, 0.0, 40)
    assert conj.multiplier == pytest.approx(0.5)
    worst = 0.0
    for z in 0.1 * np.exp(2j * np.pi * np.arange(64) / 64):
        defect = abs(conj(complex(eval_at(f, z))) - conj.multiplier * conj(z))
        worst = max(worst, defect)
    assert worst < 1e-8


def test_koenigs_rejects_superattracting():
    with pytest.raises(WrongClass):
        koenigs(Poly((0.0, 0.0, 1.0)), 0.0, 10)


def test_boettcher_square_is_identity():
    conj = boettcher(Poly((0.0, 0.0, 1.0)), 0.0, 20)
    assert conj.degree == 2
    zs = 0.3 * np.exp(2j * np.pi * np.arange(16) / 16)
    assert max(abs(conj(z) - z) for z in zs) == 0.0


def test_boettcher_cubic_perturbation():
    f = Poly((0.0, 0.0, 1.0, 1.0))  # z^2 + z^3
    conj = boettcher(f, 0.0, 20)
    worst = 0.0
    for r in (0.05, 0.025):
        for z in r * np.exp(2j * np.pi * np.arange(32) / 32):
            worst = max(worst, abs(conj(complex(eval_at(f, z))) - conj(z) ** 2))
    assert worst < 1e-6


def test_boettcher_rejects_attracting():
    with pytest.raises(WrongClass):
        boettcher(Poly((0.0, 0.5, 0.1)), 0.0, 10)


def test_denjoy_wolff_boundary_point():
    est = denjoy_wolff(_squared_blaschke(0.5))
    assert est.boundary_flag
    assert abs(est.point - 1.0) < 1e-6
    assert est.iterations_used <= 10_000


def test_denjoy_wolff_interior_point():
    est = denjoy_wolff(Poly((0.0, 0.5)))
    assert not est.boundary_flag
    assert abs(est.point) < 1e-10


def test_denjoy_wolff_rotation_has_no_limit():
    with pytest.raises(NoConvergence):
        denjoy_wolff(Mobius(1j, 0.0, 0.0, 1.0))


def test_denjoy_wolff_requires_selfmap():
    with pytest.raises(NotSelfMap):
        denjoy_wolff(Affine(1.0, 5.0))


def test_escape_render_counts_and_orientation():
    counts = escape_render(Poly((0.0, 0.0, 1.0)), (0.0, 0.0, 2.0, 2.0), (8, 8), 30)
    assert counts.shape == (8, 8) and counts.dtype == np.int32
    # row 0 is the top of the window: large modulus, instant escape
    assert counts[0, -1] == 0
    # bottom-left pixel center is 0.125+0.125j, which never escapes
    assert counts[-1, 0] == 30
    assert counts.min() >= 0 and counts.max() <= 30


def test_escape_render_deterministic():
    a = escape_render(Poly((0.0, 0.0, 1.0)), (-2.0, -2.0, 2.0, 2.0), (32, 32), 50)
    b = escape_render(Poly((0.0, 0.0, 1.0)), (-2.0, -2.0, 2.0, 2.0), (32, 32), 50)
    assert np.array_equal(a, b)


def test_write_pgm_format(tmp_path):
    counts = escape_render(Poly((0.0, 0.0, 1.0)), (-2.0, -2.0, 2.0, 2.0), (16, 12), 40)
    path = tmp_path / "escape.pgm"
    write_pgm(path, counts, 40)
    raw = path.read_bytes()
    header = b"P5\n16 12\n255\n"
    assert raw.startswith(header)
    assert len(raw) == len(header) + 16 * 12
    body = np.frombuffer(raw[len(header):], dtype=np.uint8).reshape(12, 16)
    assert body.max() == 255  # interior pixels never escape -> full white
