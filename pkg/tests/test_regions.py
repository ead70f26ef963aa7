"""Regions, sampling, certified disc covers, contours."""

import numpy as np
import pytest

from fatoulab.errors import DomainError, MapSpecError, MeshTooCoarse
from fatoulab.maps import Affine, Mobius, Poly, parse_map
from fatoulab.regions import (
    ClosedDisc,
    CompactRegion,
    Contour,
    covers_disjoint,
    disc,
    finite_set,
    image_cover,
    parse_region,
    polygon,
    region_to_json,
    sample_boundary,
    sample_interior,
    self_cover,
)


def test_disc_contains():
    d = ClosedDisc(1.0 + 0j, 0.5)
    assert d.contains(1.2)
    assert d.contains(1.5)  # boundary included
    assert not d.contains(1.6)
    assert d.scaled(2.0).radius == 1.0


def test_polygon_rejects_self_intersection():
    with pytest.raises(DomainError):
        polygon([0.0, 1.0, 1j, 1.0 + 1j])  # bowtie
    # a plain square is fine
    sq = polygon([0.0, 1.0, 1.0 + 1j, 1j])
    assert sq.components[0].contains(0.5 + 0.5j)


def test_degenerate_inputs_rejected():
    with pytest.raises(DomainError):
        disc(0.0, 0.0)
    with pytest.raises(DomainError):
        finite_set([])
    with pytest.raises(DomainError):
        CompactRegion(())


def test_sample_boundary_on_circle():
    region = disc(2.0 + 1j, 0.75)
    pts = sample_boundary(region, 64)
    assert len(pts) == 64
    assert np.max(np.abs(np.abs(pts - (2.0 + 1j)) - 0.75)) < 1e-12
    # first sample sits at angle zero
    assert pts[0] == pytest.approx(2.75 + 1j)


def test_sample_boundary_polygon_arclength():
    region = polygon([0.0, 4.0, 4.0 + 4j, 4j])
    pts = sample_boundary(region, 16)
    assert len(pts) == 16
    # all on the square's edges
    on_edge = (
        (np.abs(pts.imag) < 1e-12)
        | (np.abs(pts.real - 4) < 1e-12)
        | (np.abs(pts.imag - 4) < 1e-12)
        | (np.abs(pts.real) < 1e-12)
    )
    assert on_edge.all()


def test_sample_interior_inside_and_deterministic():
    region = disc(0.0, 1.0)
    a = sample_interior(region, 200, seed=7)
    b = sample_interior(region, 200, seed=7)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a)) <= 1.0
    c = sample_interior(region, 200, seed=8)
    assert not np.array_equal(a, c)


def test_sample_interior_polygon():
    region = polygon([0.0, 2.0, 2.0 + 2j, 2j])
    pts = sample_interior(region, 150, seed=0)
    assert len(pts) == 150
    assert ((pts.real >= 0) & (pts.real <= 2) & (pts.imag >= 0) & (pts.imag <= 2)).all()


def test_self_cover_covers_dense_samples():
    region = disc(1.0, 0.6)
    cover = self_cover(region, 1 / 32)
    rng = np.random.default_rng(3)
    pts = 1.0 + 0.6 * np.sqrt(rng.random(500)) * np.exp(2j * np.pi * rng.random(500))
    d = np.abs(pts[:, None] - cover.centers[None, :]) - cover.radii[None, :]
    assert (d.min(axis=1) <= 1e-12).all(), "self cover must contain the region"


def test_image_cover_certifies_forward_images():
    """Dense forward images must land inside the certified cover."""
    f = Poly((0.2, 0.0, 1.0))  # z^2 + 0.2
    region = disc(0.3, 0.5)
    cover = image_cover(f, region, 1 / 64)
    rng = np.random.default_rng(11)
    pts = 0.3 + 0.5 * np.sqrt(rng.random(800)) * np.exp(2j * np.pi * rng.random(800))
    img = pts**2 + 0.2
    d = np.abs(img[:, None] - cover.centers[None, :]) - cover.radii[None, :]
    assert (d.min(axis=1) <= 1e-12).all()


def test_image_cover_finite_set_is_exact_points():
    f = Affine(2.0, 1.0)
    region = finite_set([0.0, 1j])
    cover = image_cover(f, region, 1 / 16)
    assert sorted(cover.centers.tolist(), key=abs) == [1.0, 1.0 + 2j]


def test_image_cover_blowup_guard():
    # expansion estimate past the cap must refuse rather than certify a
    # uselessly huge cover
    steep = Poly((0.0,) * 20 + (1.0,))  # z^20
    with pytest.raises(MeshTooCoarse):
        image_cover(steep, disc(30.0, 1.0), 1 / 16)
    # a pole inside the region surfaces as PoleError instead
    from fatoulab.errors import PoleError

    f = Mobius(1.0, 0.0, 1.0, -0.5)
    with pytest.raises((PoleError, MeshTooCoarse)):
        image_cover(f, disc(0.5, 0.25), 1 / 16)


def test_covers_disjoint_margin():
    a = self_cover(disc(0.0, 1.0), 1 / 32)
    b = self_cover(disc(3.0, 1.0), 1 / 32)
    sep = covers_disjoint(a, b)
    assert sep.disjoint
    # true gap is 1.0; covers eat a little of it from both sides
    assert 0.8 < sep.margin <= 1.0
    c = self_cover(disc(1.5, 1.0), 1 / 32)
    assert not covers_disjoint(a, c).disjoint


def test_contour_nodes_power_of_two():
    with pytest.raises(DomainError):
        Contour(0.0, 1.0, node_count=300)
    with pytest.raises(DomainError):
        Contour(0.0, 1.0, node_count=32)
    c = Contour(0.0, 1.0, node_count=512)
    nodes = c.nodes()
    assert len(nodes) == 512
    assert np.max(np.abs(np.abs(nodes) - 1.0)) < 1e-12
    rev = Contour(0.0, 1.0, orientation=-1, node_count=64)
    assert rev.nodes()[1].imag < 0


def test_contour_rejects_bad_orientation():
    with pytest.raises(DomainError):
        Contour(0.0, 1.0, orientation=2)


def test_parse_region_round_trip():
    region = CompactRegion(
        disc(1j, 0.5).components
        + polygon([0.0, 1.0, 1.0 + 1j]).components
        + finite_set([2.0, 3.0]).components
    )
    back = parse_region(region_to_json(region))
    assert region_to_json(back) == region_to_json(region)


def test_parse_region_error_paths():
    with pytest.raises(MapSpecError) as info:
        parse_region({"discs": [[0, 0, -1]]})
    assert "discs" in str(info.value)
    with pytest.raises(MapSpecError):
        parse_region({"points": "nope"})
    with pytest.raises(MapSpecError):
        parse_region('{"discs": [[0, 0')


def test_image_cover_respects_thread_env(monkeypatch):
    monkeypatch.setenv("FATOULAB_THREADS", "1")
    f = parse_map({"op": "pow", "k": 2, "inner": {"op": "var"}})
    cover = image_cover(f, disc(0.0, 1.0), 1 / 32)
    assert len(cover) > 0
