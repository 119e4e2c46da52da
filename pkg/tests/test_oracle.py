import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import period_trace
from subfinsler.errors import DegenerateSegment, InsufficientTrace, NotClosed
from subfinsler.geodesics import projection_closure
from subfinsler.indicatrix import IndicatrixProfile
from subfinsler.oracle import (
    DiscreteHorizontalPath,
    area_preserving_perturbations,
    dido_direct_search,
    dido_stationarity,
    finsler_length,
    hausdorff_distance,
    length_gradient,
    read_loop_csv,
    write_loop_csv,
)

FLAT = IndicatrixProfile.flat()
RANDERS = IndicatrixProfile.randers(0.5)
LIMACON = IndicatrixProfile.limacon()
SQUARE = DiscreteHorizontalPath([[0, 0], [1, 0], [1, 1], [0, 1]])


def test_square_lengths():
    assert finsler_length(FLAT, SQUARE) == pytest.approx(4.0)
    # edges point along 0, pi/2, pi, 3pi/2: r = 1.5, 1, 0.5, 1
    assert finsler_length(RANDERS, SQUARE) == pytest.approx(4.0)


def test_randers_single_segments():
    east = DiscreteHorizontalPath([[0, 0], [1, 0]], closed=False)
    west = DiscreteHorizontalPath([[1, 0], [0, 0]], closed=False)
    assert finsler_length(RANDERS, east) == pytest.approx(1.5)
    assert finsler_length(RANDERS, west) == pytest.approx(0.5)


def test_reversal_changes_length_for_asymmetric_profile():
    tri = DiscreteHorizontalPath([[0, 0], [2, 0], [0, 1]])
    rev = DiscreteHorizontalPath(tri.nodes[::-1])
    assert finsler_length(FLAT, tri) == pytest.approx(finsler_length(FLAT, rev))
    assert abs(finsler_length(LIMACON, tri) - finsler_length(LIMACON, rev)) > 1e-3


def test_subdividing_edges_keeps_length():
    fine = DiscreteHorizontalPath(SQUARE.densified(7))
    for p in (FLAT, RANDERS, LIMACON):
        assert finsler_length(p, fine) == pytest.approx(finsler_length(p, SQUARE), rel=1e-13)


def test_degenerate_segment():
    with pytest.raises(DegenerateSegment):
        finsler_length(FLAT, DiscreteHorizontalPath([[0, 0], [1, 0], [1, 0], [0, 1]]))


def test_bad_nodes_shape():
    with pytest.raises(ValueError):
        DiscreteHorizontalPath([1.0, 2.0, 3.0])


def test_area_and_lift():
    assert SQUARE.signed_area == pytest.approx(1.0)
    z = SQUARE.z_lift()
    assert z[-1] - z[0] == pytest.approx(-SQUARE.signed_area)
    cw = DiscreteHorizontalPath.circle(2.0, 256, clockwise=True)
    assert cw.signed_area < 0
    assert cw.z_lift()[-1] == pytest.approx(-cw.signed_area)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_lift_height_gain_is_translation_invariant(dx, dy):
    loop = DiscreteHorizontalPath.ellipse(2.0, 1.0, 64)
    gain = loop.z_lift()[-1]
    assert loop.translated([dx, dy]).z_lift()[-1] == pytest.approx(gain, abs=1e-9)


def test_centroid_and_scaling():
    loop = DiscreteHorizontalPath.ellipse(3.0, 1.0, 128).translated([1.0, -2.0])
    assert np.allclose(loop.centroid, [1.0, -2.0])
    big = loop.scaled(2.0)
    assert big.signed_area == pytest.approx(4 * loop.signed_area)
    assert np.allclose(big.centroid, loop.centroid)


def test_length_gradient_matches_differences():
    rng = np.random.default_rng(3)
    nodes = DiscreteHorizontalPath.ellipse(1.5, 1.0, 24).nodes + 0.05 * rng.standard_normal((24, 2))
    for p in (RANDERS, LIMACON):
        g = length_gradient(p, nodes)
        fd = np.zeros_like(nodes)
        h = 1e-6
        for i in range(24):
            for j in range(2):
                e = np.zeros_like(nodes)
                e[i, j] = h
                fd[i, j] = (finsler_length(p, DiscreteHorizontalPath(nodes + e))
                            - finsler_length(p, DiscreteHorizontalPath(nodes - e))) / (2 * h)
        assert np.allclose(g, fd, atol=1e-7)


def test_perturbations_preserve_area_to_first_order():
    loop = DiscreteHorizontalPath.ellipse(2.0, 1.0, 256)
    fields = area_preserving_perturbations(loop, 10, np.random.default_rng(0))
    assert fields.shape == (10, 256, 2)
    for f in fields:
        assert np.max(np.hypot(f[:, 0], f[:, 1])) == pytest.approx(1.0)
        e = 1e-4
        dA = DiscreteHorizontalPath(loop.nodes + e * f).signed_area - DiscreteHorizontalPath(loop.nodes - e * f).signed_area
        assert abs(dA) / (2 * e) < 1e-9


def test_from_trace_needs_a_full_period():
    tr = period_trace("randers", 0.0, 0.3)
    loop = DiscreteHorizontalPath.from_trace(tr, 256)
    assert len(loop) == 256
    assert abs(loop.signed_area) == pytest.approx(abs(projection_closure(tr).enclosed_area), rel=1e-3)
    short = period_trace("randers", 0.0, 0.3, margin=-5.0)
    with pytest.raises(InsufficientTrace):
        DiscreteHorizontalPath.from_trace(short)


@pytest.mark.parametrize("kind,theta0,lam0", [("flat", 0.0, 1.0), ("randers", 0.0, 0.3), ("randers", math.pi / 2, 0.3),
                                              ("limacon", 0.0, 1.0)])
def test_geodesic_projections_are_stationary(kind, theta0, lam0):
    profile = {"flat": FLAT, "randers": RANDERS, "limacon": LIMACON}[kind]
    rep = dido_stationarity(profile, period_trace(kind, theta0, lam0))
    assert rep.max_first_order_defect < 1e-4
    assert len(rep.defects) == 20


def test_ellipse_is_not_stationary():
    rep = dido_stationarity(FLAT, DiscreteHorizontalPath.ellipse(2.0, 1.0, 512))
    assert rep.max_first_order_defect > 0.1


def test_circles_are_stationary_for_randers():
    # Randers geodesics project to circles
    for cw in (True, False):
        rep = dido_stationarity(RANDERS, DiscreteHorizontalPath.circle(1.0, 512, clockwise=cw))
        assert rep.max_first_order_defect < 1e-4
    rep = dido_stationarity(RANDERS, DiscreteHorizontalPath.ellipse(2.0, 1.0, 512, clockwise=True))
    assert rep.max_first_order_defect > 1e-2


def test_stationarity_is_reproducible():
    loop = DiscreteHorizontalPath.ellipse(2.0, 1.0, 128)
    a = dido_stationarity(FLAT, loop, seed=7).defects
    b = dido_stationarity(FLAT, loop, seed=7).defects
    assert np.array_equal(a, b)


def test_stationarity_rejects_open_paths():
    with pytest.raises(NotClosed):
        dido_stationarity(FLAT, DiscreteHorizontalPath([[0, 0], [1, 0], [0, 1]], closed=False))


def test_direct_search_flat_recovers_circle():
    loop = dido_direct_search(FLAT, math.pi, 128)
    assert abs(loop.signed_area) == pytest.approx(math.pi, rel=1e-12)
    assert finsler_length(FLAT, loop) == pytest.approx(2 * math.pi, abs=1e-3)
    radii = np.hypot(loop.nodes[:, 0], loop.nodes[:, 1])
    assert np.ptp(radii) < 1e-3


def test_direct_search_flat_from_an_ellipse():
    rng = np.random.default_rng(1)
    start = DiscreteHorizontalPath(DiscreteHorizontalPath.ellipse(2.0, 0.7, 128).nodes + 0.02 * rng.standard_normal((128, 2)))
    loop = dido_direct_search(FLAT, math.pi, initial=start)
    assert finsler_length(FLAT, loop) == pytest.approx(2 * math.pi, abs=1e-3)
    assert hausdorff_distance(loop, DiscreteHorizontalPath.circle(1.0, 1024)) < 5e-3


def test_direct_search_randers_matches_geodesic_projection():
    ref = DiscreteHorizontalPath.from_trace(period_trace("randers", 0.0, 0.3), 2048)
    area = abs(ref.signed_area)
    loop = dido_direct_search(RANDERS, area, 128, clockwise=True)
    assert finsler_length(RANDERS, loop) == pytest.approx(finsler_length(RANDERS, ref), rel=1e-3)
    ref = ref.translated(-ref.centroid)
    assert hausdorff_distance(loop, ref) < 5e-3 * math.sqrt(area)


def test_direct_search_limacon_matches_geodesic_projection():
    ref = DiscreteHorizontalPath.from_trace(period_trace("limacon", 0.0, 1.0), 2048)
    ref = ref.translated(-ref.centroid)
    loop = dido_direct_search(LIMACON, abs(ref.signed_area), 128, clockwise=True)
    diam = np.ptp(ref.nodes[:, 0])
    assert hausdorff_distance(loop, ref) < 3e-3 * diam


def test_direct_search_arguments():
    with pytest.raises(ValueError):
        dido_direct_search(FLAT, -1.0)
    with pytest.raises(ValueError):
        dido_direct_search(FLAT, 1.0, node_count=8)


def test_hausdorff_examples():
    a = DiscreteHorizontalPath.circle(1.0, 256)
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, a.translated([0.3, 0.0])) == pytest.approx(0.3, abs=1e-3)


def test_loop_csv_round_trip(tmp_path):
    loop = DiscreteHorizontalPath.ellipse(2.0, 1.0, 64)
    write_loop_csv(loop, tmp_path / "loop.csv")
    back = read_loop_csv(tmp_path / "loop.csv")
    assert np.allclose(back.nodes, loop.nodes, rtol=1e-9, atol=1e-12)
    assert (tmp_path / "loop.csv").read_text().splitlines()[0] == "x,y"
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_loop_csv(tmp_path / "bad.csv")
