import numpy as np
import pytest

from aeronav.bezier import (PiecewisePath, QuinticBezier, hermite_quintic,
                            stitch_three_point)


def finite_diff(fn, s, h=1e-6):
    return (fn(s + h) - fn(s - h)) / (2 * h)


def test_bezier_endpoints_exact():
    rng = np.random.default_rng(0)
    cp = rng.standard_normal((6, 3))
    b = QuinticBezier(cp)
    assert np.allclose(b.point(0.0), cp[0], atol=1e-12)
    assert np.allclose(b.point(1.0), cp[5], atol=1e-12)


def test_bezier_derivative_matches_finite_difference():
    rng = np.random.default_rng(1)
    b = QuinticBezier(rng.standard_normal((6, 3)))
    for s in (0.1, 0.5, 0.9):
        fd = finite_diff(b.point, s)
        assert np.allclose(b.deriv(s), fd, atol=1e-6)


def test_de_casteljau_split_exact():
    rng = np.random.default_rng(2)
    b = QuinticBezier(rng.standard_normal((6, 2)))
    left, right = b.split(0.37)
    for u in np.linspace(0, 1, 17):
        assert np.allclose(left.point(u), b.point(0.37 * u), atol=1e-12)
        assert np.allclose(right.point(u), b.point(0.37 + 0.63 * u), atol=1e-12)


def test_stitch_collinear_equally_spaced_is_straight():
    p1, p2, p3 = np.zeros(3), np.array([1.0, 1.0, 0.0]), np.array([2.0, 2.0, 0.0])
    d = p2 - p1
    segs = stitch_three_point(p1, p2, p3, d, np.zeros(3), d, np.zeros(3))
    for seg in segs:
        for u in np.linspace(0, 1, 11):
            assert np.allclose(seg.deriv(u, 2), 0.0, atol=1e-9)
    # both segments lie on the line
    for u in np.linspace(0, 1, 11):
        pt = segs[0].point(u)
        assert abs(pt[0] - pt[1]) < 1e-10


def test_stitch_interpolation():
    rng = np.random.default_rng(3)
    p1, p2, p3 = rng.standard_normal((3, 3))
    segs = stitch_three_point(p1, p2, p3, rng.standard_normal(3), rng.standard_normal(3),
                              rng.standard_normal(3), rng.standard_normal(3))
    assert np.allclose(segs[0].point(0.0), p1, atol=1e-12)
    assert np.allclose(segs[0].point(1.0), p2, atol=1e-10)
    assert np.allclose(segs[1].point(0.0), p2, atol=1e-10)
    assert np.allclose(segs[1].point(1.0), p3, atol=1e-12)


def test_stitch_junction_derivatives_via_analytic_derivative():
    """Junction mismatch of the analytic derivatives stays below 1e-10."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        p1, p2, p3 = rng.standard_normal((3, 3)) * 3
        ds, dds, de, dde = rng.standard_normal((4, 3))
        segs = stitch_three_point(p1, p2, p3, ds, dds, de, dde)
        assert np.max(np.abs(segs[0].deriv(1.0) - segs[1].deriv(0.0))) < 1e-10
        assert np.max(np.abs(segs[0].deriv(1.0, 2) - segs[1].deriv(0.0, 2))) < 1e-10
        # boundary data honored
        assert np.allclose(segs[0].deriv(0.0), ds, atol=1e-9)
        assert np.allclose(segs[0].deriv(0.0, 2), dds, atol=1e-9)
        assert np.allclose(segs[1].deriv(1.0), de, atol=1e-9)
        assert np.allclose(segs[1].deriv(1.0, 2), dde, atol=1e-9)


def test_degree5_exactness():
    """The stitched representation reproduces any degree-<=5 polynomial
    boundary data (here a cubic curve) exactly at the probe points."""
    def poly(s):
        return np.array([s, s ** 2 - 0.5 * s ** 3, 0.2 * s ** 3])

    def dpoly(s):
        return np.array([1.0, 2 * s - 1.5 * s ** 2, 0.6 * s ** 2])

    def ddpoly(s):
        return np.array([0.0, 2 - 3.0 * s, 1.2 * s])

    seg = hermite_quintic(poly(0.0), dpoly(0.0), ddpoly(0.0),
                          poly(1.0), dpoly(1.0), ddpoly(1.0))
    for u in np.linspace(0, 1, 21):
        assert np.allclose(seg.point(u), poly(u), atol=1e-10)


def test_path_c2_at_all_junctions():
    rng = np.random.default_rng(5)
    w = np.cumsum(rng.uniform(0.5, 1.5, size=(6, 3)), axis=0)
    path = PiecewisePath.from_waypoints(w)
    r1, r2 = path.junction_residuals()
    assert r1 < 1e-9
    assert r2 < 1e-9
    for i, wp in enumerate(w):
        assert np.allclose(path.point(float(i)), wp, atol=1e-9)


def test_two_waypoints_straight_zero_curvature():
    path = PiecewisePath.from_waypoints([np.zeros(3), np.array([3.0, 0.0, 0.0])])
    for s in np.linspace(0, 1, 11):
        assert path.curvature(s) == pytest.approx(0.0, abs=1e-12)


def test_replace_window_localism():
    """Segments outside the deformed window are bit-identical; the chain
    stays C2 in the raw segment parameter across the splice."""
    w = np.array([[0, 0, 0], [2, 0, 0], [4, 0, 0], [6, 0, 0], [8, 0, 0]], dtype=float)
    path = PiecewisePath.from_waypoints(w)
    new = path.replace_window(1, 3, np.array([4.0, 1.0, 0.0]))
    assert new.n_segments == path.n_segments  # 2 replaced by 2 here
    # retained segments identical to the last bit
    assert np.array_equal(new.segments[0].control, path.segments[0].control)
    assert np.array_equal(new.segments[3].control, path.segments[3].control)
    # deformed interior passes through the new control waypoint
    assert np.allclose(new.segments[1].point(1.0), [4.0, 1.0, 0.0], atol=1e-9)
    r1, r2 = new.junction_residuals()
    assert r1 < 1e-9
    assert r2 < 1e-9


def test_replace_window_straight_path_same_midpoint_identity():
    """Zero-magnitude deformation of a straight path leaves the geometry
    unchanged up to numerical identity."""
    path = PiecewisePath.straight(np.zeros(3), np.array([10.0, 0, 0]), segment_length=1.0)
    p_c = path.point(5.0)
    new = path.replace_window(3, 7, p_c)
    _, pts = new.sample(per_segment=500)
    assert np.max(np.abs(pts[:, 1:])) < 1e-9          # still on the line
    assert pts[:, 0].min() > -1e-9
    assert pts[:, 0].max() < 10.0 + 1e-9
    assert np.all(np.diff(pts[:, 0]) > -1e-9)          # no retrograde motion
    r1, r2 = new.junction_residuals()
    assert r1 < 1e-9 and r2 < 1e-9


def test_point_ahead_walks_arclength():
    path = PiecewisePath.from_waypoints([np.zeros(2), np.array([10.0, 0.0])])
    s, pt = path.point_ahead(0.0, 3.0, step=0.001)
    assert pt[0] == pytest.approx(3.0, abs=0.02)


def test_curvature_against_finite_difference_oracle():
    w = np.array([[0, 0], [2, 0], [2, 2]], dtype=float)  # right-angle corner
    path = PiecewisePath.from_waypoints(w)
    for s in np.linspace(0.1, 1.9, 25):
        d1 = finite_diff(path.point, s)
        d2 = (path.point(s + 1e-4) - 2 * path.point(s) + path.point(s - 1e-4)) / 1e-8
        cross = abs(d1[0] * d2[1] - d1[1] * d2[0])
        k_fd = cross / np.linalg.norm(d1) ** 3
        assert path.curvature(s) == pytest.approx(k_fd, rel=1e-2, abs=1e-6)
