import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmscat.errors import GeometryError
from helmscat.geometry2d import (
    SHAPE_KINDS,
    Contour2D,
    allocate_panels,
    build_proxy_circle,
    discretize_panels,
    discretize_smooth,
    eval_contour,
)
from helmscat.geometry3d import (
    Surface3D,
    build_proxy_sphere,
    discretize_surface,
    fibonacci_sphere,
    rotation_matrix,
)

# -- 2D contours ----------------------------------------------------------------


def test_eval_contour_examples():
    pos, nrm = eval_contour(Contour2D("circle"), 0.0)
    assert np.allclose(pos, [1, 0], atol=1e-15) and np.allclose(nrm, [-1, 0], atol=1e-15)
    pos, _ = eval_contour(Contour2D("starfish"), 0.0)
    assert np.allclose(pos, [61 / 101, 0], atol=1e-15)
    pos, _ = eval_contour(Contour2D("teardrop"), np.pi)
    assert np.allclose(pos, [-1, 0], atol=1e-14)


def test_teardrop_normal_at_corner_is_an_error():
    with pytest.raises(GeometryError):
        eval_contour(Contour2D("teardrop"), 0.0)


def test_teardrop_matches_cubic_formula():
    t = np.linspace(0.01, 2 * np.pi - 0.01, 50)
    pi = np.pi
    ref = np.stack([2 / pi**2 * t**2 - 4 / pi * t + 1, 2 / pi**3 * t**3 - 6 / pi**2 * t**2 + 4 / pi * t], -1)
    assert np.allclose(Contour2D("teardrop").position(t), ref, atol=1e-13)


def test_unknown_shape_and_bad_params():
    with pytest.raises(GeometryError, match="allowed"):
        Contour2D("pentagon")
    with pytest.raises(GeometryError):
        Contour2D("circle", {"radius": -1.0})
    with pytest.raises(GeometryError):
        Contour2D("cshape", {"inner_radius": 1.5})


@pytest.mark.parametrize("kind", SHAPE_KINDS)
def test_contours_are_closed_and_counterclockwise(kind):
    c = Contour2D(kind, center=(0.3, -0.2), rotation=0.7)
    poly = c.polygon(2048)
    x, y = poly[:, 0], poly[:, 1]
    signed_area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert signed_area > 0
    assert np.linalg.norm(c.position(0.0) - c.position(2 * np.pi - 1e-12)) < 1e-9
    assert c.contains(c.interior_point[None])[0]


@pytest.mark.parametrize("kind", SHAPE_KINDS)
def test_derivative_matches_finite_differences(kind):
    c = Contour2D(kind, rotation=0.4)
    # stay away from segment joints, where piecewise shapes switch formula
    t = np.linspace(0.05, 2 * np.pi - 0.05, 37)
    t = t[np.min(np.abs(t[:, None] - c.segment_breaks[None]), axis=1) > 1e-3]
    h = 1e-6
    fd = (c.position(t + h) - c.position(t - h)) / (2 * h)
    assert np.allclose(c.derivative(t), fd, atol=1e-7)


@pytest.mark.parametrize("kind", ["cshape", "rod"])
def test_piecewise_shapes_are_continuous_at_joints(kind):
    c = Contour2D(kind)
    for b in c.segment_breaks[1:-1]:
        assert np.linalg.norm(c.position(b - 1e-12) - c.position(b + 1e-12)) < 1e-9


def test_inward_normal_points_inside():
    c = Contour2D("starfish", center=(2, 1), rotation=0.3)
    t = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    assert np.all(c.contains(c.position(t) + 0.01 * c.inward_normal(t)))
    assert not np.any(c.contains(c.position(t) - 0.01 * c.inward_normal(t)))


# -- smooth discretization --------------------------------------------------------


def test_circle_n4():
    d = discretize_smooth(Contour2D("circle"), 4, 0.1)
    assert np.allclose(d.colloc, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    assert np.allclose(d.sources, [[0.9, 0], [-0.9, 0]], atol=1e-15)


def test_starfish_256_sources_inside():
    c = Contour2D("starfish")
    d = discretize_smooth(c, 256, 0.1)
    assert (d.m, d.n) == (256, 128)
    assert np.all(c.contains(d.sources))


def test_large_d_is_rejected():
    with pytest.raises(GeometryError):
        discretize_smooth(Contour2D("circle"), 64, 10.0)


def test_smooth_validation():
    with pytest.raises(GeometryError):
        discretize_smooth(Contour2D("circle"), 7, 0.1)
    with pytest.raises(GeometryError):
        discretize_smooth(Contour2D("circle"), 8, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["circle", "ellipse", "starfish"]), st.integers(4, 100), st.floats(0.01, 0.1))
def test_smooth_invariants(kind, half, d):
    N = 2 * half
    c = Contour2D(kind, center=(1.0, -2.0), rotation=0.2)
    disc = discretize_smooth(c, N, d)
    assert disc.m == N and disc.n == N // 2
    assert np.allclose(np.diff(disc.colloc_params), 2 * np.pi / N, rtol=0, atol=1e-14)
    assert np.all(c.contains(disc.sources))
    proxy = build_proxy_circle(disc)
    assert np.max(np.linalg.norm(disc.colloc - proxy.center, axis=1)) < proxy.radius


# -- panels -----------------------------------------------------------------------


def test_teardrop_panel_count():
    d = discretize_panels(Contour2D("teardrop"), 16, 16, 20, 0.25)
    assert d.m == (16 + 2 * 20) * 16 == 896
    assert d.n == 448


def test_cshape_panel_count():
    d = discretize_panels(Contour2D("cshape"), 128, 16, 5, 0.1)
    assert d.m == 2688


def test_panel_allocation_ratios():
    assert list(allocate_panels((2 / 5, 3 / 20, 3 / 10, 3 / 20), 128)) == [51, 19, 39, 19]
    assert allocate_panels((2 / 5, 3 / 20, 3 / 10, 3 / 20), 20).tolist() == [8, 3, 6, 3]


def test_no_refinement_is_plain_gauss_legendre():
    c = Contour2D("circle")
    d = discretize_panels(c, 8, 16, 0, 0.1)
    xi, _ = np.polynomial.legendre.leggauss(16)
    h = 2 * np.pi / 8
    t = np.concatenate([j * h + h / 2 * (xi + 1) for j in range(8)])
    assert np.allclose(d.colloc_params, t, atol=1e-14)
    assert np.allclose(d.colloc, c.position(t), atol=1e-14)


@pytest.mark.parametrize("n_refine", [1, 5, 12, 20])
def test_corner_clustering(n_refine):
    d = discretize_panels(Contour2D("teardrop"), 16, 16, n_refine, 0.25)
    lengths = d.panels[:, 1] - d.panels[:, 0]
    base = 2 * np.pi / 16
    assert lengths.min() == pytest.approx(base * 2.0**-n_refine, rel=1e-12)
    assert lengths.sum() == pytest.approx(2 * np.pi, rel=1e-14)
    # the smallest panels (two per side) flank the corner from either side
    small = d.panels[np.isclose(lengths, lengths.min(), rtol=1e-9)]
    assert len(small) == 4
    assert small[:, 0].min() == 0.0
    assert small[:, 1].max() == pytest.approx(2 * np.pi, abs=1e-15)


def test_local_distance_rule():
    d = discretize_panels(Contour2D("teardrop"), 16, 16, 20, 0.25)
    arclen = np.bincount(d.panel_index, d.weights)
    expect = np.repeat(np.minimum(0.25, 0.5 * arclen), 8)
    assert np.allclose(d.d_local, expect, rtol=1e-12)
    assert d.d_local.max() <= 0.25
    coarse = discretize_panels(Contour2D("teardrop"), 4, 16, 20, 0.25)
    assert coarse.d_local.max() == 0.25


def test_weights_integrate_arclength():
    d = discretize_panels(Contour2D("circle", {"radius": 2.0}), 10, 16, 0, 0.1)
    assert d.weights.sum() == pytest.approx(4 * np.pi, rel=1e-13)


def test_panel_validation():
    c = Contour2D("teardrop")
    with pytest.raises(GeometryError):
        discretize_panels(c, 1)
    with pytest.raises(GeometryError):
        discretize_panels(c, 8, p_panel=7)
    with pytest.raises(GeometryError):
        discretize_panels(c, 8, n_refine=-1)
    with pytest.raises(GeometryError, match="collapse"):
        discretize_panels(c, 8, n_refine=60)


# -- proxy circle -------------------------------------------------------------------


def test_proxy_circle_example():
    disc = discretize_smooth(Contour2D("circle"), 4, 0.1)
    proxy = build_proxy_circle(disc, 1.5, 5)
    assert np.allclose(proxy.center, 0, atol=1e-15)
    assert proxy.radius == pytest.approx(1.5)
    th = 2 * np.pi * np.arange(5) / 5
    assert np.allclose(proxy.points, 1.5 * np.stack([np.cos(th), np.sin(th)], -1), atol=1e-15)


def test_proxy_default_count():
    disc = discretize_smooth(Contour2D("starfish"), 256, 0.1)
    assert build_proxy_circle(disc).p == 257


def test_proxy_factor_must_exceed_one():
    disc = discretize_smooth(Contour2D("circle"), 8, 0.1)
    with pytest.raises(ValueError):
        build_proxy_circle(disc, 1.0)


def test_panel_proxy_centre_uses_arclength():
    d = discretize_panels(Contour2D("teardrop"), 16, 16, 20, 0.25)
    proxy = build_proxy_circle(d)
    # the node mean is dragged toward the refined corner at (1, 0); the curve centroid is not
    assert proxy.center[0] < d.colloc.mean(axis=0)[0] - 0.1
    assert np.all(proxy.contains(d.colloc))


# -- 3D surfaces -------------------------------------------------------------------


def test_ellipsoid_1024():
    s = Surface3D("ellipsoid")
    d = discretize_surface(s, 32, 32, 0.1)
    assert (d.m, d.n) == (1024, 256)
    assert np.all(s.contains(d.sources))


def test_torus_large_d_rejected():
    with pytest.raises(GeometryError):
        discretize_surface(Surface3D("torus", {"R": 1.0, "r": 0.3}), 16, 16, 0.5)


def test_sphere_sources_radius():
    d = discretize_surface(Surface3D("ellipsoid", {"a": 1.0, "b": 1.0, "c": 1.0}), 4, 4, 0.1)
    assert np.allclose(np.linalg.norm(d.sources, axis=1), 0.9, rtol=1e-14)


@pytest.mark.parametrize("kind", ["ellipsoid", "torus"])
def test_surface_invariants(kind):
    rot = rotation_matrix([0.3, -0.4, 1.1])
    s = Surface3D(kind, center=(1.0, 2.0, -1.0), rotation=rot)
    d = discretize_surface(s, 24, 16, 0.1)
    assert d.m == 4 * d.n
    assert np.all(s.contains(d.sources))
    assert s.contains(s.interior_point[None])[0]
    u, v = s.param_grid(12, 8, offset=0.5)
    x = s.position(u, v)
    assert np.all(s.contains(x + 0.01 * s.inward_normal(u, v)))
    assert not np.any(s.contains(x - 0.01 * s.inward_normal(u, v)))


def test_surface_validation():
    with pytest.raises(GeometryError):
        Surface3D("cube")
    with pytest.raises(GeometryError):
        Surface3D("torus", {"R": 0.3, "r": 0.4})
    with pytest.raises(GeometryError):
        Surface3D("ellipsoid", rotation=2 * np.eye(3))
    with pytest.raises(GeometryError):
        discretize_surface(Surface3D("ellipsoid"), 5, 4, 0.1)


def test_proxy_sphere():
    d = discretize_surface(Surface3D("ellipsoid", {"a": 1.0, "b": 1.0, "c": 1.0}), 16, 16, 0.1)
    proxy = build_proxy_sphere(d, 1.5)
    assert proxy.radius == pytest.approx(1.5, rel=1e-12)
    assert proxy.p == 257
    with pytest.raises(ValueError):
        build_proxy_sphere(d, 1.5, 1)
    assert build_proxy_sphere(discretize_surface(Surface3D("ellipsoid"), 32, 32, 0.1)).p == 1025


@pytest.mark.parametrize("p", [32, 100, 257, 1025, 4096])
def test_fibonacci_spacing(p):
    from scipy.spatial import cKDTree

    pts = fibonacci_sphere(p)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1, atol=1e-14)
    dist, _ = cKDTree(pts).query(pts, k=2)
    chord = dist[:, 1].min()
    geodesic = 2 * np.arcsin(chord / 2)
    expected = np.sqrt(4 * np.pi / p)
    assert geodesic >= 0.5 * expected


def test_rotation_matrix_orthogonal():
    R = rotation_matrix([0.5, 0.3, 0.2])
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(R) == pytest.approx(1.0)
