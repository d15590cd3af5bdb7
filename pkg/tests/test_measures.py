import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmlab import catalog
from mmlab.errors import InvalidParameter, PreconditionViolation
from mmlab.estimate import EstimatorConfig
from mmlab.geodesics import analytic_distances
from mmlab.geometry import RegionSpec, SurfacePoint, build_analytic, sample_batch
from mmlab.measures import (MeasureSpec, ball_volume, bonk_lang_check, cone_mass, deviation, exchange_check,
                            fit_profile, halfspace_boundary_constant, mean_curvature_check, omega)
from mmlab.measures.ball import analytic_ball_area
from mmlab.measures.cone import cone_ball_area, cone_deviation_ball, half_plane_strip_deviation
from mmlab.measures.deviation import r_tag

CUBE = catalog.cube()


def mc_ball_area(surface, x, r, box, n=400_000, seed=0):
    """Hit-or-miss area of B(x, r) inside a coordinate box, by closed-form distances."""
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = box
    ys = np.column_stack([x0 + (x1 - x0) * rng.random(n), y0 + (y1 - y0) * rng.random(n)])
    hit = analytic_distances(surface, np.asarray(x, float), ys) < r
    a = (x1 - x0) * (y1 - y0)
    p = hit.mean()
    return a * p, a * math.sqrt(p * (1 - p) / n)


def test_omega():
    assert omega(1) == pytest.approx(2.0)
    assert omega(2) == pytest.approx(math.pi)
    assert omega(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("r", [0.3, 0.6, 0.9])
def test_torus_ball_area_against_hit_or_miss(r):
    T = build_analytic("flat_torus")
    b = analytic_ball_area(T, (0.2, 0.7), r)
    est, se = mc_ball_area(T, (0.2, 0.7), r, ((0, 1), (0, 1)))
    assert abs(b - est) <= 4 * se
    assert b <= 1.0


@pytest.mark.parametrize("alpha,a,r", [(0.3, 0.2, 1.0), (1.5, 0.5, 1.0), (3.0, 0.4, 0.5), (4.0, 1.0, 0.8)])
def test_cone_ball_area_against_hit_or_miss(alpha, a, r):
    C = build_analytic("cone", alpha=alpha)
    rho = C.rho
    x = (a, 0.0)
    # (radius, angle) coordinates: B(x, r) lies in radius < a + r, uniform in the area element u du dtheta
    rng = np.random.default_rng(1)
    n = 400_000
    R = a + r
    u = R * np.sqrt(rng.random(n))
    th = rho * rng.random(n)
    hit = analytic_distances(C, np.array(x), np.column_stack([u, th])) < r
    tot = 0.5 * rho * R * R
    p = hit.mean()
    est, se = tot * p, tot * math.sqrt(p * (1 - p) / n)
    assert abs(cone_ball_area(rho, a, r) - est) < 4 * se


def test_cube_vertex_ball_matches_cone_formula():
    # near a cube corner the surface is a cone of total angle 3 pi / 2
    v = 0
    x = CUBE.vertex_point(v)
    for r in (0.2, 0.5):
        b = ball_volume(CUBE, x, r).value
        assert b == pytest.approx(0.75 * math.pi * r * r, rel=1e-12)
    rho = 1.5 * math.pi
    f = x.face
    P = CUBE.mesh.charts[f]
    k = list(CUBE.faces_py[f]).index(v)
    for t in (0.1, 0.25):
        # a point at distance t from the corner along the face diagonal direction
        c = P.mean(axis=0)
        d = (c - P[k]) / np.linalg.norm(c - P[k])
        p = SurfacePoint(tuple(P[k] + t * d), f)
        r = 0.3
        for method in ("pullback", "superset"):
            est = ball_volume(CUBE, p, r, EstimatorConfig(inner=40_000, seed=3, inner_method=method))
            assert abs(est.value - cone_ball_area(rho, t, r)) < 4 * est.std_error + 1e-12


def test_flat_disk_is_exact():
    x = CUBE.face_centroid_point(0)
    est = ball_volume(CUBE, x, 0.2)
    assert est.std_error == 0.0
    assert est.value == pytest.approx(0.04 * math.pi, rel=1e-14)


def test_sphere_cap_coefficient():
    S = build_analytic("sphere")
    for r in (0.01, 0.02):
        v = 1 - ball_volume(S, SurfacePoint((1.0, 0.0)), r).value / (math.pi * r * r)
        assert v / r ** 2 == pytest.approx(1 / 12, rel=1e-3)


def test_cone_mass_law():
    for a in (0.05, 0.1, 0.2, 0.4):
        m = cone_mass(a).value
        assert abs(m / a - 1 / 12) <= 0.5 * a
    assert cone_mass(0.0).value == 0.0
    with pytest.raises(InvalidParameter):
        cone_mass(7.0)


def test_cone_mass_is_scale_free():
    a = 0.7
    rho = 2 * math.pi - a
    m = cone_mass(a).value
    for r in (0.1, 1.0, 10.0):
        V = cone_deviation_ball(rho, 100 * r, r).value
        assert V / r ** 2 == pytest.approx(m, rel=1e-8)


def test_half_space_constants():
    assert halfspace_boundary_constant(1).value == 0.25
    assert halfspace_boundary_constant(2).value == pytest.approx(2 / (3 * math.pi), rel=1e-8)
    assert halfspace_boundary_constant(3).value == pytest.approx(3 / 16, rel=1e-8)


def test_half_plane_strip_is_linear_in_r():
    for r in (0.1, 0.5):
        V = half_plane_strip_deviation(5.0, r).value
        assert V / r == pytest.approx(2 / (3 * math.pi), rel=1e-8)
    H = build_analytic("half_plane")
    assert deviation(H, RegionSpec.strip(5.0), 0.3).value == pytest.approx(0.3 * 2 / (3 * math.pi), rel=1e-8)


def test_torus_deviation_vanishes():
    T = build_analytic("flat_torus")
    assert deviation(T, RegionSpec.whole(), 0.1).value == 0.0
    mc = deviation(T, RegionSpec.whole(), 0.1, EstimatorConfig(outer=256, inner=512, inner_method="monte_carlo"))
    assert abs(mc.value) < 4 * mc.std_error


def test_deviation_reproducible_and_worker_invariant():
    cfg = EstimatorConfig(outer=64, inner=64, seed=11)
    a = deviation(CUBE, RegionSpec.whole(), 0.1, cfg)
    b = deviation(CUBE, RegionSpec.whole(), 0.1, cfg)
    c = deviation(CUBE, RegionSpec.whole(), 0.1, cfg.with_(workers=2))
    assert a.value == b.value == c.value
    assert a.std_error == c.std_error
    d = deviation(CUBE, RegionSpec.whole(), 0.05, cfg)
    assert d.value != a.value


def test_r_tag_separates_halvings():
    tags = {r_tag(0.1 * 0.5 ** j) for j in range(12)}
    assert len(tags) == 12


def test_cube_deviation_is_quadratic():
    # V_r(cube) = 8 m(pi/2) r^2 while balls around different corners stay disjoint
    want = 8 * cone_mass(math.pi / 2).value
    cfg = EstimatorConfig(outer=1024, inner=1024, seed=5)
    for r in (0.1, 0.05):
        V = deviation(CUBE, RegionSpec.whole(), r, cfg)
        assert abs(V.value / r ** 2 - want) < 4 * V.std_error / r ** 2


def test_fit_profile_recovers_coefficients():
    rng = np.random.default_rng(0)
    rs = 0.1 * 0.5 ** np.arange(7)
    c1, c2 = 0.3, 0.8
    se = 0.01 * rs ** 2 + 1e-6
    V = c1 * rs + c2 * rs ** 2 + se * rng.normal(size=len(rs))
    fit = fit_profile(rs, V, se)
    assert fit.ci1[0] <= c1 <= fit.ci1[1]
    assert fit.ci2[0] <= c2 <= fit.ci2[1]
    assert fit.reliable
    bad = V.copy()
    bad[2] += 50 * se[2]
    assert not fit_profile(rs, bad, se).reliable


# ------------------------------------------------------------ exchange
def test_exchange_equality_cases_are_exact():
    T = build_analytic("flat_torus")
    rec = exchange_check(T, MeasureSpec(), MeasureSpec(), RegionSpec.whole(), 0.2)
    assert rec.exact and rec.lhs.value == rec.rhs.value
    p = CUBE.face_centroid_point(3)
    rec = exchange_check(CUBE, MeasureSpec(), MeasureSpec("dirac", p), p, 0.2)
    assert rec.exact and rec.lhs.value == rec.rhs.value == pytest.approx(0.04 * math.pi)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1_000_000), st.sampled_from(["hausdorff", "weighted"]), st.sampled_from(["hausdorff", "weighted"]),
       st.floats(0.05, 0.4))
def test_exchange_sides_are_ordered_on_common_pairs(seed, mu, nu, r):
    cfg = EstimatorConfig(outer=24, inner=24, seed=seed)
    faces = RegionSpec.face_set([seed % 12])
    rec = exchange_check(CUBE, MeasureSpec(mu), MeasureSpec(nu), faces, r, cfg)
    assert rec.lhs.value <= rec.rhs.value + 1e-12
    assert rec.holds


def test_exchange_on_plane_ball():
    P = build_analytic("plane")
    A = RegionSpec.ball(SurfacePoint((0.0, 0.0)), 0.3)
    rec = exchange_check(P, MeasureSpec("weighted", amp=0.6), MeasureSpec(), A, 0.2, EstimatorConfig(outer=64, inner=64))
    assert rec.holds and rec.lhs.value > 0


def test_weighted_density_positive():
    with pytest.raises(InvalidParameter):
        MeasureSpec("weighted", amp=1.2)


# ------------------------------------------------------------ deficit bounds
def test_deficit_at_cone_apex():
    a = 0.1
    C = build_analytic("cone", alpha=a)
    rec = bonk_lang_check(C, SurfacePoint((0.0, 0.0)), 0.5)
    assert rec.lhs == pytest.approx(a / (2 * math.pi))
    assert rec.holds and rec.ratio == pytest.approx(1 / (2 * math.pi))


def test_deficit_on_convex_plane():
    S = catalog.random_convex_plane(50, seed=2)
    b = sample_batch(S, RegionSpec.whole(), 20, seed=2)
    amb = S.to_ambient(b.faces, b.coords)
    for i in range(20):
        room = 1 - np.abs(amb[i, :2]).max()
        rec = bonk_lang_check(S, b.point(i), 0.9 * room, EstimatorConfig(inner=1024, seed=i))
        assert rec.holds


def test_deficit_preconditions():
    with pytest.raises(PreconditionViolation):
        bonk_lang_check(CUBE, CUBE.face_centroid_point(0), 0.1)
    S = catalog.random_convex_plane(50, seed=2)
    with pytest.raises(PreconditionViolation):
        bonk_lang_check(S, S.face_centroid_point(0), 3.0)


def test_mean_curvature_at_cube_vertex():
    x = CUBE.vertex_point(0)
    r = 0.05
    rec = mean_curvature_check(CUBE, x, r)
    # three unit-angle edges of length 6r meet at the corner
    assert rec.K == pytest.approx(3 * 6 * r * math.pi / 2)
    assert rec.lhs == pytest.approx(0.25)
    assert rec.holds_with(100.0)


def test_mean_curvature_on_cap():
    S = catalog.paraboloid_cap(50, seed=0)
    top = np.flatnonzero(S.mesh.positions[:, 2] > -1e-9)[:10]
    for v in top:
        rec = mean_curvature_check(S, S.vertex_point(int(v)), 0.005)
        assert rec.holds_with(100.0)
