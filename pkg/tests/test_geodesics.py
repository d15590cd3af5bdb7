import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmlab import catalog
from mmlab.errors import FlowUndefined, InvalidParameter
from mmlab.geodesics import distance, exp_map, flow
from mmlab.geodesics.flow import BOUNDARY_HIT, COMPLETED, VERTEX_HIT
from mmlab.geometry import RegionSpec, SurfacePoint, TangentVector, build_analytic, sample_batch

SQUARE = catalog.doubled_square()
CUBE = catalog.cube()
TET = catalog.tetrahedron()


def chart_map(S, f):
    P = S.mesh.charts[f]
    X = S.mesh.positions[S.mesh.faces[f]][:, :2]
    E = np.column_stack([P[1] - P[0], P[2] - P[0]])
    J = np.column_stack([X[1] - X[0], X[2] - X[0]]) @ np.linalg.inv(E)
    return J, X[0] - J @ P[0]


def square_point(p, sheet):
    """The point of the given sheet of the doubled unit square over the planar point p."""
    for f in np.flatnonzero(SQUARE.mesh.copy_of_face == sheet):
        J, b = chart_map(SQUARE, f)
        c = np.linalg.solve(J, np.asarray(p) - b)
        if SQUARE.contains(int(f), c, tol=1e-12):
            return SurfacePoint((float(c[0]), float(c[1])), int(f))
    raise AssertionError("point not found")


def doubled_square_oracle(p, q, same_sheet):
    """Shortest path length on the doubled unit square by reflection in each side."""
    p, q = np.asarray(p), np.asarray(q)
    if same_sheet:
        return float(np.hypot(*(p - q)))
    best = math.inf
    for axis, c in ((0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)):
        q2 = q.copy()
        q2[axis] = 2 * c - q[axis]
        # crossing point of the segment p -> q2 with the side line, clamped to the side
        s = (c - p[axis]) / (q2[axis] - p[axis])
        z = p + s * (q2 - p)
        z[1 - axis] = min(max(z[1 - axis], 0.0), 1.0)
        z[axis] = c
        best = min(best, float(np.hypot(*(p - z)) + np.hypot(*(z - q))))
    return best


def test_cube_vertex_distances():
    m = CUBE.mesh
    P = m.positions
    v0 = 0
    for v in range(8):
        if v == v0:
            continue
        k = int(round(np.sum(np.abs(P[v] - P[v0]))))
        want = {1: 1.0, 2: math.sqrt(2), 3: math.sqrt(5)}[k]
        d = distance(CUBE, CUBE.vertex_point(v0), CUBE.vertex_point(v), 5.0).value
        assert d == pytest.approx(want, abs=1e-12)


def test_distance_beyond_r_max_is_none():
    d = distance(CUBE, CUBE.vertex_point(0), CUBE.vertex_point(7), 1.0)
    assert d.value is None


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.floats(0.02, 0.98),
       st.booleans())
def test_doubled_square_matches_reflection_oracle(px, py, qx, qy, same):
    p, q = (px, py), (qx, qy)
    x, y = square_point(p, 0), square_point(q, 0 if same else 1)
    d = distance(SQUARE, x, y, 10.0).value
    assert d == pytest.approx(doubled_square_oracle(p, q, same), abs=1e-9)


def test_flat_square_distance_is_euclidean():
    S = catalog.flat_square(40, seed=2)
    b = sample_batch(S, RegionSpec.whole(), 40, seed=5)
    amb = S.to_ambient(b.faces, b.coords)
    for i in range(0, 40, 2):
        d = distance(S, b.point(i), b.point(i + 1), 10.0).value
        assert d == pytest.approx(float(np.linalg.norm(amb[i] - amb[i + 1])), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1_000_000))
def test_metric_axioms_on_tetrahedron(seed):
    b = sample_batch(TET, RegionSpec.whole(), 3, seed=seed)
    x, y, z = b.to_list()
    dxy = distance(TET, x, y, 10).value
    dyx = distance(TET, y, x, 10).value
    dxz = distance(TET, x, z, 10).value
    dzy = distance(TET, z, y, 10).value
    assert dxy == pytest.approx(dyx, abs=1e-12)
    assert dxy <= dxz + dzy + 1e-12


def test_torus_flow_is_translation():
    T = build_analytic("flat_torus", a=1.0, b=2.0)
    v = TangentVector(SurfacePoint((0.3, 0.4)), (math.cos(0.7), math.sin(0.7)), 1.0)
    res = flow(T, v, 5.3)
    assert res.status == COMPLETED
    want = np.mod(np.array([0.3, 0.4]) + 5.3 * np.array([math.cos(0.7), math.sin(0.7)]), [1.0, 2.0])
    assert np.allclose(res.end.base.coords, want, atol=1e-12)


def test_sphere_great_circle_returns():
    S = build_analytic("sphere")
    v = TangentVector(SurfacePoint((1.0, 0.5)), (0.6, 0.8), 1.0)
    res = flow(S, v, 2 * math.pi)
    assert np.allclose(S.to_cartesian(res.end.base.coords), S.to_cartesian(v.base.coords), atol=1e-12)


def test_vertex_hit_and_boundary_hit():
    # aim exactly at a cube corner from a face point on the diagonal
    f = 0
    P = CUBE.mesh.charts[f]
    c = P.mean(axis=0)
    d = P[0] - c
    v = TangentVector(SurfacePoint(tuple(c), f), tuple(d / np.linalg.norm(d)), 1.0)
    res = flow(CUBE, v, 2.0)
    assert res.status == VERTEX_HIT
    with pytest.raises(FlowUndefined):
        exp_map(CUBE, v.scaled(2.0))
    S = catalog.flat_square(20, seed=0)
    w = TangentVector(S.face_centroid_point(0), (1.0, 0.0), 1.0)
    assert flow(S, w, 10.0).status == BOUNDARY_HIT


def test_exp_map_rejects_vertex_base():
    with pytest.raises(InvalidParameter):
        exp_map(CUBE, TangentVector(CUBE.vertex_point(0), (1.0, 0.0), 0.1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1_000_000), st.floats(0.0, 2 * math.pi), st.floats(0.01, 0.3))
def test_geodesic_segment_is_no_shorter_than_distance(seed, ang, L):
    x = sample_batch(CUBE, RegionSpec.whole(), 1, seed=seed).point(0)
    v = TangentVector(x, (math.cos(ang), math.sin(ang)), L)
    res = flow(CUBE, v, 1.0)
    if not res.completed:
        return
    d = distance(CUBE, x, res.end.base, 1.0).value
    assert d is not None and d <= L + 1e-9


def test_face_sequence_is_recorded():
    x = CUBE.face_centroid_point(0)
    v = TangentVector(x, (math.cos(0.13), math.sin(0.13)), 1.0)
    res = flow(CUBE, v, 3.0)
    assert res.completed
    assert len(res.face_sequence) >= 3
    assert res.time_elapsed == pytest.approx(3.0)
