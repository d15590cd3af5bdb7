import math

import numpy as np
import pytest

from mmlab.errors import InvalidParameter, PreconditionViolation
from mmlab.riemann_chart import (ball_areas, bilipschitz_delta, build_chart, chart_distance, flat_bias,
                                 metric_derivative_mass,
                                 frozen_ball_area, lattice_overestimate, prop_smooth_check, prop_smooth_suite,
                                 read_tensor_csv, tensor_family)

UNIT = (0.0, 1.0, 0.0, 1.0)


def test_identity_metric_has_zero_deviation():
    chart = build_chart(UNIT, 0.01, tensor_family("identity"))
    assert chart.delta_g == 0.0
    rec = prop_smooth_check(chart, ("disk", 0.5, 0.5, 0.1), 0.06)
    assert rec.bound == 0.0
    assert rec.Vr_A == 0.0 and rec.passes


def test_delta_above_one_over_C_is_rejected():
    with pytest.raises((InvalidParameter, PreconditionViolation)):
        build_chart(UNIT, 0.05, tensor_family("constant", g11=1.5))
    chart = build_chart(UNIT, 0.05, tensor_family("constant", g11=1.5), check_delta=False)
    assert chart.delta_g == pytest.approx(math.sqrt(1.5) - 1)


def test_bilipschitz_delta():
    assert bilipschitz_delta(np.array([1.0]), np.array([0.0]), np.array([1.0])) == 0.0
    assert bilipschitz_delta(np.array([0.9 ** 2]), np.array([0.0]), np.array([1.0])) == pytest.approx(1 / 0.9 - 1)
    with pytest.raises(InvalidParameter):
        bilipschitz_delta(np.array([1.0]), np.array([2.0]), np.array([1.0]))


def test_lattice_overestimate():
    eta = lattice_overestimate()
    assert 1.0 < eta < 1.03
    assert eta == pytest.approx(1.0275, abs=5e-4)


def test_chart_distance_flat():
    chart = build_chart(UNIT, 0.02, tensor_family("identity"))
    x, y = (0.11, 0.11), (0.71, 0.11)
    assert chart_distance(chart, x, y) == pytest.approx(0.6, rel=1e-12)
    d = chart_distance(chart, (0.11, 0.11), (0.71, 0.39))
    e = math.hypot(0.6, 0.28)
    assert e <= d + 1e-12 <= lattice_overestimate() * e + 1e-9


def test_constant_scaling_is_exact():
    # g -> c g and r -> sqrt(c) r scale every ball area by c
    c = 1.05
    h, r = 0.01, 0.08
    a = build_chart(UNIT, h, tensor_family("constant", g11=1.0, g12=0.01, g22=1.02))
    b = build_chart(UNIT, h, tensor_family("constant", g11=c, g12=0.01 * c, g22=1.02 * c))
    node = [a.node_of((0.5, 0.5))]
    ba = ball_areas(a, node, r)[0]
    bb = ball_areas(b, node, math.sqrt(c) * r)[0]
    assert bb == pytest.approx(c * ba, rel=1e-9)
    assert frozen_ball_area(c, 0.01 * c, 1.02 * c, h, math.sqrt(c) * r) == pytest.approx(
        c * frozen_ball_area(1.0, 0.01, 1.02, h, r), rel=1e-9)


def test_flat_bias_within_lattice_overestimate():
    # lattice paths are at least Euclidean and at most eta times longer, so balls shrink by at most 1/eta^2
    eta = lattice_overestimate()
    for r in (0.05, 0.08):
        assert 0 < flat_bias(0.01, r) < 1 - 1 / eta ** 2


def test_frozen_calibration_matches_flat_for_identity():
    assert frozen_ball_area(1.0, 0.0, 1.0, 0.01, 0.08) == pytest.approx(
        math.pi * 0.08 ** 2 * (1 - flat_bias(0.01, 0.08)), rel=1e-12)


def test_resolution_and_edge_guards():
    chart = build_chart(UNIT, 0.01, tensor_family("identity"))
    with pytest.raises(PreconditionViolation):
        prop_smooth_check(chart, ("disk", 0.5, 0.5, 0.1), 0.04)
    with pytest.raises(PreconditionViolation):
        prop_smooth_check(chart, ("disk", 0.2, 0.5, 0.1), 0.1)


def test_tensor_csv_round_trip(tmp_path):
    h = 0.05
    xs = (np.arange(10) + 0.5) * h
    lines = ["x,y,g11,g12,g22"]
    for x in xs:
        for y in xs:
            lines.append(f"{x},{y},{1 + 0.01 * x},0,1")
    path = tmp_path / "g.csv"
    path.write_text("\n".join(lines) + "\n")
    domain, arrays = read_tensor_csv(path, h)
    assert np.allclose(domain, (0, 0.5, 0, 0.5))
    chart = build_chart(domain, h, arrays)
    assert chart.shape == (10, 10)
    assert chart.g11[3, 7] == pytest.approx(1 + 0.01 * xs[3])
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(InvalidParameter):
        read_tensor_csv(bad, h)


def test_small_conformal_suite_is_bounded():
    chart = build_chart(UNIT, 0.005, tensor_family("conformal_bump", a=0.02))
    out = prop_smooth_suite(chart, ("disk", 0.5, 0.5, 0.1), (0.08, 0.04), max_sources=64)
    assert out["bounded"]
    assert all(rec["bound"] > 0 for rec in out["records"])
    assert out["C_empirical"] < 1.0


def test_homogeneity_of_distances():
    flat = build_chart(UNIT, 0.02, tensor_family("identity"))
    four = build_chart(UNIT, 0.02, tensor_family("constant", g11=4.0, g22=4.0), check_delta=False)
    for x, y in (((0.11, 0.11), (0.91, 0.11)), ((0.11, 0.11), (0.71, 0.39))):
        assert chart_distance(four, x, y) == pytest.approx(2 * chart_distance(flat, x, y), rel=1e-12)


def test_conformal_distance_dominates_flat():
    flat = build_chart(UNIT, 0.02, tensor_family("identity"))
    bumpy = build_chart(UNIT, 0.02, tensor_family("conformal_bump", a=0.02))
    x, y = (0.21, 0.31), (0.79, 0.65)
    assert chart_distance(bumpy, x, y) >= chart_distance(flat, x, y)


def test_metric_derivative_mass_of_linear_field():
    a = 0.04
    chart = build_chart(UNIT, 0.01, tensor_family("linear", a=a))
    assert metric_derivative_mass(chart, ("rect", 0.0, 1.0, 0.0, 1.0)) == pytest.approx(a, rel=1e-9)
    ident = build_chart(UNIT, 0.01, tensor_family("identity"))
    assert metric_derivative_mass(ident, ("rect", 0.0, 1.0, 0.0, 1.0)) == 0.0


def test_indefinite_tensor_rejected():
    with pytest.raises(InvalidParameter):
        build_chart(UNIT, 0.1, tensor_family("constant", g11=1.0, g12=0.0, g22=-1.0))


def test_conformal_bump_delta():
    # conformal factor 1 + a at the peak, so lengths stretch by sqrt(1 + a)
    chart = build_chart(UNIT, 0.005, tensor_family("conformal_bump", a=0.02))
    assert chart.delta_g == pytest.approx(math.sqrt(1.02) - 1, rel=1e-3)
