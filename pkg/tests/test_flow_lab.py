import math

import numpy as np
import pytest

from mmlab import catalog
from mmlab.errors import InvalidParameter
from mmlab.estimate import EstimatorConfig
from mmlab.flow_lab import (PhaseRegion, billiard_check, billiard_square, compare_measures, e_symmetry_check,
                            jacobian_suite, liouville_preservation_check, liouville_sample, pair_mass,
                            reversibility_check)
from mmlab.geometry import RegionSpec, build_analytic

CUBE = catalog.cube()
SQUARE = catalog.doubled_square()


def test_billiard_square_folding():
    pos, d, n = billiard_square((0.5, 0.5), (1.0, 0.0), 1.25)
    assert np.allclose(pos, (0.25, 0.5)) and np.allclose(d, (-1.0, 0.0)) and n == 1
    pos, d, n = billiard_square((0.5, 0.5), (1.0, 0.0), 2.0)
    assert np.allclose(pos, (0.5, 0.5)) and np.allclose(d, (1.0, 0.0)) and n == 2


def test_doubled_square_geodesics_are_billiards():
    rec = billiard_check(SQUARE, count=10, min_bounces=40, seed=1)
    assert rec.failures == 0
    assert rec.min_bounces >= 40
    assert rec.max_deviation < 1e-9


@pytest.mark.parametrize("name", ["cube", "tetrahedron", "doubled_square"])
def test_flow_is_reversible_on_meshes(name):
    S = getattr(catalog, name)()
    rec = reversibility_check(S, RegionSpec.whole(), 1.0, 2.0, 200, seed=3)
    assert rec.completed > 150
    assert rec.max_residual < 1e-9


@pytest.mark.parametrize("kind", ["flat_torus", "sphere"])
def test_flow_is_reversible_on_analytic_surfaces(kind):
    rec = reversibility_check(build_analytic(kind), RegionSpec.whole(), 1.0, 2.0, 100, seed=0)
    assert rec.completed == 100
    assert rec.max_residual < 1e-9


def test_jacobian_is_one():
    dets, skipped, tried = jacobian_suite(CUBE, 10, seed=2)
    assert len(dets) == 10
    assert np.max(np.abs(dets - 1)) < 1e-6


def test_liouville_samples_fill_the_disk():
    vs = liouville_sample(CUBE, RegionSpec.whole(), 0.5, 4000, seed=1)
    norms = np.array([v.norm for v in vs])
    assert norms.max() < 0.5
    # |v|^2 / r^2 is uniform on [0, 1]
    assert abs(np.mean(norms ** 2) / 0.25 - 0.5) < 0.02
    assert liouville_sample(CUBE, RegionSpec.whole(), 0.5, 0, seed=1) == []


def test_phase_region_mass():
    K = PhaseRegion(RegionSpec.face_set([0, 1]), 0.3)
    assert K.mass(CUBE) == pytest.approx(math.pi * 0.09 * 1.0)
    with pytest.raises(InvalidParameter):
        PhaseRegion(RegionSpec.whole(), 0.0)


def test_e_symmetry():
    rec = e_symmetry_check(CUBE, RegionSpec.whole(), 0.8, 100, seed=4)
    assert rec.completed > 80
    assert rec.max_residual < 1e-9


def test_preservation_on_cube_faces():
    cfg = EstimatorConfig(outer=3000, seed=5)
    rec = liouville_preservation_check(CUBE, RegionSpec.face_set([0, 1]), 0.1, 1.0, cfg)
    assert rec.holds
    assert rec.M_A == pytest.approx(math.pi * 0.01)


def test_pair_mass_on_torus_is_pi_r2_area():
    T = build_analytic("flat_torus")
    H = pair_mass(T, RegionSpec.whole(), 0.1, EstimatorConfig(outer=64, inner=2000, seed=0))
    assert abs(H.value - math.pi * 0.01) < 4 * H.std_error + 1e-12


def test_phase_identity_on_cube():
    rec = compare_measures(CUBE, RegionSpec.whole(), 0.1, EstimatorConfig(outer=512, inner=512, seed=7))
    assert rec.agree
    assert rec.M_TrK == pytest.approx(6 * math.pi * 0.01)


def test_phase_identity_exact_on_torus():
    rec = compare_measures(build_analytic("flat_torus"), RegionSpec.whole(), 0.2)
    assert rec.Vr_from_identity == pytest.approx(0.0, abs=1e-15)
