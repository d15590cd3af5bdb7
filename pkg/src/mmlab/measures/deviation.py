"""Deviation measures V_r(A) = int_A (1 - b_r(x) / (pi r^2)) dH^2(x) and r-profiles.

Nested Monte Carlo: outer points x are uniform on the region (stratified
around singular vertices on meshes), the inner ball volume estimate is
unbiased and enters v_r linearly, so the nested estimator is unbiased.  Its
standard error is the outer sample standard error of the per-point values,
which already contains the inner variance.

Every outer index draws from its own substream ``(seed, tag, stratum, i)``,
so results are identical for any number of workers.
"""

from __future__ import annotations

import hashlib
import math
import multiprocessing as mp
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import InvalidParameter
from ..estimate import EstimatorConfig, MeasureEstimate
from ..geometry.regions import area as region_area
from ..geometry.sampling import PieceSampler, face_sampler, region_sampler
from ..geometry.surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from ..geometry.types import PointBatch, RegionSpec, SurfacePoint
from ..rng import substream
from .ball import analytic_ball_area, inner_ball
from .cone import cone_deviation_ball, half_plane_strip_deviation, omega

TAG_DEV = 31
STRATUM_MARGIN = 0.05
N_BANDS = 32
OMEGA = {1: omega(1), 2: omega(2), 3: omega(3)}


def r_tag(r: float) -> int:
    """A stream tag derived from the bits of r (independent streams per radius, reproducible)."""
    return int.from_bytes(hashlib.sha256(struct.pack("<d", float(r))).digest()[:4], "little")


# ----------------------------------------------------------------- strata
@dataclass
class Stratum:
    area: float
    draw: object  # (rng) -> SurfacePoint
    n: int


def _corner_pieces(surface: PolyhedralSurface, faces, r: float):
    """Corner triangles around singular vertices, scaled to contain every point within r of the vertex."""
    m = surface.mesh
    alt = m.corner_altitudes()
    sing = surface.singular_vertex
    lam = np.zeros((m.n_faces, 3))
    pf, pt, pa = [], [], []
    for f in faces:
        P = m.charts[f]
        for k in range(3):
            if not sing[m.faces[f, k]]:
                continue
            # altitude from corner k onto the opposite edge (k + 1)
            a_k = alt[f, k]
            lk = min(0.5, r * (1 + STRATUM_MARGIN) / a_k)
            lam[f, k] = lk
            tri = (P[k], P[k] + lk * (P[(k + 1) % 3] - P[k]), P[k] + lk * (P[(k + 2) % 3] - P[k]))
            pf.append(f)
            pt.append(tri)
            pa.append(lk * lk * m.face_area[f])
    return lam, pf, pt, pa


def polyhedral_strata(surface: PolyhedralSurface, region: RegionSpec, r: float, n_outer: int):
    m = surface.mesh
    faces = np.arange(m.n_faces) if region.kind == "whole" else np.array(sorted(set(region.faces)))
    lam, pf, pt, pa = _corner_pieces(surface, faces, r)
    total = float(m.face_area[faces].sum())
    fs = face_sampler(surface, faces)
    if not pf:
        return [Stratum(total, lambda rng: fs.sample(rng, 1).point(0), n_outer)]
    near = PieceSampler(pf, pt, pa)
    far_area = total - near.total
    charts = m.charts

    def draw_far(rng):
        for _ in range(100_000):
            b = fs.sample(rng, 1)
            f = int(b.faces[0])
            bary = surface.barycentric(f, b.coords[0])
            if not np.any(bary > 1.0 - lam[f]):
                return b.point(0)
        raise RuntimeError("rejection sampling of the far stratum failed")

    frac = near.total / total
    n_near = int(round(n_outer * max(0.75, frac))) if far_area > 1e-12 * total else n_outer
    # every stratum keeps >= 2 samples so its variance is estimable
    n_far = n_outer - n_near
    if far_area > 1e-12 * total and n_outer >= 4:
        n_far = max(n_far, 2)
    n_near = n_outer - n_far
    bands = max(1, min(N_BANDS, n_near // 2))
    out = []
    # equal-area radial bands of the corner triangles, equal allocation
    edges = np.sqrt(np.linspace(0.0, 1.0, bands + 1))
    tri = np.asarray(pt, dtype=float)
    cdf = near.cdf
    for j in range(bands):
        s_lo, s_hi = edges[j], edges[j + 1]

        def draw_band(rng, s_lo=s_lo, s_hi=s_hi):
            u = rng.random(3)
            i = min(int(np.searchsorted(cdf, u[0], side="right")), len(cdf) - 1)
            sv = math.sqrt(s_lo * s_lo + u[1] * (s_hi * s_hi - s_lo * s_lo))
            P0, P1, P2 = tri[i]
            xy = P0 + sv * ((1 - u[2]) * (P1 - P0) + u[2] * (P2 - P0))
            return SurfacePoint((float(xy[0]), float(xy[1])), int(pf[i]))

        nj = n_near // bands + (1 if j < n_near % bands else 0)
        out.append(Stratum(near.total / bands, draw_band, nj))
    if n_outer - n_near > 0:
        out.append(Stratum(far_area, draw_far, n_outer - n_near))
    return out


def generic_strata(surface: Surface, region: RegionSpec, n_outer: int, budget: int):
    """One stratum over a superset of the region; points outside the region contribute 0."""
    draw, accept, sup_area = region_sampler(surface, region, budget)

    def one(rng):
        b = draw(rng, 1)
        if accept is not None and not accept(b)[0]:
            return None
        return b.point(0)

    return [Stratum(sup_area, one, n_outer)]


# ------------------------------------------------------------ evaluation
_JOB = None


def _eval_indices(args):
    k, idx = args
    surface, strata, r, cfg, tag = _JOB
    st = strata[k]
    out = np.empty(len(idx))
    exact = np.empty(len(idx), dtype=bool)
    full = math.pi * r * r
    for j, i in enumerate(idx):
        rng = substream(cfg.seed, tag, k, int(i))
        x = st.draw(rng)
        if x is None:
            out[j], exact[j] = 0.0, True
            continue
        b, _, ex = inner_ball(surface, x, r, cfg.inner_method, cfg.inner, rng, cfg.budget)
        out[j] = 1.0 - b / full
        exact[j] = ex
    return out, exact


def _evaluate(surface, strata, r, cfg, tag):
    global _JOB
    _JOB = (surface, strata, r, cfg, tag)
    jobs = []
    for k, st in enumerate(strata):
        idx = np.arange(st.n)
        chunks = np.array_split(idx, max(1, min(st.n, 4 * cfg.workers))) if cfg.workers > 1 else [idx]
        jobs += [(k, c) for c in chunks if len(c)]
    try:
        if cfg.workers > 1:
            with mp.get_context("fork").Pool(cfg.workers) as pool:
                res = pool.map(_eval_indices, jobs)
        else:
            res = [_eval_indices(j) for j in jobs]
    finally:
        _JOB = None
    vals = [[] for _ in strata]
    exact = [[] for _ in strata]
    for (k, _), (v, e) in zip(jobs, res):
        vals[k].append(v)
        exact[k].append(e)
    return [np.concatenate(v) for v in vals], [np.concatenate(e) for e in exact]


def nested_deviation(surface, strata, r, cfg, tag) -> MeasureEstimate:
    vals, exact = _evaluate(surface, strata, r, cfg, tag)
    V = 0.0
    var = 0.0
    n_total = 0
    all_exact = True
    for st, v, e in zip(strata, vals, exact):
        V += st.area * v.mean()
        if len(v) > 1:
            var += st.area ** 2 * v.var(ddof=1) / len(v)
        n_total += len(v)
        all_exact &= bool(e.all())
    return MeasureEstimate(float(V), float(math.sqrt(var)), n_total * (1 if all_exact else cfg.inner + 1), "monte_carlo")


# ------------------------------------------------------------------- API
def _region_area_positive(surface, region, cfg):
    if region.kind == "strip":
        return
    A = region_area(surface, region, cfg.with_(inner_method="auto")).value
    if not A > 0:
        raise InvalidParameter("region has zero area")


def deviation(surface: Surface, region: RegionSpec, r: float, cfg: EstimatorConfig | None = None) -> MeasureEstimate:
    """V_r(region) for the 2-dimensional Hausdorff measure."""
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    tag = TAG_DEV + r_tag(r)
    analytic_inner = cfg.inner_method in ("auto", "analytic")
    if not isinstance(surface, PolyhedralSurface):
        # homogeneous surfaces: v_r is constant
        if analytic_inner and region.kind == "whole" and isinstance(surface, (FlatTorus, Sphere)):
            v = 1.0 - analytic_ball_area(surface, (0.0, 0.0) if isinstance(surface, FlatTorus) else (1.0, 0.0), r) / (math.pi * r * r)
            return MeasureEstimate(surface.total_area() * v)
        if analytic_inner and isinstance(surface, Plane):
            _region_area_positive(surface, region, cfg)
            return MeasureEstimate(0.0)
        if analytic_inner and cfg.outer_method in ("auto", "quadrature"):
            if isinstance(surface, HalfPlane) and region.kind == "strip":
                return half_plane_strip_deviation(region.offset, r, cfg.quad_limit)
            if isinstance(surface, Cone):
                R = None
                if region.kind == "ball" and region.center.coords[0] == 0.0:
                    R = region.radius
                elif region.kind == "vertex" and region.vertex == 0:
                    R = region.radius
                if R is not None:
                    return cone_deviation_ball(surface.rho, R, r, cfg.quad_limit)
        strata = generic_strata(surface, region, cfg.outer, cfg.budget)
        return nested_deviation(surface, strata, r, cfg, tag)
    if region.kind in ("whole", "faces") and cfg.outer_method in ("auto", "stratified"):
        strata = polyhedral_strata(surface, region, r, cfg.outer)
    elif region.kind in ("whole", "faces"):
        strata = [Stratum(region_area(surface, region).value,
                          (lambda fs: (lambda rng: fs.sample(rng, 1).point(0)))(
                              face_sampler(surface, None if region.kind == "whole" else region.faces)),
                          cfg.outer)]
    else:
        strata = generic_strata(surface, region, cfg.outer, cfg.budget)
    return nested_deviation(surface, strata, r, cfg, tag)


# ------------------------------------------------------------------ profile
@dataclass
class ProfileRow:
    r: float
    V: MeasureEstimate

    @property
    def V_over_r(self) -> float:
        return self.V.value / self.r

    @property
    def V_over_r2(self) -> float:
        return self.V.value / self.r ** 2

    def to_dict(self) -> dict:
        return {"r": self.r, "V_r": self.V.value, "se": self.V.std_error,
                "V_r_over_r": self.V_over_r, "V_r_over_r2": self.V_over_r2,
                "se_over_r": self.V.std_error / self.r, "se_over_r2": self.V.std_error / self.r ** 2,
                "method": self.V.method}


@dataclass
class Fit:
    c1: float
    c2: float
    se1: float
    se2: float
    ci1: tuple[float, float]
    ci2: tuple[float, float]
    chi2: float
    dof: int
    birge: float
    reliable: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DeviationProfile:
    region: RegionSpec
    rows: list[ProfileRow]
    fit: Fit
    constants: dict = field(default_factory=lambda: {"omega_1": OMEGA[1], "omega_2": OMEGA[2], "omega_3": OMEGA[3]})

    def to_dict(self) -> dict:
        return {"region": self.region.to_dict(), "rows": [row.to_dict() for row in self.rows],
                "fit": self.fit.to_dict(), "constants": self.constants}

    def csv_rows(self) -> list[list]:
        head = ["r", "V_r", "se", "V_r_over_r", "V_r_over_r2"]
        return [head] + [[row.r, row.V.value, row.V.std_error, row.V_over_r, row.V_over_r2] for row in self.rows]


def fit_profile(rs, V, se, level: float = 0.99, chi2_quantile: float = 0.999) -> Fit:
    """Weighted least squares V ~ c1 r + c2 r^2 with Birge-ratio scaled intervals."""
    rs = np.asarray(rs, dtype=float)
    V = np.asarray(V, dtype=float)
    se = np.asarray(se, dtype=float)
    floor = max(1e-12 * float(np.max(np.abs(V))) if len(V) else 0.0, 1e-300)
    sig = np.maximum(se, floor)
    X = np.column_stack([rs, rs ** 2]) / sig[:, None]
    y = V / sig
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    cov = np.linalg.pinv(X.T @ X)
    resid = y - X @ coef
    chi2 = float(resid @ resid)
    dof = max(len(rs) - 2, 1)
    birge = max(1.0, math.sqrt(chi2 / dof))
    z = float(stats.norm.ppf(0.5 + level / 2))
    se1, se2 = (math.sqrt(max(cov[i, i], 0.0)) * birge for i in range(2))
    reliable = chi2 <= float(stats.chi2.ppf(chi2_quantile, dof))
    c1, c2 = float(coef[0]), float(coef[1])
    return Fit(c1, c2, se1, se2, (c1 - z * se1, c1 + z * se1), (c2 - z * se2, c2 + z * se2), chi2, dof, birge, reliable)


def profile(surface: Surface, region: RegionSpec, cfg: EstimatorConfig | None = None) -> DeviationProfile:
    """Rows (r_j, V_{r_j}, V/r, V/r^2) on the geometric schedule and the (c1, c2) fit."""
    cfg = cfg or EstimatorConfig()
    rs = sorted(cfg.schedule(surface.feature_scale()), reverse=True)
    rows = [ProfileRow(r, deviation(surface, region, r, cfg)) for r in rs]
    fit = fit_profile([row.r for row in rows], [row.V.value for row in rows], [row.V.std_error for row in rows],
                      chi2_quantile=cfg.chi2_quantile)
    return DeviationProfile(region, rows, fit)
