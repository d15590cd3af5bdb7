"""Executable measure inequalities: the exchange lemma, the Bonk-Lang deficit bound
and the mean-curvature deficit bound.

Exchange inequality, for Radon measures mu, nu and a Borel set A::

    int_A mu(B(x, r)) dnu(x)  <=  int_{B(A, r)} nu(B(y, r)) dmu(y)

Both sides are integrals over pairs (x, y) with d(x, y) < r; the left one
also needs x in A, the right one y in B(A, r), which is implied.  We sample
y from mu (on a superset of B(A, r)) and x from nu on a superset of B(y, r),
and evaluate both integrands on the same pairs, so the estimated left side
never exceeds the estimated right side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameter, PreconditionViolation, UnsupportedBackend
from ..estimate import EstimatorConfig, MeasureEstimate
from ..geodesics.distance import analytic_distances
from ..geodesics.unfold import propagate_with_relay
from ..geometry.curvature import _require_convex, edge_ball_lengths
from ..geometry.sampling import analytic_superset, region_sampler, window_superset
from ..geometry.surfaces import Cone, FlatTorus, PolyhedralSurface, Sphere, Surface
from ..geometry.types import PointBatch, RegionSpec, SurfacePoint
from ..rng import substream
from .ball import ball_volume

TAG_EXCHANGE = 41
TAG_BONK = 42
TAG_MEANCURV = 43


# ---------------------------------------------------------------- measures
@dataclass(frozen=True)
class MeasureSpec:
    """``hausdorff`` (H^2), ``weighted`` (density 1 + amp*cos(freq*u + phase) times H^2) or ``dirac``.

    ``u`` is the first ambient coordinate on meshes and the first backend
    coordinate on analytic surfaces.
    """

    kind: str = "hausdorff"
    point: SurfacePoint | None = None
    amp: float = 0.5
    freq: float = 3.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hausdorff", "weighted", "dirac"):
            raise InvalidParameter(f"unknown measure kind {self.kind!r}")
        if self.kind == "dirac" and self.point is None:
            raise InvalidParameter("dirac measure needs a point")
        if self.kind == "weighted" and not abs(self.amp) < 1:
            raise InvalidParameter("weighted density needs |amp| < 1 (positive density)")

    def density(self, surface: Surface, batch: PointBatch) -> np.ndarray:
        if self.kind == "hausdorff":
            return np.ones(len(batch))
        if isinstance(surface, PolyhedralSurface):
            u = surface.to_ambient(batch.faces, batch.coords)[:, 0] if len(batch) else np.zeros(0)
        else:
            u = batch.coords[:, 0]
        return 1.0 + self.amp * np.cos(self.freq * u + self.phase)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "weighted":
            d.update(amp=self.amp, freq=self.freq, phase=self.phase)
        if self.point is not None:
            d["point"] = {"face": self.point.face, "coords": list(self.point.coords)}
        return d

    @classmethod
    def from_dict(cls, d) -> "MeasureSpec":
        if isinstance(d, str):
            return cls(d)
        p = d.get("point")
        pt = SurfacePoint(tuple(float(c) for c in p["coords"]), p.get("face")) if p else None
        return cls(d.get("kind", "hausdorff"), pt, d.get("amp", 0.5), d.get("freq", 3.0), d.get("phase", 0.0))


def _canon(surface, p: SurfacePoint) -> SurfacePoint:
    return surface.canonicalize(p) if isinstance(surface, PolyhedralSurface) else p


class _Geo:
    """Distances from one source point, uniform on the polyhedral and analytic backends."""

    def __init__(self, surface: Surface, x: SurfacePoint, R: float, budget: int):
        self.surface = surface
        self.x = _canon(surface, x)
        self.R = R
        self.ws = propagate_with_relay(surface, self.x, R, budget) if isinstance(surface, PolyhedralSurface) else None

    def dist(self, batch: PointBatch) -> np.ndarray:
        if len(batch) == 0:
            return np.zeros(0)
        if self.ws is not None:
            return self.ws.distances(batch.faces, batch.coords)
        return analytic_distances(self.surface, self.x.coords, batch.coords)

    def superset(self):
        """(draw(rng, n) -> PointBatch, area) containing B(x, R)."""
        if self.ws is not None:
            ps = window_superset(self.ws, self.R)
            return ps.sample, ps.total
        draw, a = analytic_superset(self.surface, self.x.coords, self.R)
        return (lambda rng, n: PointBatch(draw(rng, n))), a


def _single(p: SurfacePoint) -> PointBatch:
    return PointBatch.from_points([p])


class _Region:
    """Membership in A and in its r-neighbourhood B(A, r) for chart points."""

    def __init__(self, surface, region, r, budget):
        self.surface = surface
        self.region = region
        self.r = r
        self.kind = "point" if isinstance(region, SurfacePoint) else region.kind
        if self.kind == "point":
            self.center, self.R = _canon(surface, region), 0.0
        elif self.kind in ("ball", "vertex"):
            if self.kind == "vertex":
                if not isinstance(surface, PolyhedralSurface):
                    raise UnsupportedBackend("vertex regions need a polyhedral surface")
                self.center = surface.vertex_point(region.vertex)
            else:
                self.center = _canon(surface, region.center)
            self.R = region.radius
        elif self.kind == "faces":
            if not isinstance(surface, PolyhedralSurface):
                raise UnsupportedBackend("face regions need a polyhedral surface")
            self.faces = np.asarray(region.faces, dtype=np.int64)
        elif self.kind != "whole":
            raise UnsupportedBackend(f"region {self.kind!r} is not supported by the exchange check")
        self.geo = _Geo(surface, self.center, self.R + r, budget) if self.kind in ("point", "ball", "vertex") else None
        self.budget = budget

    def contains(self, batch: PointBatch) -> np.ndarray:
        if self.kind == "whole":
            return np.ones(len(batch), dtype=bool)
        if self.kind == "faces":
            return np.isin(batch.faces, self.faces)
        if self.kind == "point":
            return np.zeros(len(batch), dtype=bool)
        return self.geo.dist(batch) < self.R

    def near(self, y: SurfacePoint, geo_y: _Geo) -> bool:
        """y in B(A, r)."""
        if self.kind == "whole":
            return True
        if self.kind == "faces":
            return geo_y.ws.distance_to_faces(self.faces) < self.r
        return bool(self.geo.dist(_single(y))[0] < self.R + self.r)


@dataclass
class ExchangeRecord:
    lhs: MeasureEstimate
    rhs: MeasureEstimate
    holds: bool
    exact: bool
    sigma: float
    n_pairs: int
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(), "holds": self.holds, "exact": self.exact,
                "sigma": self.sigma, "n_pairs": self.n_pairs, **self.detail}


def _outer_domain(surface: Surface, mu: MeasureSpec, A: _Region, r: float, budget: int):
    """(draw(rng, n), area) for a superset of B(A, r) on which mu lives (None for dirac mu)."""
    if mu.kind == "dirac":
        return None
    if math.isfinite(surface.total_area()):
        draw, _, a = region_sampler(surface, RegionSpec.whole(), budget)
        return draw, a
    if A.kind in ("point", "ball", "vertex"):
        return A.geo.superset()
    raise InvalidParameter("the exchange check needs a compact surface or a bounded region")


def _exchange_exact(surface, mu, nu, A, r, cfg):
    """Closed-form equality cases; None when no shortcut applies."""
    if mu.kind == "hausdorff" and nu.kind == "hausdorff" and A.kind == "whole" \
            and isinstance(surface, (FlatTorus, Sphere)):
        x0 = (0.0, 0.0) if isinstance(surface, FlatTorus) else (1.0, 0.0)
        b = ball_volume(surface, SurfacePoint(x0), r, cfg).value
        v = surface.total_area() * b
        return MeasureEstimate(v), MeasureEstimate(v)
    if nu.kind == "dirac" and mu.kind == "hausdorff" and A.kind in ("point", "whole"):
        p = _canon(surface, nu.point)
        if A.kind == "point":
            same = A.geo.dist(_single(p))[0] <= 1e-12
            if not same:
                return None
        b = ball_volume(surface, p, r, cfg)
        return b, b
    if nu.kind == "dirac" and mu.kind == "dirac":
        p, q = _canon(surface, nu.point), _canon(surface, mu.point)
        gq = _Geo(surface, q, r, cfg.budget)
        close = bool(gq.dist(_single(p))[0] < r)
        in_a = bool(A.contains(_single(p))[0]) or (A.kind == "point" and A.geo.dist(_single(p))[0] <= 1e-12)
        lhs = 1.0 if (in_a and close) else 0.0
        rhs = 1.0 if (close and (in_a or A.near(q, gq))) else 0.0
        return MeasureEstimate(lhs), MeasureEstimate(rhs)
    return None


def exchange_check(surface: Surface, mu_spec, nu_spec, region, r: float,
                   cfg: EstimatorConfig | None = None) -> ExchangeRecord:
    """Both sides of the exchange inequality on common sample pairs.

    ``region`` is a :class:`RegionSpec` or a :class:`SurfacePoint` (singleton).
    """
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    mu = mu_spec if isinstance(mu_spec, MeasureSpec) else MeasureSpec.from_dict(mu_spec)
    nu = nu_spec if isinstance(nu_spec, MeasureSpec) else MeasureSpec.from_dict(nu_spec)
    A = _Region(surface, region, r, cfg.budget)
    detail = {"mu": mu.to_dict(), "nu": nu.to_dict(), "r": r, "seed": cfg.seed,
              "region": region.to_dict() if isinstance(region, RegionSpec) else
              {"kind": "point", "face": region.face, "coords": list(region.coords)}}
    ex = _exchange_exact(surface, mu, nu, A, r, cfg)
    if ex is not None:
        lhs, rhs = ex
        sigma = math.hypot(lhs.std_error, rhs.std_error)
        return ExchangeRecord(lhs, rhs, lhs.value <= rhs.value + 3 * sigma, True, sigma, lhs.n_samples, detail)

    outer = _outer_domain(surface, mu, A, r, cfg.budget)
    n_out = 1 if outer is None else cfg.outer
    L = np.zeros(n_out)
    R = np.zeros(n_out)
    for i in range(n_out):
        rng = substream(cfg.seed, TAG_EXCHANGE, i)
        if outer is None:
            y = _canon(surface, mu.point)
            wy = 1.0
        else:
            draw, a = outer
            yb = draw(rng, 1)
            y = yb.point(0)
            wy = a * float(mu.density(surface, yb)[0])
        gy = _Geo(surface, y, r, cfg.budget)
        if nu.kind == "dirac":
            xb = _single(_canon(surface, nu.point))
            wx = np.ones(1)
        else:
            sdraw, sa = gy.superset()
            xb = sdraw(rng, cfg.inner)
            wx = sa * nu.density(surface, xb) / cfg.inner
        close = gy.dist(xb) < r
        in_a = A.contains(xb)
        if A.kind == "point" and nu.kind == "dirac":
            in_a = A.geo.dist(xb) <= 1e-12
        lhs_ind = close & in_a
        rhs_ind = close & (lhs_ind | A.near(y, gy)) if close.any() else close
        L[i] = wy * float(np.sum(wx * lhs_ind))
        R[i] = wy * float(np.sum(wx * rhs_ind))
    if n_out == 1:
        se_l = se_r = 0.0
    else:
        se_l = float(L.std(ddof=1) / math.sqrt(n_out))
        se_r = float(R.std(ddof=1) / math.sqrt(n_out))
    n = n_out * (1 if nu.kind == "dirac" else cfg.inner)
    lhs = MeasureEstimate(float(L.mean()), se_l, n, "monte_carlo")
    rhs = MeasureEstimate(float(R.mean()), se_r, n, "monte_carlo")
    sigma = math.hypot(se_l, se_r)
    return ExchangeRecord(lhs, rhs, lhs.value <= rhs.value + 3 * sigma, False, sigma, n, detail)


# --------------------------------------------------------------- Bonk-Lang
@dataclass
class DeficitRecord:
    lhs: float
    lhs_se: float
    rhs: float
    holds: bool
    ratio: float | None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "lhs_se": self.lhs_se, "rhs": self.rhs, "holds": self.holds,
                "ratio": self.ratio, **self.detail}


def _atoms_in_ball(surface: Surface, x: SurfacePoint, r: float, budget: int):
    """[(location, |defect|)] of cone points at distance < r, plus the boundary clearance."""
    if isinstance(surface, Cone):
        a = float(x.coords[0])
        return ([("apex", surface.alpha)] if a < r else []), math.inf
    ws = propagate_with_relay(surface, _canon(surface, x), r, budget)
    defects = surface.mesh.defects
    bnd = surface.mesh.boundary_vertex
    atoms = [(int(v), abs(float(defects[v]))) for v, d in ws.vertex_distances().items()
             if d < r and not bnd[v] and abs(float(defects[v])) > 1e-12]
    return atoms, ws.boundary_touch


def total_abs_curvature(surface: Surface) -> tuple[float, float]:
    """(|Omega| of the interior cone points, largest single atom)."""
    if isinstance(surface, Cone):
        return surface.alpha, surface.alpha
    if not isinstance(surface, PolyhedralSurface):
        raise UnsupportedBackend("curvature atoms need a polyhedral surface or a cone")
    d = np.abs(surface.mesh.defects[~surface.mesh.boundary_vertex])
    return float(d.sum()), float(d.max()) if len(d) else 0.0


def bonk_lang_check(surface: Surface, x: SurfacePoint, r: float, cfg: EstimatorConfig | None = None,
                    delta0: float = 0.5) -> DeficitRecord:
    """|1 - b_r(x) / (pi r^2)| <= 3 |Omega|(B(x, r)) for surfaces of small total curvature."""
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    tot, heavy = total_abs_curvature(surface)
    if tot - heavy >= delta0:
        raise PreconditionViolation(f"|Omega| away from the heaviest point is {tot - heavy:.4g} >= delta0 = {delta0}")
    atoms, touch = _atoms_in_ball(surface, x, r, cfg.budget)
    if touch < r:
        raise PreconditionViolation("the ball B(x, r) reaches the boundary")
    b = ball_volume(surface, x, r, cfg.with_(seed=cfg.seed + TAG_BONK))
    full = math.pi * r * r
    lhs = abs(1.0 - b.value / full)
    se = b.std_error / full
    omega_ball = float(sum(w for _, w in atoms))
    rhs = 3.0 * omega_ball
    ratio = lhs / omega_ball if omega_ball > 0 else None
    detail = {"r": r, "omega_ball": omega_ball, "atoms": [a for a, _ in atoms], "delta0": delta0,
              "omega_total": tot, "seed": cfg.seed}
    return DeficitRecord(lhs, se, rhs, lhs <= rhs + 3 * se, ratio, detail)


# ------------------------------------------------------- mean curvature
@dataclass
class MeanCurvatureRecord:
    lhs: float
    lhs_se: float
    delta: float
    K: float
    detail: dict = field(default_factory=dict)

    def holds_with(self, C: float) -> bool:
        return self.lhs <= C * self.delta ** 2 + 3 * self.lhs_se

    def constant(self) -> float | None:
        """Smallest C for which the bound holds (None if delta = 0 and lhs > 0)."""
        if self.lhs <= 3 * self.lhs_se:
            return 0.0
        return self.lhs / self.delta ** 2 if self.delta > 0 else None

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "lhs_se": self.lhs_se, "delta": self.delta, "K": self.K,
                "C_min": self.constant(), **self.detail}


def mean_curvature_check(surface: Surface, x: SurfacePoint, r: float,
                         cfg: EstimatorConfig | None = None) -> MeanCurvatureRecord:
    """lhs = |1 - b_r(x)/(pi r^2)| against delta = K(B(x, 6r)) / r on a convex polytope boundary."""
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    th = _require_convex(surface)
    x = _canon(surface, x)
    lens = edge_ball_lengths(surface, x, 6 * r, cfg.budget)
    K = float(sum(th[e] * ell for e, ell in lens.items()))
    b = ball_volume(surface, x, r, cfg.with_(seed=cfg.seed + TAG_MEANCURV))
    full = math.pi * r * r
    return MeanCurvatureRecord(abs(1.0 - b.value / full), b.std_error / full, K / r, K,
                               {"r": r, "seed": cfg.seed})

