"""Phase space of a surface: Liouville sampling, the total exponential map and
numerical checks that the geodesic flow preserves the Liouville measure.

M is the product of area and Lebesgue measure on the tangent planes, so
M(T^r K) = pi r^2 area(K) and its normalized restriction samples a uniform
base point, a uniform angle and a norm with density 2s/r^2 on (0, r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (FlowUndefined, InvalidParameter, StencilInconsistent, UnsupportedBackend)
from .estimate import EstimatorConfig, MeasureEstimate
from .geodesics.distance import analytic_distances, distance
from .geodesics.flow import VERTEX_HIT, exp_map, flow
from .geometry.regions import area as region_area
from .geometry.sampling import region_sampler, sample_batch
from .geometry.surfaces import Cone, FlatTorus, HalfPlane, Plane, PolyhedralSurface, Sphere, Surface
from .geometry.types import PointBatch, RegionSpec, SurfacePoint, TangentVector
from .measures.ball import inner_ball
from .measures.deviation import deviation, generic_strata, polyhedral_strata, r_tag
from .rng import substream

TAG_LIOUVILLE = 51
TAG_COMPARE = 52
TAG_PRESERVE = 53
TAG_JACOBIAN = 54
TAG_BILLIARD = 55


@dataclass(frozen=True)
class PhaseRegion:
    """T^r K: tangent vectors of norm < r based in K."""

    base: RegionSpec
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidParameter("phase region radius must be positive")

    def mass(self, surface: Surface, cfg: EstimatorConfig | None = None) -> float:
        return math.pi * self.r ** 2 * region_area(surface, self.base, cfg).value

    def describe(self) -> str:
        return f"T^{self.r:g} of {self.base.kind} region"


# ----------------------------------------------------------------- sampling
def _sample_phase(surface: Surface, region: RegionSpec, r: float, count: int, seed: int, tag: int):
    """(PointBatch of bases, angles, norms) from the normalized Liouville measure on T^r(region)."""
    if count < 0:
        raise InvalidParameter("count must be >= 0")
    if not r > 0:
        raise InvalidParameter("r must be positive")
    bases = sample_batch(surface, region, count, seed, tag=tag)
    rng = substream(seed, tag, 1 << 20)
    u = rng.random((count, 2))
    return bases, 2 * math.pi * u[:, 0], r * np.sqrt(u[:, 1])


def _vectors(bases: PointBatch, ang, norms) -> list[TangentVector]:
    return [TangentVector(bases.point(i), (math.cos(ang[i]), math.sin(ang[i])), float(norms[i]))
            for i in range(len(bases))]


def liouville_sample(surface: Surface, K: RegionSpec, r: float, count: int, seed: int) -> list[TangentVector]:
    """i.i.d. vectors from M restricted to T^r K, normalized."""
    if count == 0:
        return []
    return _vectors(*_sample_phase(surface, K, r, count, seed, TAG_LIOUVILLE))


def total_exponential(surface: Surface, v: TangentVector) -> tuple[SurfacePoint, SurfacePoint]:
    """E(v) = (base of v, exp(v))."""
    return v.base, exp_map(surface, v)


# ---------------------------------------------------------------- residuals
def _chart_to_ambient(S: PolyhedralSurface, f: int):
    """Affine map (J, b) from the chart of face f to ambient positions."""
    P = S.mesh.charts[f]
    X = S.mesh.positions[S.mesh.faces[f]]
    E = np.column_stack([P[1] - P[0], P[2] - P[0]])
    J = np.column_stack([X[1] - X[0], X[2] - X[0]]) @ np.linalg.inv(E)
    return J, X[0] - J @ P[0]


def _move_to_face(S: PolyhedralSurface, p: SurfacePoint, d, face: int):
    """Express (p, d) in the chart of an adjacent face (or None)."""
    if p.face == face:
        return np.asarray(p.coords, float), np.asarray(d, float)
    for k in range(3):
        h, _ = S.twins_py[p.face][k]
        if h == face:
            T = S.trans_py[p.face][k]
            x, y = p.coords
            q = np.array([T[0] * x + T[1] * y + T[4], T[2] * x + T[3] * y + T[5]])
            e = np.array([T[0] * d[0] + T[1] * d[1], T[2] * d[0] + T[3] * d[1]])
            return q, e
    return None


def phase_gap(surface: Surface, v: TangentVector, w: TangentVector) -> float:
    """max(position gap, vector gap) between two tangent vectors (inf if not comparable)."""
    dn = abs(v.norm - w.norm)
    if isinstance(surface, PolyhedralSurface):
        a = _move_to_face(surface, w.base, w.direction, v.base.face)
        if a is None:
            b = _move_to_face(surface, v.base, v.direction, w.base.face)
            if b is None:
                return math.inf
            q, e = np.asarray(w.base.coords), np.asarray(w.direction)
            p, d = b
        else:
            p, d = np.asarray(v.base.coords), np.asarray(v.direction)
            q, e = a
        return max(float(np.hypot(*(p - q))), float(np.hypot(*(v.norm * d - w.norm * e))), dn)
    if isinstance(surface, (Plane, HalfPlane, FlatTorus)):
        g = np.asarray(v.base.coords) - np.asarray(w.base.coords)
        if isinstance(surface, FlatTorus):
            g = g - np.array([surface.a, surface.b]) * np.round(g / np.array([surface.a, surface.b]))
        dv = v.vector - w.vector
        return max(float(np.hypot(*g)), float(np.hypot(*dv)), dn)
    if isinstance(surface, Sphere):
        P = surface.to_cartesian(np.asarray(v.base.coords))
        Q = surface.to_cartesian(np.asarray(w.base.coords))
        e1, e2 = surface.frame(v.base.coords)
        f1, f2 = surface.frame(w.base.coords)
        U = v.vector[0] * e1 + v.vector[1] * e2
        W = w.vector[0] * f1 + w.vector[1] * f2
        return max(float(np.linalg.norm(P - Q)), float(np.linalg.norm(U - W)), dn)
    if isinstance(surface, Cone):
        d = float(analytic_distances(surface, v.base.coords, np.array([w.base.coords]))[0])
        # rotate w's (radial, angular) frame into v's: both are orthonormal frames at nearby points
        da = (w.base.coords[1] - v.base.coords[1] + surface.rho / 2) % surface.rho - surface.rho / 2
        c, s = math.cos(da), math.sin(da)
        W = np.array([c * w.vector[0] - s * w.vector[1], s * w.vector[0] + c * w.vector[1]])
        return max(d, float(np.hypot(*(v.vector - W))), dn)
    raise UnsupportedBackend(f"no phase comparison for {type(surface).__name__}")


def point_gap(surface: Surface, p: SurfacePoint, q: SurfacePoint) -> float:
    t = TangentVector(p, (1.0, 0.0), 0.0)
    u = TangentVector(q, (1.0, 0.0), 0.0)
    if isinstance(surface, Sphere):
        return float(np.linalg.norm(surface.to_cartesian(np.asarray(p.coords)) - surface.to_cartesian(np.asarray(q.coords))))
    return phase_gap(surface, t, u)


# ---------------------------------------------------------------- E symmetry
@dataclass
class SymmetryRecord:
    max_residual: float
    completed: int
    failed: int

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "completed": self.completed, "failed": self.failed}


def e_symmetry_check(surface: Surface, K: RegionSpec, r: float, count: int, seed: int) -> SymmetryRecord:
    """E(-phi_1(v)) = swap(E(v)) over Liouville samples."""
    worst, done, failed = 0.0, 0, 0
    for v in liouville_sample(surface, K, r, count, seed):
        res = flow(surface, v, 1.0)
        if not res.completed:
            failed += 1
            continue
        w = -res.end
        try:
            x2, y2 = total_exponential(surface, w)
        except FlowUndefined:
            failed += 1
            continue
        worst = max(worst, point_gap(surface, x2, res.end.base), point_gap(surface, y2, v.base))
        done += 1
    return SymmetryRecord(worst, done, failed)


# ------------------------------------------------------------- comparisons
@dataclass
class ComparisonRecord:
    M_TrK: float
    H2n_UrK: MeasureEstimate
    Vr_from_identity: float
    Vr_from_identity_se: float
    Vr_direct: MeasureEstimate
    r: float
    detail: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return math.hypot(self.Vr_from_identity_se, self.Vr_direct.std_error)

    @property
    def agree(self) -> bool:
        return abs(self.Vr_from_identity - self.Vr_direct.value) <= 3 * self.sigma

    def to_dict(self) -> dict:
        return {"M_TrK": self.M_TrK, "H2n_UrK": self.H2n_UrK.to_dict(), "Vr_from_identity": self.Vr_from_identity,
                "Vr_from_identity_se": self.Vr_from_identity_se, "Vr_direct": self.Vr_direct.to_dict(),
                "r": self.r, "sigma": self.sigma, "agree": self.agree, **self.detail}


def pair_mass(surface: Surface, K: RegionSpec, r: float, cfg: EstimatorConfig) -> MeasureEstimate:
    """H^2 x H^2 of U^r(K) = {(x, y): x in K, d(x, y) < r}.

    Outer points are uniform on K (stratified around cone points on meshes),
    the inner ball area is a hit count of uniform points on a superset of the
    ball classified by exact distance.
    """
    if isinstance(surface, PolyhedralSurface) and K.kind in ("whole", "faces"):
        strata = polyhedral_strata(surface, K, r, cfg.outer)
        inner = "superset"
    else:
        strata = generic_strata(surface, K, cfg.outer, cfg.budget)
        inner = "superset" if isinstance(surface, PolyhedralSurface) else "monte_carlo"
    H, var, n_tot = 0.0, 0.0, 0
    for k, st in enumerate(strata):
        vals = np.zeros(st.n)
        for i in range(st.n):
            rng = substream(cfg.seed, TAG_COMPARE, r_tag(r), k, i)
            x = st.draw(rng)
            if x is None:
                continue
            if isinstance(surface, PolyhedralSurface):
                x = surface.canonicalize(x)
            vals[i] = inner_ball(surface, x, r, inner, cfg.inner, rng, cfg.budget)[0]
        H += st.area * vals.mean()
        if st.n > 1:
            var += st.area ** 2 * vals.var(ddof=1) / st.n
        n_tot += st.n
    return MeasureEstimate(float(H), float(math.sqrt(var)), n_tot * (cfg.inner + 1), "monte_carlo")


def compare_measures(surface: Surface, K: RegionSpec, r: float, cfg: EstimatorConfig | None = None) -> ComparisonRecord:
    """V_r(K) twice: from M(T^r K) - H^4(U^r K) and from the deviation estimator (independent seed)."""
    cfg = cfg or EstimatorConfig()
    if not r > 0:
        raise InvalidParameter("r must be positive")
    full = math.pi * r * r
    M = full * region_area(surface, K, cfg).value
    if isinstance(surface, FlatTorus) and K.kind == "whole":
        # U^r(X) has mass area * b_r, which is pi r^2 area below the injectivity radius
        H = MeasureEstimate(surface.total_area() * inner_ball(surface, SurfacePoint((0.0, 0.0)), r, "analytic", 1,
                                                               None, cfg.budget)[0])
    else:
        H = pair_mass(surface, K, r, cfg)
    V_id = (M - H.value) / full
    direct = deviation(surface, K, r, cfg.with_(seed=cfg.seed + 1))
    return ComparisonRecord(M, H, V_id, H.std_error / full, direct, r,
                            {"seed": cfg.seed, "seed_direct": cfg.seed + 1, "region": K.to_dict()})


# -------------------------------------------------------------- reversibility
@dataclass
class ReversibilityRecord:
    max_residual: float
    vertex_hit_fraction: float
    completed: int
    count: int

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "vertex_hit_fraction": self.vertex_hit_fraction,
                "completed": self.completed, "count": self.count}


def reversibility_check(surface: Surface, K: RegionSpec, r: float, t: float, count: int, seed: int) -> ReversibilityRecord:
    """Flow t, negate, flow t, negate: the original vector comes back."""
    if count < 1:
        raise InvalidParameter("count must be >= 1")
    worst, done, hits = 0.0, 0, 0
    for v in liouville_sample(surface, K, r, count, seed):
        a = flow(surface, v, t)
        if not a.completed:
            hits += a.status == VERTEX_HIT
            continue
        b = flow(surface, -a.end, t)
        if not b.completed:
            hits += b.status == VERTEX_HIT
            continue
        worst = max(worst, phase_gap(surface, v, -b.end))
        done += 1
    return ReversibilityRecord(worst, hits / count, done, count)


# ------------------------------------------------------------------ Jacobian
def _phase_map(surface: Surface, base: SurfacePoint, w: np.ndarray, t: float):
    """(end position, end vector, face sequence) of the flow of w based at base, or None."""
    if isinstance(surface, PolyhedralSurface) and not surface.contains(base.face, base.coords, tol=0.0):
        return None
    res = flow(surface, TangentVector.from_vector(base, w), t)
    if not res.completed:
        return None
    e = res.end
    return np.array(e.base.coords, float), e.vector, res.face_sequence


def jacobian_check(surface: Surface, v: TangentVector, t: float, h: float | None = None,
                   max_halvings: int = 20) -> float:
    """|det| of the 4x4 central-difference Jacobian of (p, w) -> phi_t(p, w)."""
    if isinstance(surface, PolyhedralSurface):
        scale = surface.feature_scale()
    elif isinstance(surface, (Plane, HalfPlane, FlatTorus)):
        scale = 1.0
    else:
        raise UnsupportedBackend("Jacobian checks need a flat chart (polyhedral, plane, half plane or torus)")
    base0 = _phase_map(surface, v.base, v.vector, t)
    if base0 is None:
        raise FlowUndefined("vertex_hit", "the base trajectory does not complete")
    seq0 = base0[2]
    h = 1e-5 * scale if h is None else float(h)
    p0 = np.array(v.base.coords, float)
    w0 = v.vector
    lattice = np.array([surface.a, surface.b]) if isinstance(surface, FlatTorus) else None
    for _ in range(max_halvings + 1):
        cols = []
        ok = True
        for k in range(4):
            ends = []
            for sgn in (1.0, -1.0):
                z = np.concatenate([p0, w0])
                z[k] += sgn * h
                out = _phase_map(surface, SurfacePoint((float(z[0]), float(z[1])), v.base.face), z[2:], t)
                if out is None or out[2] != seq0:
                    ok = False
                    break
                ends.append(np.concatenate([out[0], out[1]]))
            if not ok:
                break
            diff = ends[0] - ends[1]
            if lattice is not None:
                diff[:2] -= lattice * np.round(diff[:2] / lattice)
            cols.append(diff / (2 * h))
        if ok:
            return float(abs(np.linalg.det(np.column_stack(cols))))
        h *= 0.5
    raise StencilInconsistent(f"stencil trajectories change face sequence down to h = {2 * h:.3g}")


def jacobian_suite(surface: Surface, count: int, seed: int, t_range=(0.5, 3.0), norm: float = 1.0):
    """|det - 1| over random unit-speed vectors and times; stencil failures are counted."""
    rng = substream(seed, TAG_JACOBIAN)
    bases = sample_batch(surface, RegionSpec.whole(), count * 4, seed, tag=TAG_JACOBIAN)
    dets, skipped, tried = [], 0, 0
    i = 0
    while len(dets) < count and i < len(bases):
        a, t = rng.random() * 2 * math.pi, t_range[0] + rng.random() * (t_range[1] - t_range[0])
        v = TangentVector(bases.point(i), (math.cos(a), math.sin(a)), norm)
        i += 1
        tried += 1
        try:
            dets.append(jacobian_check(surface, v, t))
        except (StencilInconsistent, FlowUndefined):
            skipped += 1
    return np.array(dets), skipped, tried


# ------------------------------------------------------------- preservation
@dataclass
class PreservationRecord:
    M_A: float
    M_phi_A: MeasureEstimate
    discrepancy: float
    vertex_loss: float
    t: float
    detail: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.discrepancy <= 3 * self.M_phi_A.std_error + self.vertex_loss * self.M_A

    def to_dict(self) -> dict:
        return {"M_A": self.M_A, "M_phi_A": self.M_phi_A.to_dict(), "discrepancy": self.discrepancy,
                "vertex_loss": self.vertex_loss, "t": self.t, "holds": self.holds, **self.detail}


def _enlarged(surface: Surface, K: RegionSpec, reach: float) -> RegionSpec:
    """A region containing every point within ``reach`` of K."""
    if K.kind == "ball":
        return RegionSpec.ball(K.center, K.radius + reach)
    if K.kind == "vertex":
        return RegionSpec.vertex_nbhd(K.vertex, K.radius + reach)
    if math.isfinite(surface.total_area()):
        return RegionSpec.whole()
    raise InvalidParameter("cannot enlarge this region on a surface of infinite area")


def _in_region(surface: Surface, K: RegionSpec, p: SurfacePoint, budget: int) -> bool:
    if K.kind == "whole":
        return True
    if K.kind == "faces":
        return surface.canonicalize(p).face in K.faces
    if K.kind in ("ball", "vertex"):
        c = K.center if K.kind == "ball" else surface.vertex_point(K.vertex)
        if isinstance(surface, PolyhedralSurface):
            return distance(surface, c, p, K.radius, budget).value < K.radius
        return float(analytic_distances(surface, c.coords, np.array([p.coords]))[0]) < K.radius
    raise UnsupportedBackend(f"region {K.kind!r} not supported")


def liouville_preservation_check(surface: Surface, K: RegionSpec, r: float, t: float,
                                 cfg: EstimatorConfig | None = None, count: int | None = None) -> PreservationRecord:
    """Compare M(T^r K) with M(phi_t(T^r K)) estimated by backward transport."""
    cfg = cfg or EstimatorConfig()
    if not (r > 0 and t > 0):
        raise InvalidParameter("r and t must be positive")
    n = count or cfg.outer
    M_A = math.pi * r * r * region_area(surface, K, cfg).value
    big = _enlarged(surface, K, t * r)
    draw, accept, sup = region_sampler(surface, big, cfg.budget)
    M_sup = math.pi * r * r * sup
    rng = substream(cfg.seed, TAG_PRESERVE)
    inside = np.zeros(n)
    lost_back = 0
    for i in range(n):
        b = draw(rng, 1)
        u = rng.random(2)
        w = TangentVector(b.point(0), (math.cos(2 * math.pi * u[0]), math.sin(2 * math.pi * u[0])),
                          r * math.sqrt(u[1]))
        res = flow(surface, w, -t)
        if not res.completed:
            lost_back += 1
            continue
        inside[i] = _in_region(surface, K, res.end.base, cfg.budget)
    p = inside.mean()
    est = MeasureEstimate(float(M_sup * p), float(M_sup * math.sqrt(p * (1 - p) / max(n - 1, 1))), n, "monte_carlo")
    # forward direction: vertex hits of phi_t on A itself
    fwd = reversibility_free_hits(surface, K, r, t, max(n // 4, 1), cfg.seed)
    loss = (M_sup * lost_back / n + M_A * fwd) / M_A
    return PreservationRecord(M_A, est, abs(M_A - est.value), loss, t,
                              {"r": r, "seed": cfg.seed, "samples": n, "superset_mass": M_sup,
                               "vertex_hits_backward": lost_back, "vertex_hit_fraction_forward": fwd})


def reversibility_free_hits(surface: Surface, K: RegionSpec, r: float, t: float, count: int, seed: int) -> float:
    """Fraction of Liouville samples on T^r K whose forward flow hits a vertex."""
    hits = 0
    for v in liouville_sample(surface, K, r, count, seed + 1):
        hits += not flow(surface, v, t).completed
    return hits / count


# ------------------------------------------------------------------ billiard
def billiard_square(p, d, L: float, side: float = 1.0):
    """Specular billiard in [0, side]^2 after path length L: (position, direction, bounces).

    Reflections unfold to a straight line in the plane; folding back is the
    triangle wave of period 2*side on each coordinate.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    q = p + L * d
    k = np.floor(q / side)
    m = np.mod(q, 2 * side)
    pos = np.where(m > side, 2 * side - m, m)
    sign = np.where(np.mod(k, 2) == 0, 1.0, -1.0)
    bounces = int(np.sum(np.abs(k)))
    return pos, sign * d, bounces


def _ambient_state(S: PolyhedralSurface, v: TangentVector):
    J, b = _chart_to_ambient(S, v.base.face)
    x = J @ np.asarray(v.base.coords) + b
    return x[:2], (J @ np.asarray(v.direction))[:2]


@dataclass
class BilliardRecord:
    max_deviation: float
    min_bounces: int
    trials: int
    failures: int

    def to_dict(self) -> dict:
        return {"max_deviation": self.max_deviation, "min_bounces": self.min_bounces, "trials": self.trials,
                "failures": self.failures}


def billiard_check(surface: PolyhedralSurface, count: int = 100, min_bounces: int = 100, seed: int = 0,
                   side: float = 1.0) -> BilliardRecord:
    """Geodesics on the doubled square against the unfolded billiard of the square."""
    rng = substream(seed, TAG_BILLIARD)
    worst, fewest, fails = 0.0, 1 << 30, 0
    for _ in range(count):
        p = side * (0.05 + 0.9 * rng.random(2))
        a = 2 * math.pi * rng.random()
        d = np.array([math.cos(a), math.sin(a)])
        # long enough for min_bounces wall hits
        L = side * (min_bounces + 2) / (abs(d[0]) + abs(d[1])) + side
        face = _locate(surface, p)
        J, b = _chart_to_ambient(surface, face)
        Jp = np.linalg.pinv(J)
        c = Jp @ (np.append(p, 0.0) - b)
        e = Jp @ np.append(d, 0.0)
        v = TangentVector(SurfacePoint((float(c[0]), float(c[1])), face), tuple(e / np.hypot(*e)), 1.0)
        res = flow(surface, v, L)
        if not res.completed:
            fails += 1
            continue
        x, dd = _ambient_state(surface, res.end)
        pos, dir_, nb = billiard_square(p, d, L, side)
        worst = max(worst, float(np.hypot(*(x - pos))), float(np.hypot(*(dd - dir_))))
        fewest = min(fewest, nb)
    return BilliardRecord(worst, fewest, count, fails)


def _locate(S: PolyhedralSurface, p) -> int:
    """A face of the first sheet whose ambient triangle contains the planar point p."""
    copy = getattr(S.mesh, "copy_of_face", None)
    for f in range(S.mesh.n_faces):
        if copy is not None and copy[f] != 0:
            continue
        J, b = _chart_to_ambient(S, f)
        c = np.linalg.pinv(J) @ (np.append(p, 0.0) - b)
        if S.contains(f, c, tol=0.0):
            return f
    raise InvalidParameter(f"point {p} is not on the surface")
