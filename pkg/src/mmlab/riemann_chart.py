"""Grid charts of 2-d Riemannian metrics and the |g'| bound on deviation measures.

Nodes sit at cell centres of a rectangle, node (i, j) at
(x0 + (i + 1/2) h, y0 + (j + 1/2) h), so sums of h^2 over nodes are exact
areas of node-aligned rectangles.  Distances are shortest paths on the
16-neighbour lattice with the g-length of each straight step (metric at the
step midpoint, bilinear between nodes).  Lattice paths overestimate flat
distances by a direction-dependent factor; the resulting bias of v_r is
measured on a flat chart with the same spacing and subtracted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import InvalidParameter, PreconditionViolation

# the 16 lattice directions
STENCIL = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1),
           (2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1)]
DEFAULT_C = 20.0
SOURCE_BATCH = 64
# Dijkstra cutoff beyond r, in grid steps
BAND = 6
# |V_r / bound| below this is not resolved by the lattice pipeline
RATIO_FLOOR = 0.01


@dataclass
class GridChart:
    x0: float
    y0: float
    h: float
    g11: np.ndarray  # shape (nx, ny)
    g12: np.ndarray
    g22: np.ndarray
    delta_g: float
    C_delta: float = DEFAULT_C
    name: str = "chart"
    _graph: object = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.g11.shape

    @property
    def nx(self) -> int:
        return self.g11.shape[0]

    @property
    def ny(self) -> int:
        return self.g11.shape[1]

    def node_xy(self):
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.h
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys, indexing="ij")

    def node_of(self, p) -> int:
        i = int(round((p[0] - self.x0) / self.h - 0.5))
        j = int(round((p[1] - self.y0) / self.h - 0.5))
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise InvalidParameter(f"point {tuple(p)} is outside the chart")
        return i * self.ny + j

    def area_element(self) -> np.ndarray:
        return np.sqrt(self.g11 * self.g22 - self.g12 ** 2)

    def graph(self) -> csr_matrix:
        if self._graph is None:
            self._graph = _lattice_graph(self)
        return self._graph

    def describe(self) -> dict:
        return {"name": self.name, "x0": self.x0, "y0": self.y0, "h": self.h, "nx": self.nx, "ny": self.ny,
                "delta_g": self.delta_g, "C_delta": self.C_delta}


# ------------------------------------------------------------------ building
def bump(s):
    """Smooth bump exp(1 - 1/(1 - s^2)) on |s| < 1, maximum 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def tensor_family(name: str, **p):
    """Named parametric metric families: ``identity``, ``constant``, ``conformal_bump``, ``linear``."""
    if name == "identity":
        return lambda X, Y: (np.ones_like(X), np.zeros_like(X), np.ones_like(X))
    if name == "constant":
        a, b, c = p.get("g11", 1.0), p.get("g12", 0.0), p.get("g22", 1.0)
        return lambda X, Y: (np.full_like(X, a), np.full_like(X, b), np.full_like(X, c))
    if name == "conformal_bump":
        a = p.get("a", 0.02)
        cx, cy = p.get("center", (0.5, 0.5))
        w = p.get("width", 0.3)
        scale = p.get("scale", 1.0)

        def f(X, Y):
            lam = scale * (1.0 + a * bump(np.hypot(X - cx, Y - cy) / w))
            return lam, np.zeros_like(X), lam.copy()

        return f
    if name == "linear":
        a = p.get("a", 0.04)
        return lambda X, Y: (1.0 + a * X, np.zeros_like(X), np.ones_like(X))
    raise InvalidParameter(f"unknown tensor family {name!r}")


def read_tensor_csv(path, h: float):
    """Node table with columns x, y, g11, g12, g22 on a regular grid -> (domain, arrays)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InvalidParameter("empty tensor table")
    try:
        x = np.array([float(r["x"]) for r in rows])
        y = np.array([float(r["y"]) for r in rows])
        vals = {k: np.array([float(r[k]) for r in rows]) for k in ("g11", "g12", "g22")}
    except (KeyError, ValueError) as exc:
        raise InvalidParameter(f"bad tensor table: {exc}") from None
    xs, ys = np.unique(x), np.unique(y)
    if len(xs) * len(ys) != len(rows):
        raise InvalidParameter("tensor table is not a full regular grid")
    if len(xs) > 1 and not np.allclose(np.diff(xs), h) or len(ys) > 1 and not np.allclose(np.diff(ys), h):
        raise InvalidParameter("tensor table spacing does not match h")
    i = np.searchsorted(xs, x)
    j = np.searchsorted(ys, y)
    out = []
    for k in ("g11", "g12", "g22"):
        A = np.empty((len(xs), len(ys)))
        A[i, j] = vals[k]
        out.append(A)
    domain = (xs[0] - h / 2, xs[-1] + h / 2, ys[0] - h / 2, ys[-1] + h / 2)
    return domain, tuple(out)


def bilipschitz_delta(g11, g12, g22) -> float:
    """Smallest delta with (1 + delta)^-2 <= eigenvalues <= (1 + delta)^2 at every node."""
    tr = 0.5 * (g11 + g22)
    disc = np.sqrt(0.25 * (g11 - g22) ** 2 + g12 ** 2)
    lo, hi = tr - disc, tr + disc
    if np.any(lo <= 0):
        raise InvalidParameter("metric tensor is not positive definite at some node")
    return float(max(np.sqrt(hi.max()) - 1.0, 1.0 / np.sqrt(lo.min()) - 1.0, 0.0))


def build_chart(domain, h: float, tensor_field, C_delta: float = DEFAULT_C, name: str = "chart",
                check_delta: bool = True) -> GridChart:
    """Validate a metric on the cell-centred grid of ``domain = (x0, x1, y0, y1)``.

    ``tensor_field`` is a callable (X, Y) -> (g11, g12, g22), a (g11, g12, g22)
    tuple of node arrays, or ``(family_name, params)``.
    """
    if not h > 0:
        raise InvalidParameter("h must be positive")
    x0, x1, y0, y1 = map(float, domain)
    nx, ny = int(round((x1 - x0) / h)), int(round((y1 - y0) / h))
    if nx < 3 or ny < 3:
        raise InvalidParameter("domain must span at least 3 cells per side")
    if isinstance(tensor_field, tuple) and len(tensor_field) == 2 and isinstance(tensor_field[0], str):
        tensor_field = tensor_family(tensor_field[0], **(tensor_field[1] or {}))
    if callable(tensor_field):
        xs = x0 + (np.arange(nx) + 0.5) * h
        ys = y0 + (np.arange(ny) + 0.5) * h
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        g11, g12, g22 = (np.asarray(a, dtype=float) for a in tensor_field(X, Y))
    else:
        g11, g12, g22 = (np.asarray(a, dtype=float) for a in tensor_field)
    if g11.shape != (nx, ny) or g12.shape != (nx, ny) or g22.shape != (nx, ny):
        raise InvalidParameter(f"tensor arrays must have shape {(nx, ny)}")
    delta = bilipschitz_delta(g11, g12, g22)
    if check_delta and delta > 1.0 / C_delta:
        raise InvalidParameter(f"bi-Lipschitz constant delta_g = {delta:.4g} exceeds 1/C = {1 / C_delta:.4g}")
    return GridChart(x0, y0, float(h), g11, g12, g22, delta, C_delta, name)


def _interp(A, fi, fj):
    """Bilinear interpolation of node array A at fractional indices (fi, fj)."""
    i0 = np.floor(fi).astype(int)
    j0 = np.floor(fj).astype(int)
    ti, tj = fi - i0, fj - j0
    i1 = np.minimum(i0 + 1, A.shape[0] - 1)
    j1 = np.minimum(j0 + 1, A.shape[1] - 1)
    return ((1 - ti) * (1 - tj) * A[i0, j0] + ti * (1 - tj) * A[i1, j0]
            + (1 - ti) * tj * A[i0, j1] + ti * tj * A[i1, j1])


def _lattice_graph(chart: GridChart) -> csr_matrix:
    nx, ny, h = chart.nx, chart.ny, chart.h
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    rows, cols, w = [], [], []
    for di, dj in STENCIL:
        m = (I + di >= 0) & (I + di < nx) & (J + dj >= 0) & (J + dj < ny)
        i, j = I[m], J[m]
        fi, fj = i + di / 2, j + dj / 2
        a = _interp(chart.g11, fi, fj)
        b = _interp(chart.g12, fi, fj)
        c = _interp(chart.g22, fi, fj)
        sx, sy = di * h, dj * h
        rows.append(i * ny + j)
        cols.append((i + di) * ny + (j + dj))
        w.append(np.sqrt(a * sx * sx + 2 * b * sx * sy + c * sy * sy))
    n = nx * ny
    return csr_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


# ------------------------------------------------------------------ queries
def chart_distance(chart: GridChart, x, y) -> float:
    """Lattice shortest-path length between the nodes nearest to x and y."""
    a, b = chart.node_of(x), chart.node_of(y)
    d = dijkstra(chart.graph(), directed=True, indices=a)
    if not np.isfinite(d[b]):
        raise InvalidParameter("target is unreachable")
    return float(d[b])


def lattice_overestimate(n_dirs: int = 720) -> float:
    """max over directions of (16-neighbour path length) / (Euclidean length) for the flat metric."""
    S = np.array(STENCIL, dtype=float)
    L = np.hypot(S[:, 0], S[:, 1])
    ang = np.arctan2(S[:, 1], S[:, 0])
    order = np.argsort(ang)
    S, L = S[order], L[order]
    worst = 1.0
    for t in np.linspace(0, 2 * np.pi, n_dirs, endpoint=False):
        u = np.array([math.cos(t), math.sin(t)])
        best = math.inf
        for k in range(len(S)):
            A = np.column_stack([S[k], S[(k + 1) % len(S)]])
            c = np.linalg.solve(A, u)
            if np.all(c >= -1e-12):
                best = min(best, c[0] * L[k] + c[1] * L[(k + 1) % len(S)])
        worst = max(worst, best)
    return float(worst)


def _soft_area(chart: GridChart, dist: np.ndarray, r: float, elem: np.ndarray) -> float:
    """Area of {d < r}: interior cells count fully, boundary cells by linear interpolation of d."""
    D = dist.reshape(chart.nx, chart.ny)
    fin = np.isfinite(D)
    I, J = np.nonzero(fin)
    i0, i1 = max(I.min() - 1, 0), min(I.max() + 2, chart.nx)
    j0, j1 = max(J.min() - 1, 0), min(J.max() + 2, chart.ny)
    D = D[i0:i1, j0:j1]
    fin = fin[i0:i1, j0:j1]
    filled = np.where(fin, D, r + 10 * chart.h)
    gi, gj = np.gradient(filled, chart.h)
    slope = np.maximum(np.hypot(gi, gj), 1e-12)
    frac = np.clip(0.5 + (r - filled) / (slope * chart.h), 0.0, 1.0)
    # only the band around the sphere is interpolated; far nodes may see the filler in their slope
    frac[~fin | (filled > r + 1.5 * chart.h)] = 0.0
    return float(np.sum(frac * elem[i0:i1, j0:j1]) * chart.h ** 2)


def ball_areas(chart: GridChart, nodes, r: float) -> np.ndarray:
    """g-area of the lattice balls B(node, r) for each source node."""
    elem = chart.area_element()
    G = chart.graph()
    out = np.empty(len(nodes))
    for s in range(0, len(nodes), SOURCE_BATCH):
        idx = np.asarray(nodes[s:s + SOURCE_BATCH])
        D = dijkstra(G, directed=True, indices=idx, limit=r + BAND * chart.h * (1 + chart.delta_g) ** 2)
        for k in range(len(idx)):
            out[s + k] = _soft_area(chart, D[k], r, elem)
    return out


@lru_cache(maxsize=256)
def flat_bias(h: float, r: float) -> float:
    """v_r of the pipeline on the flat metric (node-centred ball), the metrication bias."""
    n = int(math.ceil(2 * r / h)) + 12
    n += (n + 1) % 2  # odd, so a node sits at the centre
    flat = build_chart((0.0, n * h, 0.0, n * h), h, tensor_family("identity"), name="flat")
    c = (n // 2) * n + n // 2
    b = ball_areas(flat, [c], r)[0]
    return 1.0 - b / (math.pi * r * r)


@lru_cache(maxsize=32)
def _pattern(n: int):
    """Sparsity pattern of the n x n lattice graph and the stencil index of every stored edge."""
    I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows, cols, kind = [], [], []
    for k, (di, dj) in enumerate(STENCIL):
        m = (I + di >= 0) & (I + di < n) & (J + dj >= 0) & (J + dj < n)
        rows.append((I[m] * n + J[m]))
        cols.append(((I[m] + di) * n + (J[m] + dj)))
        kind.append(np.full(m.sum(), k))
    rows, cols, kind = np.concatenate(rows), np.concatenate(cols), np.concatenate(kind)
    M = csr_matrix((np.arange(1, len(rows) + 1, dtype=float), (rows, cols)), shape=(n * n, n * n))
    return M.indices, M.indptr, kind[M.data.astype(np.int64) - 1]


def frozen_ball_area(g11: float, g12: float, g22: float, h: float, r: float) -> float:
    """The pipeline's ball area for the constant metric (g11, g12, g22), node-centred."""
    lo = 0.5 * (g11 + g22) - math.sqrt(0.25 * (g11 - g22) ** 2 + g12 ** 2)
    n = int(math.ceil(2 * r / (h * math.sqrt(lo)))) + 12
    n += (n + 1) % 2
    indices, indptr, kind = _pattern(n)
    S = np.array(STENCIL, dtype=float) * h
    w = np.sqrt(g11 * S[:, 0] ** 2 + 2 * g12 * S[:, 0] * S[:, 1] + g22 * S[:, 1] ** 2)
    G = csr_matrix((w[kind], indices, indptr), shape=(n * n, n * n))
    c = (n // 2) * n + n // 2
    D = dijkstra(G, directed=True, indices=c, limit=r + BAND * h * max(g11, g22, 1.0))
    one = np.ones((n, n))
    const = GridChart(0.0, 0.0, h, g11 * one, g12 * one, g22 * one, 0.0)
    return _soft_area(const, D, r, math.sqrt(g11 * g22 - g12 ** 2) * one)


# ------------------------------------------------------------------ regions
def region_mask(chart: GridChart, region) -> np.ndarray:
    """Boolean node mask of ``("rect", x0, x1, y0, y1)``, ``("disk", cx, cy, R)`` or an explicit mask."""
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    X, Y = chart.node_xy()
    kind = region[0]
    if kind == "rect":
        _, a, b, c, d = region
        return (X >= a) & (X <= b) & (Y >= c) & (Y <= d)
    if kind == "disk":
        _, cx, cy, R = region
        return np.hypot(X - cx, Y - cy) < R
    if kind == "all":
        return np.ones(chart.shape, dtype=bool)
    raise InvalidParameter(f"unknown chart region {kind!r}")


def metric_derivative_mass(chart: GridChart, region) -> float:
    """sum_{nodes in region} sum_{i,j,k} |d_k g_ij| h^2 (g_12 counted for both off-diagonal slots)."""
    mask = region_mask(chart, region)
    tot = np.zeros(chart.shape)
    for A, mult in ((chart.g11, 1), (chart.g12, 2), (chart.g22, 1)):
        dx, dy = np.gradient(A, chart.h, edge_order=1)
        tot += mult * (np.abs(dx) + np.abs(dy))
    return float(tot[mask].sum() * chart.h ** 2)


def neighbourhood_mask(chart: GridChart, mask: np.ndarray, R: float) -> np.ndarray:
    """Nodes at lattice distance < R from the node set ``mask``."""
    src = np.flatnonzero(mask.reshape(-1))
    D = dijkstra(chart.graph(), directed=False, indices=src, limit=R, min_only=True)
    return (D < R).reshape(chart.shape)


# ------------------------------------------------------------------ the check
@dataclass
class PropSmoothRecord:
    r: float
    Vr_A: float
    Vr_A_raw: float
    bound: float
    ratio: float | None
    flat_bias: float
    discretization: float
    passes: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"r": self.r, "Vr_A": self.Vr_A, "Vr_A_raw": self.Vr_A_raw, "bound": self.bound, "ratio": self.ratio,
                "flat_bias": self.flat_bias, "discretization": self.discretization, "passes": self.passes,
                **self.detail}


def prop_smooth_check(chart: GridChart, A, r: float, stride: int | None = None,
                      flat_tol: float = 1e-3, max_sources: int = 1024,
                      calibration: str = "frozen") -> PropSmoothRecord:
    """V_r(A) from lattice ball areas against r * |g'|(B(A, 2r)).

    ``calibration="flat"`` subtracts the flat-metric bias of v_r; ``"frozen"``
    subtracts, node by node, the pipeline's v_r for the constant metric g(x)
    (whose true v_r is 0), which also removes the direction-dependent lattice
    bias of anisotropic or rescaled metrics.  Both agree for g = identity.
    """
    h = chart.h
    if r < 5 * h:
        raise PreconditionViolation(f"resolution guard: r = {r:g} < 5h = {5 * h:g}")
    mask = region_mask(chart, A)
    if not mask.any():
        raise InvalidParameter("region A contains no nodes")
    near = neighbourhood_mask(chart, mask, 3 * r)
    edge = np.zeros(chart.shape, dtype=bool)
    edge[[0, -1], :] = True
    edge[:, [0, -1]] = True
    if np.any(near & edge):
        raise PreconditionViolation("B(A, 3r) reaches the edge of the chart")
    big = neighbourhood_mask(chart, mask, 2 * r)
    bound = r * metric_derivative_mass(chart, big)
    # systematic subsample of A so the number of sources stays bounded
    if stride is None:
        stride = max(1, int(math.ceil(math.sqrt(mask.sum() / max_sources))))
    sub = np.zeros(chart.shape, dtype=bool)
    sub[::stride, ::stride] = True
    I, J = np.nonzero(mask & sub)
    nodes = I * chart.ny + J
    elem = chart.area_element()
    b = ball_areas(chart, nodes, r)
    full = math.pi * r * r
    weights = elem[I, J] * (stride * h) ** 2
    raw = float(np.sum((1.0 - b / full) * weights))
    bias = float(flat_bias(h, r))
    if calibration == "flat":
        V = float(np.sum((1.0 - b / full - bias) * weights))
    elif calibration == "frozen":
        bf = np.array([frozen_ball_area(chart.g11[i, j], chart.g12[i, j], chart.g22[i, j], h, r)
                       for i, j in zip(I, J)])
        V = float(np.sum((bf - b) / full * weights))
    else:
        raise InvalidParameter(f"unknown calibration {calibration!r}")
    # discretization annotation: flat-calibrated minus frozen-calibrated is the size of the lattice correction
    disc = abs(raw - bias * float(weights.sum()) - V)
    if bound > 0:
        ratio = V / bound
        passes = True
    else:
        ratio = None
        passes = abs(V) <= flat_tol
    return PropSmoothRecord(r, V, raw, bound, ratio, bias, disc, passes,
                            {"stride": stride, "sources": int(len(nodes)), "h": h, "chart": chart.name, "calibration": calibration})


def prop_smooth_suite(chart: GridChart, A, rs, ratio_floor: float = RATIO_FLOOR, **kw) -> dict:
    """Ratios over an r schedule.

    Bounded means |ratio| never more than doubles the largest value seen at
    coarser r, except below ``ratio_floor`` (the resolution of the lattice
    pipeline: an intrinsically flat non-constant metric, whose exact ratio is 0,
    stays below 0.003 at h = 0.0025).
    """
    recs = [prop_smooth_check(chart, A, r, **kw) for r in sorted(rs, reverse=True)]
    if all(rec.ratio is not None for rec in recs):
        ratios = [abs(rec.ratio) for rec in recs]
        bounded = all(ratios[k] <= max(2 * max(ratios[:k]), ratio_floor) for k in range(1, len(ratios)))
        C_emp = max(ratios)
    else:
        bounded = all(rec.passes for rec in recs)
        C_emp = 0.0
    return {"records": [rec.to_dict() for rec in recs], "bounded": bool(bounded), "C_empirical": C_emp,
            "ratio_floor": ratio_floor}
