"""Closed-form ball areas on cones, the apex mass m(alpha) and the half-space constants c_n."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

from ..errors import InvalidParameter, QuadratureError
from ..estimate import EstimatorConfig, MeasureEstimate

TWO_PI = 2.0 * math.pi
# cones with rho below this are too thin to integrate reliably
MIN_RHO = 1e-3


def omega(n: int) -> float:
    """Volume of the unit n-ball."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _G(t, r):
    t = np.minimum(t, r)
    return 0.5 * (t * np.sqrt(np.maximum(r * r - t * t, 0.0)) + r * r * np.arcsin(t / r))


def cone_ball_area(rho: float, a, r: float):
    """Area of B(x, r) on the cone of total angle ``rho`` for points at distance ``a`` from the apex.

    Developing the cone with x on the symmetry axis of the sector, the ball is
    the planar disk D(x, r) intersected with the sector of half-angle rho/2.
    """
    a = np.asarray(a, dtype=float)
    inside = 0.5 * (r * r * rho + a * a * math.sin(rho)) + 2.0 * _G(np.minimum(a * math.sin(rho / 2), r), r)
    if rho >= math.pi:
        outside = np.full_like(a, math.pi * r * r)
    else:
        full = a * math.sin(rho / 2) >= r
        outside = np.where(full, math.pi * r * r, 4.0 * _G(np.minimum(a * math.sin(rho / 2), r), r))
    out = np.where(a <= r, inside, outside)
    return out if out.ndim else float(out)


def cone_support(rho: float) -> float:
    """Radius (in units of r) beyond which v_r vanishes on the cone."""
    return 1.0 if rho >= math.pi else 1.0 / math.sin(rho / 2)


def _quad(f, a, b, points, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, points=points or None, limit=limit, epsabs=1e-14, epsrel=1e-12)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from None
    return val, err


def cone_mass(alpha: float, cfg: EstimatorConfig | None = None) -> MeasureEstimate:
    """m(alpha) = rho * int_0^umax u (1 - area(B(x_u, 1)) / pi) du, rho = 2*pi - alpha."""
    cfg = cfg or EstimatorConfig()
    alpha = float(alpha)
    if alpha == 0.0:
        return MeasureEstimate(0.0)
    if not 0 < alpha < TWO_PI:
        raise InvalidParameter("cone_mass needs 0 < alpha < 2*pi")
    rho = TWO_PI - alpha
    if rho < MIN_RHO:
        raise InvalidParameter(f"alpha too close to 2*pi (rho = {rho:.3g} < {MIN_RHO})")
    umax = cone_support(rho)

    def f(u):
        return u * (1.0 - cone_ball_area(rho, u, 1.0) / math.pi)

    val, err = _quad(f, 0.0, umax, [1.0] if umax > 1 else None, cfg.quad_limit)
    return MeasureEstimate(rho * val, max(rho * err, 1e-300), cfg.quad_limit, "quadrature")


def cone_deviation_ball(rho: float, R: float, r: float, limit: int = 200) -> MeasureEstimate:
    """V_r(B(apex, R)) on the cone by radial quadrature of the closed-form ball area."""
    umax = min(R, cone_support(rho) * r)

    def f(u):
        return rho * u * (1.0 - cone_ball_area(rho, u, r) / (math.pi * r * r))

    pts = [p for p in (r,) if 0 < p < umax]
    val, err = _quad(f, 0.0, umax, pts, limit)
    return MeasureEstimate(val, max(err, 1e-300), limit, "quadrature")


def segment_area(d, r):
    """Area of the part of a disk of radius r beyond a chord at distance d from the center."""
    d = np.clip(np.asarray(d, dtype=float), 0.0, r)
    return r * r * np.arccos(d / r) - d * np.sqrt(np.maximum(r * r - d * d, 0.0))


def half_plane_strip_deviation(offset: float, r: float, limit: int = 200) -> MeasureEstimate:
    """V_r of {0 <= y <= offset} per unit boundary length on the half plane."""
    top = min(offset, r)
    val, err = _quad(lambda d: float(segment_area(d, r)) / (math.pi * r * r), 0.0, top, None, limit)
    return MeasureEstimate(val, max(err, 1e-300), limit, "quadrature")


def cap_volume(n: int, u):
    """Volume of the part of the unit n-ball above height u (0 <= u <= 1)."""
    u = np.asarray(u, dtype=float)
    if n == 1:
        return 1.0 - u
    k = (n - 1) / 2.0
    # int_u^1 (1 - t^2)^k dt via the regularized incomplete beta function
    tail = 0.5 * special.beta(0.5, k + 1) * (1.0 - special.betainc(0.5, k + 1, u * u))
    return omega(n - 1) * tail


def halfspace_boundary_constant(n: int, cfg: EstimatorConfig | None = None) -> MeasureEstimate:
    """c_n with V_r / r -> c_n H^{n-1} on the boundary of the half space R^n_+."""
    cfg = cfg or EstimatorConfig()
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= 8):
        raise InvalidParameter("n must be an integer in [1, 8]")
    if n == 1:
        return MeasureEstimate(0.25)
    if n == 2:
        return MeasureEstimate(2.0 / (3.0 * math.pi))
    if n == 3:
        return MeasureEstimate(3.0 / 16.0)
    val, err = _quad(lambda u: float(cap_volume(n, u)), 0.0, 1.0, None, cfg.quad_limit)
    w = omega(n)
    return MeasureEstimate(val / w, max(err / w, 1e-300), cfg.quad_limit, "quadrature")
