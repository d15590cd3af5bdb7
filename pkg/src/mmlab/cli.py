"""Command-line front-end: one subcommand per check, JSON/CSV reports, exit codes 0/1/2."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import report, suite
from .errors import BudgetExceeded, FlowUndefined, MMLabError, QuadratureError
from .estimate import EstimatorConfig
from .geometry.meshio import load_descriptor
from .geometry.surfaces import PolyhedralSurface, Surface
from .geometry.types import RegionSpec, SurfacePoint

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ parsing
def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} numbers, got {text!r}")
    return vals


def load_surface(spec: str, params: list[str] | None = None, convex: bool = False) -> Surface:
    kw = {}
    for item in params or []:
        if "=" not in item:
            raise ConfigError(f"--param needs key=value, got {item!r}")
        k, v = item.split("=", 1)
        kw[k] = _value(v)
    low = spec.lower()
    if low.endswith(".json"):
        if not os.path.exists(spec):
            raise ConfigError(f"no such descriptor file: {spec}")
        return load_descriptor(spec)
    if low.endswith((".off", ".obj")):
        if not os.path.exists(spec):
            raise ConfigError(f"no such mesh file: {spec}")
        return load_descriptor({"kind": "mesh", "mesh_path": os.path.abspath(spec),
                                "flags": {"convex_embedded": convex}})
    return load_descriptor({"kind": spec, "params": kw})


def parse_point(S: Surface, text: str | None, vertex: int | None = None) -> SurfacePoint:
    if vertex is not None:
        if not isinstance(S, PolyhedralSurface):
            raise ConfigError("--vertex needs a mesh surface")
        if not 0 <= vertex < S.mesh.n_vertices:
            raise ConfigError(f"vertex {vertex} out of range")
        return S.vertex_point(vertex)
    if text is None:
        raise ConfigError("a point is required (--point or --vertex)")
    vals = _floats(text)
    if isinstance(S, PolyhedralSurface):
        if len(vals) != 3:
            raise ConfigError("mesh points are given as face,x,y in the face chart")
        f = int(vals[0])
        if not 0 <= f < S.mesh.n_faces:
            raise ConfigError(f"face {f} out of range")
        return SurfacePoint((vals[1], vals[2]), f)
    if len(vals) != 2:
        raise ConfigError("analytic points are given as two coordinates")
    return SurfacePoint((vals[0], vals[1]))


def parse_region(S: Surface, text: str) -> RegionSpec:
    """``whole``, ``faces:0,1``, ``ball:<point>,R``, ``vertex:V,R`` or ``strip:OFFSET``."""
    kind, _, rest = text.partition(":")
    if kind == "whole":
        return RegionSpec.whole()
    if kind == "faces":
        return RegionSpec.face_set([int(v) for v in _floats(rest)])
    if kind == "ball":
        vals = rest.split(",")
        return RegionSpec.ball(parse_point(S, ",".join(vals[:-1])), float(vals[-1]))
    if kind == "vertex":
        v, R = _floats(rest, 2)
        return RegionSpec.vertex_nbhd(int(v), R)
    if kind == "strip":
        return RegionSpec.strip(_floats(rest, 1)[0])
    raise ConfigError(f"unknown region {text!r}")


def parse_measure(S: Surface, text: str):
    from .measures.checks import MeasureSpec

    kind, _, rest = text.partition(":")
    if kind == "dirac":
        return MeasureSpec("dirac", parse_point(S, rest))
    if kind == "weighted":
        vals = _floats(rest) if rest else []
        names = ("amp", "freq", "phase")
        return MeasureSpec("weighted", **dict(zip(names, vals)))
    if kind == "hausdorff":
        return MeasureSpec()
    raise ConfigError(f"unknown measure {text!r}")


def _cfg(a) -> EstimatorConfig:
    kw = {"seed": a.seed, "workers": a.workers}
    for name in ("outer", "inner", "budget", "r0", "ratio", "count"):
        v = getattr(a, name, None)
        if v is not None:
            kw[name] = v
    for name in ("inner_method", "outer_method"):
        v = getattr(a, name, None)
        if v is not None:
            kw[name] = v
    return EstimatorConfig(**kw)


# ------------------------------------------------------------- subcommands
# each returns (result, ok, csv_table or None)

def cmd_surface_info(a, S):
    info = {"descriptor": S.descriptor(), "total_area": S.total_area(), "feature_scale": S.feature_scale()}
    if isinstance(S, PolyhedralSurface):
        m = S.mesh
        info.update({"vertices": int(m.n_vertices), "faces": int(m.n_faces), "boundary": bool(S.has_boundary),
                     "total_defect": float(m.defects[~m.boundary_vertex].sum()),
                     "saddle_vertices": int(np.sum(S.saddle)), "locally_convex": bool(S.locally_convex),
                     "min_edge_length": float(m.min_edge_length()), "clearance": S.clearance()})
    return info, True, None


def cmd_ball_volume(a, S):
    from .measures.ball import ball_volume

    est = ball_volume(S, parse_point(S, a.point, a.vertex), a.r, _cfg(a))
    return {"r": a.r, "b": est.to_dict(), "euclidean": math.pi * a.r ** 2}, True, None


def cmd_deviation(a, S):
    from .measures.deviation import deviation

    est = deviation(S, parse_region(S, a.region), a.r, _cfg(a))
    return {"r": a.r, "V": est.to_dict(), "V_over_r": est.value / a.r, "V_over_r2": est.value / a.r ** 2}, True, None


def cmd_profile(a, S):
    from .measures.deviation import profile

    prof = profile(S, parse_region(S, a.region), _cfg(a))
    rows = prof.csv_rows()
    return prof.to_dict(), True, (rows[0], rows[1:])


def cmd_cone_mass(a, S):
    from .measures.cone import cone_mass

    est = cone_mass(a.alpha, _cfg(a))
    law = abs(est.value / a.alpha - 1 / 12) <= 0.5 * a.alpha
    return {"alpha": a.alpha, "m": est.value, "ci": list(est.ci()), "std_error": est.std_error,
            "law_gap": abs(est.value / a.alpha - 1 / 12), "law_holds": law}, law, None


def cmd_boundary_constant(a, S):
    from .measures.cone import halfspace_boundary_constant

    est = halfspace_boundary_constant(a.n, _cfg(a))
    return {"n": a.n, "c": est.value, "ci": list(est.ci())}, True, None


def cmd_exchange(a, S):
    from .measures.checks import exchange_check

    region = parse_point(S, a.singleton) if a.singleton else parse_region(S, a.region)
    rec = exchange_check(S, parse_measure(S, a.mu), parse_measure(S, a.nu), region, a.r, _cfg(a))
    return rec.to_dict(), rec.holds, None


def cmd_bonk_lang(a, S):
    from .measures.checks import bonk_lang_check

    rec = bonk_lang_check(S, parse_point(S, a.point, a.vertex), a.r, _cfg(a), delta0=a.delta0)
    return rec.to_dict(), rec.holds, None


def cmd_mean_curv(a, S):
    from .measures.checks import mean_curvature_check

    rec = mean_curvature_check(S, parse_point(S, a.point, a.vertex), a.r, _cfg(a))
    ok = rec.holds_with(a.C)
    return {**rec.to_dict(), "C": a.C, "holds": ok}, ok, None


def cmd_compare(a, S):
    from .flow_lab import compare_measures

    rec = compare_measures(S, parse_region(S, a.region), a.r, _cfg(a))
    return rec.to_dict(), rec.agree, None


def cmd_flow_check(a, S):
    from .flow_lab import jacobian_suite, liouville_preservation_check, reversibility_check

    K = parse_region(S, a.region)
    rev = reversibility_check(S, K, a.r, a.t, a.count, a.seed)
    dets, skipped, tried = jacobian_suite(S, a.jacobians, a.seed)
    jac_err = float(np.max(np.abs(dets - 1))) if len(dets) else None
    pres = liouville_preservation_check(S, K, a.r, a.t, _cfg(a), count=a.count)
    ok = rev.max_residual <= a.tol and (jac_err is None or jac_err <= 1e-6) and pres.holds
    out = {"reversibility": rev.to_dict(),
           "jacobian": {"count": int(len(dets)), "skipped": skipped, "tried": tried, "max_abs_det_minus_1": jac_err},
           "preservation": pres.to_dict(), "r": a.r, "t": a.t}
    return out, ok, None


def cmd_prop_smooth(a, S):
    from .riemann_chart import build_chart, prop_smooth_suite, read_tensor_csv, tensor_family

    domain = tuple(_floats(a.domain, 4))
    if a.tensor_csv:
        if not os.path.exists(a.tensor_csv):
            raise ConfigError(f"no such tensor file: {a.tensor_csv}")
        dom, arrays = read_tensor_csv(a.tensor_csv, a.h)
        chart = build_chart(dom, a.h, arrays, name=os.path.basename(a.tensor_csv))
    else:
        params = {}
        for item in a.param or []:
            k, _, v = item.partition("=")
            params[k] = _value(v)
        chart = build_chart(domain, a.h, tensor_family(a.family, **params), name=a.family)
    kind, _, rest = a.A.partition(":")
    if kind == "disk":
        A = ("disk", *_floats(rest, 3))
    elif kind == "rect":
        A = ("rect", *_floats(rest, 4))
    elif kind == "all":
        A = ("all",)
    else:
        raise ConfigError(f"unknown chart region {a.A!r}")
    rs = _floats(a.rs)
    res = prop_smooth_suite(chart, A, rs, calibration=a.calibration)
    rows = [[rec["r"], rec["Vr_A"], rec["bound"], rec["ratio"] if rec["ratio"] is not None else "",
             rec["discretization"]] for rec in res["records"]]
    return {"chart": chart.describe(), **res}, res["bounded"], (["r", "V_r_A", "bound", "ratio", "discretization"], rows)


def cmd_suite(a, S):
    only = [int(v) for v in _floats(a.only)] if a.only else None
    log = (lambda msg: print(msg, file=sys.stderr)) if not a.quiet else None
    recs = suite.run_suite(a.seed, a.workers, only=only, log=log)
    timing = {str(rec["criterion"]): rec.pop("seconds") for rec in recs}
    ok = all(rec["passed"] for rec in recs)
    rows = [[rec["criterion"], rec["title"], "pass" if rec["passed"] else "fail"] for rec in recs]
    return {"catalog": a.catalog, "criteria": recs, "all_passed": ok, "_timing": timing}, ok, \
        (["criterion", "title", "status"], rows)


# ------------------------------------------------------------------ parser
def _common(p, surface=True, estimator=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="directory for report files (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    if surface:
        p.add_argument("--surface", default="cube", help="catalog name, analytic kind, .json descriptor or .off/.obj mesh")
        p.add_argument("--param", action="append", help="surface parameter key=value (repeatable)")
        p.add_argument("--convex", action="store_true", help="mesh is the boundary of a convex body")
    if estimator:
        p.add_argument("--outer", type=int)
        p.add_argument("--inner", type=int)
        p.add_argument("--budget", type=int)
        p.add_argument("--inner-method", dest="inner_method")
        p.add_argument("--outer-method", dest="outer_method")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmlab", description="Ball-volume deviation measures and Liouville checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surface-info")
    _common(p)
    p.set_defaults(func=cmd_surface_info)

    p = sub.add_parser("ball-volume")
    _common(p, estimator=True)
    p.add_argument("--point")
    p.add_argument("--vertex", type=int)
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_ball_volume)

    p = sub.add_parser("deviation")
    _common(p, estimator=True)
    p.add_argument("--region", default="whole")
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("profile")
    _common(p, estimator=True)
    p.add_argument("--region", default="whole")
    p.add_argument("--r0", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("cone-mass")
    _common(p, surface=False)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_cone_mass)

    p = sub.add_parser("boundary-constant")
    _common(p, surface=False)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_boundary_constant)

    p = sub.add_parser("exchange-check")
    _common(p, estimator=True)
    p.add_argument("--mu", default="hausdorff", help="hausdorff | weighted[:amp,freq,phase] | dirac:<point>")
    p.add_argument("--nu", default="hausdorff")
    p.add_argument("--region", default="whole")
    p.add_argument("--singleton", help="use the one-point set {point} as A")
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_exchange)

    p = sub.add_parser("bonk-lang")
    _common(p, estimator=True)
    p.add_argument("--point")
    p.add_argument("--vertex", type=int)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--delta0", type=float, default=0.5)
    p.set_defaults(func=cmd_bonk_lang)

    p = sub.add_parser("mean-curv-check")
    _common(p, estimator=True)
    p.add_argument("--point")
    p.add_argument("--vertex", type=int)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--C", type=float, default=100.0)
    p.set_defaults(func=cmd_mean_curv)

    p = sub.add_parser("compare")
    _common(p, estimator=True)
    p.add_argument("--region", default="whole")
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("flow-check")
    _common(p, estimator=True)
    p.add_argument("--region", default="whole")
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--jacobians", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_flow_check)

    p = sub.add_parser("prop-smooth")
    _common(p, surface=False)
    p.add_argument("--family", default="conformal_bump",
                   help="identity | constant | conformal_bump | linear (ignored with --tensor-csv)")
    p.add_argument("--param", action="append", help="tensor family parameter key=value")
    p.add_argument("--tensor-csv", dest="tensor_csv")
    p.add_argument("--domain", default="0,1,0,1")
    p.add_argument("--h", type=float, default=0.0025)
    p.add_argument("--A", default="disk:0.5,0.5,0.12")
    p.add_argument("--rs", default="0.1,0.05,0.025")
    p.add_argument("--calibration", choices=("frozen", "flat"), default="frozen")
    p.set_defaults(func=cmd_prop_smooth)

    p = sub.add_parser("suite")
    _common(p, surface=False)
    p.add_argument("--catalog", default="default", choices=("default",))
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_suite)
    return ap


def _config(a) -> dict:
    skip = {"func", "out", "workers", "format", "quiet"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    seed = a.seed
    try:
        if a.workers < 1:
            raise ConfigError("--workers must be >= 1")
        S = load_surface(a.surface, a.param, a.convex) if hasattr(a, "surface") else None
        result, ok, table = a.func(a, S)
    except (ConfigError, MMLabError, OSError, json.JSONDecodeError, KeyError) as exc:
        runtime = isinstance(exc, (BudgetExceeded, FlowUndefined, QuadratureError))
        print(f"error: {type(exc).__name__}: {exc} (seed={seed})", file=sys.stderr)
        return EXIT_FAIL if runtime else EXIT_CONFIG
    timing = result.pop("_timing", None) if isinstance(result, dict) else None
    rep = report.make_report(a.command, _config(a), seed, result, ok)
    if timing is not None:
        rep["metadata"]["seconds"] = timing
    text = report.dumps(rep)
    files = {f"{a.command}.json": text}
    if a.format == "csv" and table is not None:
        files[f"{a.command}.csv"] = report.csv_text(*table)
    if a.out:
        for path in report.write_files(a.out, files):
            print(path, file=sys.stderr)
    else:
        sys.stdout.write(files.get(f"{a.command}.csv", text) if a.format == "csv" else text)
    if not ok:
        print(f"check failed: {a.command} (seed={seed})", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
