"""OFF / OBJ triangle mesh files and JSON surface descriptors."""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import InvalidParameter, MeshError
from .mesh import PolyhedralMesh


def _tokens(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                yield line


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    lines = _tokens(path)
    try:
        head = next(lines)
        if head.upper().startswith("OFF"):
            rest = head[3:].split()
            counts = rest if rest else next(lines).split()
        else:
            raise MeshError("missing OFF header")
        nv, nf = int(counts[0]), int(counts[1])
        verts = [list(map(float, next(lines).split()[:3])) for _ in range(nv)]
        faces = []
        for _ in range(nf):
            parts = next(lines).split()
            k = int(parts[0])
            if k != 3:
                raise MeshError(f"non-triangular face with {k} vertices")
            faces.append([int(p) for p in parts[1:4]])
    except StopIteration:
        raise MeshError("truncated OFF file") from None
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed OFF file: {exc}") from None
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    try:
        for line in _tokens(path):
            parts = line.split()
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"non-triangular face with {len(idx)} vertices")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed OBJ file: {exc}") from None
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_mesh(path, convex_embedded: bool = False) -> PolyhedralMesh:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".off":
        V, F = read_off(path)
    elif ext == ".obj":
        V, F = read_obj(path)
    else:
        raise MeshError(f"unsupported mesh format {ext!r} (use .off or .obj)")
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return PolyhedralMesh.from_positions(V, F, convex_embedded=convex_embedded, name=name)


def write_off(path, positions, faces) -> None:
    P = np.asarray(positions, dtype=float)
    if P.shape[1] == 2:
        P = np.column_stack([P, np.zeros(len(P))])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"OFF\n{len(P)} {len(faces)} 0\n")
        for p in P:
            fh.write(" ".join(repr(float(c)) for c in p) + "\n")
        for f in faces:
            fh.write("3 " + " ".join(str(int(v)) for v in f) + "\n")


def load_descriptor(desc: dict | str, base_dir: str | None = None):
    """Build a surface from ``{kind, params | mesh_path, flags}``.

    Kinds: the analytic catalog, ``mesh`` (needs ``mesh_path``), ``convex_hull``
    (``params.points``), ``doubled_polygon`` (``params.polygon``) and the
    named catalog entries of :mod:`mmlab.catalog`.
    """
    from . import surfaces
    from .doubling import double_polygon
    from .hull import build_convex_hull_surface
    from .. import catalog

    if isinstance(desc, str):
        with open(desc, "r", encoding="utf-8") as fh:
            base_dir = os.path.dirname(os.path.abspath(desc))
            desc = json.load(fh)
    if not isinstance(desc, dict) or "kind" not in desc:
        raise InvalidParameter("surface descriptor must be an object with a 'kind'")
    kind = desc["kind"]
    params = dict(desc.get("params") or {})
    flags = desc.get("flags") or {}
    name = desc.get("name")
    if kind in ("plane", "half_plane", "flat_torus", "sphere", "cone"):
        return surfaces.build_analytic(kind, name=name, **params)
    if kind == "mesh":
        path = desc.get("mesh_path")
        if not path:
            raise InvalidParameter("mesh descriptor needs mesh_path")
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        mesh = read_mesh(path, convex_embedded=bool(flags.get("convex_embedded", False)))
        if flags.get("convex_embedded"):
            return build_convex_hull_surface(mesh.positions, name=name or mesh.name)
        return surfaces.build_polyhedral(mesh, name=name)
    if kind == "convex_hull":
        return build_convex_hull_surface(np.asarray(params["points"], dtype=float), name=name or "hull")
    if kind == "doubled_polygon":
        return double_polygon(np.asarray(params["polygon"], dtype=float), name=name or "doubled_polygon")
    if kind in catalog.NAMED:
        return catalog.NAMED[kind](**params)
    raise InvalidParameter(f"unknown surface kind {kind!r}")
