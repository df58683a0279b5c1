"""Triangle meshes of sampled surfaces and deterministic text output.

Numbers are written with ``repr``, the shortest string that reads back to
the same double, so files round-trip exactly and repeated runs produce
identical bytes.  Every file is written to a temporary sibling first and
moved into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph_calculus import GraphGrid, psi_f
from .surface_zoo import RayFan


@dataclass
class Mesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 3), zero-based

    @property
    def n_faces(self) -> int:
        return len(self.faces)


def _compact(vertices: np.ndarray, faces: np.ndarray) -> Mesh:
    """Drop vertices no face uses and renumber the faces."""
    used = np.unique(faces)
    remap = np.full(len(vertices), -1)
    remap[used] = np.arange(len(used))
    return Mesh(vertices[used], remap[faces])


def mesh_from_grid(g: GraphGrid) -> Mesh:
    """Lift the grid nodes and split each unmasked cell into two triangles.

    Masked cells, those met by a singular curve, are left out so no triangle
    spans the curve.  Vertices used by no remaining triangle are dropped.
    """
    verts = psi_f(g).reshape(-1, 3)
    nz = g.nz
    i, j = np.meshgrid(np.arange(g.nx - 1), np.arange(g.nz - 1), indexing="ij")
    keep = np.ones(i.shape, dtype=bool) if g.singular_mask is None else ~g.singular_mask
    i, j = i[keep], j[keep]
    a = i * nz + j
    b = (i + 1) * nz + j
    c = (i + 1) * nz + j + 1
    d = i * nz + j + 1
    faces = np.stack([np.stack([a, b, c], -1), np.stack([a, c, d], -1)], axis=1).reshape(-1, 3)
    return _compact(verts, faces)


def mesh_from_rayfan(fan: RayFan, samples: int = 16) -> Mesh:
    """Ribbon strips between neighbouring rays, vertices exactly on the rays.

    Branch rays leaving one nexus ray with the same slope are joined in order
    of their origins, and those origins are single vertices shared by both
    sides of the nexus.  Fan rays from the origin are joined to their
    neighbours within each closed piece of the slope set.
    """
    t = np.linspace(0.0, fan.extent, samples + 1)[1:]
    verts: list[np.ndarray] = [np.zeros((1, 3))]
    faces: list[tuple[int, int, int]] = []
    count = 1
    shared: dict[tuple, int] = {(0.0, 0.0, 0.0): 0}

    def add(points: np.ndarray) -> list[int]:
        nonlocal count
        verts.append(points)
        count += len(points)
        return list(range(count - len(points), count))

    def vertex(p) -> int:
        key = tuple(float(c) for c in p)
        if key not in shared:
            shared[key] = add(np.asarray([key]))[0]
        return shared[key]

    def strip(left: list[int], right: list[int]):
        for k in range(len(left) - 1):
            if left[k] == right[k]:
                faces.append((left[k], right[k + 1], left[k + 1]))
                continue
            faces.append((left[k], right[k], right[k + 1]))
            faces.append((left[k], right[k + 1], left[k + 1]))

    families: dict[tuple[int, float], list[int]] = {}
    for k, r in enumerate(fan.rays):
        if r.kind == "branch":
            families.setdefault((r.parent, r.slope), []).append(k)
    for key in sorted(families):
        members = sorted(families[key], key=lambda k: np.hypot(*fan.rays[k].origin[:2]))
        rows = [[vertex(fan.rays[k].origin)] + add(fan.rays[k].points(t)) for k in members]
        for left, right in zip(rows[:-1], rows[1:]):
            strip(left, right)

    for c, d in fan.layout.flat:
        piece = sorted((r.slope, k) for k, r in enumerate(fan.rays)
                       if r.kind == "fan" and c <= r.slope <= d)
        rows = [[0] + add(fan.rays[k].points(t)) for _, k in piece]
        for left, right in zip(rows[:-1], rows[1:]):
            strip(left, right)
    return Mesh(np.concatenate(verts, axis=0), np.asarray(faces, dtype=int).reshape(-1, 3))


def _fmt(v: float) -> str:
    v = float(v)
    if not np.isfinite(v):
        raise ValueError("cannot write non-finite coordinates")
    return repr(v + 0.0)


def obj_text(mesh: Mesh) -> str:
    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "".join(line + "\n" for line in lines)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_obj(mesh: Mesh, path) -> None:
    atomic_write(path, obj_text(mesh))


def read_obj(path) -> Mesh:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(c) for c in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(c.split("/")[0]) - 1 for c in parts[1:4]])
    return Mesh(np.asarray(verts, dtype=float).reshape(-1, 3),
                np.asarray(faces, dtype=int).reshape(-1, 3))


def cross_section(surface, plane: dict, samples: int = 201, span=(-1.0, 1.0)) -> np.ndarray:
    """Points (s, y, z) of a surface cut by {x = c} or, for grids, {z = c}.

    Grids are cut along a line of the plane y = 0 and lifted; ``s`` is the
    coordinate along that line.  Fans are cut by the vertical plane x = c
    and ``s`` is y.
    """
    if len(plane) != 1 or next(iter(plane)) not in ("x", "z"):
        raise ValueError("plane must be {'x': c} or {'z': c}")
    axis, c = next(iter(plane.items()))
    c = float(c)
    if isinstance(surface, RayFan):
        if axis != "x":
            raise ValueError("fans can only be cut by planes x = const")
        y = np.linspace(span[0], span[1], samples)
        z = surface.height(np.full_like(y, c), y)
        return np.stack([y, y, z], axis=-1)
    if not isinstance(surface, GraphGrid):
        raise TypeError("surface must be a GraphGrid or a RayFan")
    if axis == "x":
        s = surface.zs
        xz = np.stack([np.full_like(s, c), s], axis=-1)
    else:
        s = surface.xs
        xz = np.stack([s, np.full_like(s, c)], axis=-1)
    pts = psi_f(surface, xz)
    return np.stack([s, pts[:, 1], pts[:, 2]], axis=-1)


def cross_section_text(rows: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "y", "z"])
    for s, y, z in rows:
        w.writerow([_fmt(s), _fmt(y), _fmt(z)])
    return buf.getvalue()


def write_cross_section(surface, plane: dict, path, samples: int = 201, span=(-1.0, 1.0)) -> None:
    atomic_write(path, cross_section_text(cross_section(surface, plane, samples, span)))


def write_json(data, path) -> None:
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
