"""Mesh files, face-function files, flow traces and OBJ/PLY export.

Files are JSON. Floats are written with Python's shortest round-trip repr,
which parses back to the identical double, so save/load is bitwise lossless
and identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, IoError, ProjectionError, VersionMismatch
from .lattice_grid import build_grid
from .mesh_core import Mesh
from .pyramid_refine import TriMesh

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
POLE_GUARD = 1e-6


@dataclass
class MeshFile:
    n: int
    N: int
    L: list
    kind: str  # "quad" or "tri"
    vertices: np.ndarray
    apexes: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def header(self) -> dict:
        return {"format_version": FORMAT_VERSION, "n": self.n, "N": self.N,
                "L": [[int(x) for x in row] for row in self.L], "kind": self.kind}

    def to_mesh(self):
        """The Mesh (kind quad) or TriMesh (kind tri) described by the file."""
        mesh = Mesh(build_grid(self.L, self.N), self.vertices)
        return mesh if self.kind == "quad" else TriMesh(mesh, self.apexes)

    def to_json(self) -> str:
        doc = {"header": self.header, "vertices": self.vertices.tolist()}
        if self.kind == "tri":
            doc["apexes"] = self.apexes.tolist()
        if self.provenance:
            doc["provenance"] = self.provenance
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def run_id(obj) -> str:
    """Content hash of a mesh (git-style short id): same points, same id."""
    h = hashlib.sha1()
    base = obj.base if isinstance(obj, TriMesh) else obj
    h.update(np.ascontiguousarray(base.grid.L).tobytes())
    h.update(np.int64(base.N).tobytes())
    h.update(np.ascontiguousarray(base.points).tobytes())
    if isinstance(obj, TriMesh):
        h.update(np.ascontiguousarray(obj.apex).tobytes())
    return h.hexdigest()[:12]


def to_meshfile(obj, provenance: dict | None = None) -> MeshFile:
    tri = isinstance(obj, TriMesh)
    base = obj.base if tri else obj
    prov = dict(provenance or {})
    if prov:
        prov.setdefault("run_id", run_id(obj))
    return MeshFile(base.n, base.N, base.grid.L.tolist(), "tri" if tri else "quad",
                    np.array(base.points), np.array(obj.apex) if tri else None, prov)


def atomic_write(path, text: str):
    """Write text to path through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def save_mesh(path, obj, provenance: dict | None = None) -> MeshFile:
    mf = obj if isinstance(obj, MeshFile) else to_meshfile(obj, provenance)
    atomic_write(path, mf.to_json())
    return mf


def _rows(name, rows, count, dim) -> np.ndarray:
    if not isinstance(rows, list):
        raise FormatError(f"{name} must be a list")
    if len(rows) != count:
        raise FormatError(f"{name}: expected {count} rows, found {len(rows)}")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise FormatError(f"{name}[{i}]: expected {dim} numbers")
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row):
            raise FormatError(f"{name}[{i}]: non-numeric entry")
    arr = np.array(rows, dtype=float)
    bad = np.flatnonzero(~np.all(np.isfinite(arr), axis=1))
    if bad.size:
        raise FormatError(f"{name}[{int(bad[0])}]: non-finite entry")
    return arr


def parse_header(doc) -> dict:
    if not isinstance(doc, dict) or not isinstance(doc.get("header"), dict):
        raise FormatError("missing header")
    h = doc["header"]
    for key in ("format_version", "n", "N", "L", "kind"):
        if key not in h:
            raise FormatError(f"header lacks {key!r}")
    if h["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(f"format version {h['format_version']!r}, expected {FORMAT_VERSION}")
    if not isinstance(h["n"], int) or h["n"] < 2:
        raise FormatError("header n must be an integer >= 2")
    if not isinstance(h["N"], int) or h["N"] < 1:
        raise FormatError("header N must be a positive integer")
    L = h["L"]
    if not (isinstance(L, list) and len(L) == 2
            and all(isinstance(r, list) and len(r) == 2 and all(isinstance(x, int) for x in r)
                    for r in L)):
        raise FormatError("header L must be a 2x2 integer matrix")
    if h["kind"] not in ("quad", "tri"):
        raise FormatError(f"unknown kind {h['kind']!r}")
    return h


def load_mesh(path) -> MeshFile:
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    h = parse_header(doc)
    det = h["L"][0][0] * h["L"][1][1] - h["L"][0][1] * h["L"][1][0]
    if det <= 0:
        raise FormatError("header L must have positive determinant")
    dim = 2 * h["n"]
    verts = _rows("vertices", doc.get("vertices"), det, dim)
    apexes = _rows("apexes", doc.get("apexes"), det, dim) if h["kind"] == "tri" else None
    prov = doc.get("provenance", {})
    if not isinstance(prov, dict):
        raise FormatError("provenance must be an object")
    return MeshFile(h["n"], h["N"], h["L"], h["kind"], verts, apexes, prov)


def save_face_function(path, grid, values, extra: dict | None = None):
    doc = {"header": {"format_version": FORMAT_VERSION, "kind": "face_function",
                      "N": int(grid.N), "L": grid.L.tolist()},
           "values": np.asarray(values, dtype=float).tolist()}
    if extra:
        doc["extra"] = extra
    atomic_write(path, json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_face_function(path):
    """Returns (grid, values)."""
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    h = doc.get("header") if isinstance(doc, dict) else None
    if not isinstance(h, dict) or h.get("kind") != "face_function":
        raise FormatError("not a face-function file")
    if h.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"format version {h.get('format_version')!r}")
    try:
        grid = build_grid(h["L"], h["N"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"bad grid in header: {exc}") from exc
    vals = doc.get("values")
    if not isinstance(vals, list) or len(vals) != grid.size:
        raise FormatError(f"values: expected {grid.size} entries")
    return grid, np.array(vals, dtype=float)


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "energy", "max_density", "dt"])
    for step, E, mx, dt in trace:
        w.writerow([int(step), repr(float(E)), repr(float(mx)), repr(float(dt))])
    return buf.getvalue()


def write_trace(path, trace):
    atomic_write(path, trace_csv(trace))


# export

def stereographic(points) -> np.ndarray:
    """(x, y, z, w) -> (x, y, z) / (1 - w), projection from the pole (0, 0, 0, 1)."""
    p = np.asarray(points, dtype=float)
    return p[:, :3] / (1.0 - p[:, 3:4])


def radial_stereo(points):
    """Radial projection onto S^3 followed by stereographic projection.

    Returns (images, number of vertices moved away from the pole).
    """
    p = np.asarray(points, dtype=float)
    if p.shape[1] != 4:
        raise ProjectionError("radial_stereo needs points in R^4 (n = 2)")
    r = np.linalg.norm(p, axis=1)
    zero = np.flatnonzero(r == 0)
    if zero.size:
        raise ProjectionError(f"vertex {int(zero[0])} is at the origin; radial projection undefined")
    s = p / r[:, None]
    near = np.linalg.norm(s - np.array([0, 0, 0, 1.0]), axis=1) < POLE_GUARD
    if near.any():
        log.warning("%d vertices near the projection pole were moved", int(near.sum()))
        s[near, 0] += POLE_GUARD
        s[near] /= np.linalg.norm(s[near], axis=1)[:, None]
    return stereographic(s), int(near.sum())


def _geometry(obj, quads: str):
    if isinstance(obj, TriMesh):
        return obj.all_points(), [list(t) for t in obj.triangles()]
    fv = obj.grid.face_vertices
    if quads == "native":
        return obj.points, [list(f) for f in fv]
    faces = []
    for a0, a1, a2, a3 in fv:  # split along the diagonal A0 A2
        faces += [[a0, a1, a2], [a0, a2, a3]]
    return obj.points, faces


def _project(points, projection: str, drop: int):
    if projection == "none3of4":
        if points.shape[1] != 4:
            raise ProjectionError("none3of4 needs points in R^4 (n = 2)")
        keep = [i for i in range(4) if i != drop]
        return points[:, keep], 0
    if projection == "radial_stereo":
        return radial_stereo(points)
    raise ProjectionError(f"unknown projection {projection!r}")


def export_obj(obj, path, projection: str = "none3of4", drop: int = 3,
               quads: str = "split") -> int:
    """Write an OBJ file; returns the number of pole-guard adjustments."""
    pts, faces = _geometry(obj, quads)
    xyz, moved = _project(np.asarray(pts), projection, drop)
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in xyz.tolist()]
    lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in faces]
    atomic_write(path, "\n".join(lines) + "\n")
    return moved


def export_ply(obj, path, projection: str = "none3of4", drop: int = 3,
               quads: str = "split") -> int:
    """ASCII PLY with the same geometry as export_obj."""
    pts, faces = _geometry(obj, quads)
    xyz, moved = _project(np.asarray(pts), projection, drop)
    head = ["ply", "format ascii 1.0", f"element vertex {len(xyz)}",
            "property double x", "property double y", "property double z",
            f"element face {len(faces)}", "property list uchar int vertex_indices",
            "end_header"]
    body = [f"{x!r} {y!r} {z!r}" for x, y, z in xyz.tolist()]
    body += [f"{len(f)} " + " ".join(str(int(i)) for i in f) for f in faces]
    atomic_write(path, "\n".join(head + body) + "\n")
    return moved
