"""Isotropic pyramids over isotropic quadrilaterals and the triangulated meshes
they produce.

For a quad A0 A1 A2 A3 with diagonals D0 = A2 - A0 and D1 = A3 - A1 spanning an
isotropic plane, an apex P makes the four triangles (P, Ai, Ai+1) isotropic
when omega(P - Ai, Ai+1 - Ai) = 0 for all i. The apex chosen here is
P = G + X with G the barycenter and

    X = -(xi / |beta|^2) (beta0 D0 + beta1 D1) - (beta0 / 2) J D0' + (beta1 / 2) J D1',

where (D0', D1') is the dual basis of (D0, D1) inside their span,
V = A1 - A0 = alpha0 D0 + alpha1 D1 + (part off the diagonal plane),
beta_j = omega(D_j, V) and xi = (beta0 (1 - 2 alpha0) + beta1 (1 + 2 alpha1)) / 4.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .discrete_ops import moment_map_r
from .errors import DegenerateDiagonals, GenericityFailed, NotIsotropic
from .mesh_core import J, Mesh, diagonals, omega, shear

FLAT_TOL = 1e-9


def _frame(A0, A1, A2, A3, tol):
    D0, D1, V = A2 - A0, A3 - A1, A1 - A0
    n0 = np.linalg.norm(D0, axis=-1)
    n1 = np.linalg.norm(D1, axis=-1)
    g00 = n0**2
    g11 = n1**2
    g01 = np.sum(D0 * D1, axis=-1)
    det = g00 * g11 - g01**2
    iso = np.abs(omega(D0, D1))
    return D0, D1, V, n0, n1, g00, g01, g11, det, iso


@dataclass
class ApexFrame:
    G: np.ndarray
    D0: np.ndarray
    D1: np.ndarray
    D0p: np.ndarray
    D1p: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    xi: np.ndarray


def apex_frame(A0, A1, A2, A3, tol: float = 1e-10, face_ids=None) -> ApexFrame:
    """Frame quantities of one quad (1-d inputs) or many quads ((m, 2n) inputs)."""
    A0, A1, A2, A3 = (np.asarray(a, dtype=float) for a in (A0, A1, A2, A3))
    D0, D1, V, n0, n1, g00, g01, g11, det, iso = _frame(A0, A1, A2, A3, tol)
    bad = np.atleast_1d(det <= tol**2 * g00 * g11)
    if bad.any():
        f = int(np.flatnonzero(bad)[0])
        raise DegenerateDiagonals("diagonals are not independent",
                                  None if face_ids is None else int(np.asarray(face_ids)[f]))
    bad = np.atleast_1d(iso > tol * n0 * n1)
    if bad.any():
        f = int(np.flatnonzero(bad)[0])
        raise NotIsotropic(f"omega(D0, D1) = {np.atleast_1d(iso)[f]:.3e}",
                           None if face_ids is None else int(np.asarray(face_ids)[f]))
    inv = 1.0 / det
    D0p = ((g11 * inv)[..., None] * D0 - (g01 * inv)[..., None] * D1)
    D1p = ((g00 * inv)[..., None] * D1 - (g01 * inv)[..., None] * D0)
    B0, B1 = J(D0p), J(D1p)
    alpha = np.stack([np.sum(V * D0p, axis=-1), np.sum(V * D1p, axis=-1)], axis=-1)
    beta = np.stack([omega(D0, V), omega(D1, V)], axis=-1)
    a0, a1 = alpha[..., 0], alpha[..., 1]
    b0, b1 = beta[..., 0], beta[..., 1]
    xi = (b0 * (1 - 2 * a0) + b1 * (1 + 2 * a1)) / 4
    G = (A0 + A1 + A2 + A3) / 4
    return ApexFrame(G, D0, D1, D0p, D1p, B0, B1, alpha, beta, xi)


def optimal_apex(A0, A1, A2, A3, tol: float = 1e-10, face_ids=None) -> np.ndarray:
    """Apex of the optimal isotropic pyramid; the barycenter for flat quads.

    Works on single points or stacks of quads (leading axis).
    """
    fr = apex_frame(A0, A1, A2, A3, tol, face_ids)
    b0, b1 = fr.beta[..., 0], fr.beta[..., 1]
    bb = b0**2 + b1**2
    Vn = np.linalg.norm(np.asarray(A1, dtype=float) - np.asarray(A0, dtype=float), axis=-1)
    flat = np.maximum(np.abs(b0), np.abs(b1)) <= FLAT_TOL * Vn
    safe = np.where(flat, 1.0, bb)
    c = -fr.xi / safe
    X = ((c * b0)[..., None] * fr.D0 + (c * b1)[..., None] * fr.D1
         - (b0 / 2)[..., None] * fr.B0 + (b1 / 2)[..., None] * fr.B1)
    X = np.where(np.asarray(flat)[..., None], 0.0, X)
    return fr.G + X


def pyramid_residuals(P, A0, A1, A2, A3) -> np.ndarray:
    """omega(P - Ai, Ai+1 - Ai) for i = 0..3 (last axis)."""
    A = [np.asarray(a, dtype=float) for a in (A0, A1, A2, A3)]
    P = np.asarray(P, dtype=float)
    return np.stack([omega(P - A[i], A[(i + 1) % 4] - A[i]) for i in range(4)], axis=-1)


def constraint_matrix(A0, A1, A2, A3) -> np.ndarray:
    """Rows r_i with <r_i, X> = omega(X, Ai+1 - Ai) (apex constraints, linear part)."""
    A = [np.asarray(a, dtype=float) for a in (A0, A1, A2, A3)]
    # omega(X, E) = g(X, J E)
    return np.stack([J(A[(i + 1) % 4] - A[i]) for i in range(4)], axis=-2)


def apex_space_dimension(A0, A1, A2, A3, rel_tol: float = 1e-9) -> int:
    """Dimension of the affine space of isotropic apexes, from an SVD."""
    C = constraint_matrix(A0, A1, A2, A3)
    s = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(s > rel_tol * s.max())) if s.max() > 0 else 0
    return C.shape[-1] - rank


def _null_projector(C, rel_tol=1e-9):
    _, s, Vt = np.linalg.svd(C)
    rank = int(np.sum(s > rel_tol * s.max())) if s.max() > 0 else 0
    R = Vt[:rank]
    return lambda d: d - R.T @ (R @ d)


@dataclass(frozen=True, eq=False)
class TriMesh:
    """A quad mesh with one apex per face: four triangles (apex, Ai, Ai+1) per face."""

    base: Mesh
    apex: np.ndarray

    def __post_init__(self):
        apex = np.array(self.apex, dtype=float)
        if apex.shape != (self.base.grid.size, 2 * self.base.n):
            raise ValueError(f"apex array has shape {apex.shape}")
        apex.setflags(write=False)
        object.__setattr__(self, "apex", apex)

    @property
    def grid(self):
        return self.base.grid

    def corners(self):
        fv = self.grid.face_vertices
        p = self.base.points
        return [p[fv[:, i]] for i in range(4)]

    def residuals(self) -> np.ndarray:
        return pyramid_residuals(self.apex, *self.corners())

    def triangles(self) -> np.ndarray:
        """(4 * faces, 3) indices into the stacked array [base points; apexes]."""
        fv = self.grid.face_vertices
        M = self.grid.size
        apex_ids = M + np.arange(M)
        tris = [np.column_stack([apex_ids, fv[:, i], fv[:, (i + 1) % 4]]) for i in range(4)]
        return np.stack(tris, axis=1).reshape(-1, 3)

    def all_points(self) -> np.ndarray:
        return np.vstack([self.base.points, self.apex])


def refine(rho: Mesh, tol: float = 1e-10, gate: float = 1e-8) -> TriMesh:
    """Optimal triangulation of an isotropic quad mesh."""
    mu = moment_map_r(rho)
    if np.max(np.abs(mu)) > gate:
        f = int(np.argmax(np.abs(mu)))
        raise NotIsotropic(f"density {mu[f]:.3e} exceeds the refinement gate", f)
    apex = optimal_apex(*_corners(rho), tol=tol, face_ids=np.arange(rho.grid.size))
    return TriMesh(rho, apex)


def _corners(mesh: Mesh):
    fv = mesh.grid.face_vertices
    return [mesh.points[fv[:, i]] for i in range(4)]


def apex_diameter_ratio(tm: TriMesh) -> float:
    """max over faces of diam(pyramid) / (diam(quad) + sqrt(2 theta) / N).

    sqrt(2 theta) / N is the typical diagonal length, the unit length of a face.
    """
    A = np.stack(tm.corners(), axis=1)  # (M, 4, 2n)
    pyr = np.concatenate([A, tm.apex[:, None, :]], axis=1)

    def diam(X):
        d = X[:, :, None, :] - X[:, None, :, :]
        return np.sqrt(np.max(np.sum(d * d, axis=-1), axis=(1, 2)))

    U, V = diagonals(tm.base, renormalized=True)
    theta = 0.5 * np.mean(np.sum(U * U, axis=1) + np.sum(V * V, axis=1))
    char = np.sqrt(2 * theta) / tm.grid.N
    return float(np.max(diam(pyr) / (diam(A) + char)))


def apex_nudge(tm: TriMesh, face: int, delta, rel_tol: float = 1e-9) -> TriMesh:
    """Move one apex by the part of delta that keeps its four triangles isotropic."""
    A = [c[int(face)] for c in tm.corners()]
    proj = _null_projector(constraint_matrix(*A), rel_tol)
    apex = tm.apex.copy()
    apex[int(face)] += proj(np.asarray(delta, dtype=float))
    return TriMesh(tm.base, apex)


def pl_eval_many(tm: TriMesh, Q) -> np.ndarray:
    """Piecewise linear map at grid-plane points Q (m, 2)."""
    Q = np.asarray(Q, dtype=float)
    N = tm.grid.N
    g = Q * N
    k = np.floor(g[:, 0]).astype(np.int64)
    l = np.floor(g[:, 1]).astype(np.int64)
    s = g[:, 0] - k
    t = g[:, 1] - l
    face = tm.grid.index(k, l)
    fv = tm.grid.face_vertices[face]
    # triangle 0: bottom (A0, A1), 1: right (A1, A2), 2: top (A2, A3), 3: left (A3, A0)
    below = t <= s
    lower = s + t <= 1
    tri = np.where(below, np.where(lower, 0, 1), np.where(lower, 3, 2))
    corners = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    a = corners[tri]
    b = corners[(tri + 1) % 4]
    c = np.array([0.5, 0.5])
    # barycentric coordinates in (c, a, b)
    m00, m01 = a[:, 0] - c[0], b[:, 0] - c[0]
    m10, m11 = a[:, 1] - c[1], b[:, 1] - c[1]
    rx, ry = s - c[0], t - c[1]
    det = m00 * m11 - m01 * m10
    la = (rx * m11 - ry * m01) / det
    lb = (m00 * ry - m10 * rx) / det
    lc = 1 - la - lb
    pts = tm.base.points
    Pa = pts[fv[np.arange(len(face)), tri]]
    Pb = pts[fv[np.arange(len(face)), (tri + 1) % 4]]
    return lc[:, None] * tm.apex[face] + la[:, None] * Pa + lb[:, None] * Pb


def pl_eval(tm: TriMesh, x: float, y: float) -> np.ndarray:
    return pl_eval_many(tm, np.array([[x, y]]))[0]


# genericity

def _rank(vectors, scale, rel_tol=1e-8) -> int:
    s = np.linalg.svd(np.atleast_2d(vectors), compute_uv=False)
    return int(np.sum(s > rel_tol * scale))


def vertex_edges(mesh: Mesh) -> np.ndarray:
    """(size, 4, 2n) edge vectors from each vertex to its four grid neighbours."""
    g = mesh.grid
    p = mesh.points
    nbrs = [g.shift(1, 0), g.shift(0, 1), g.shift(-1, 0), g.shift(0, -1)]
    return np.stack([p[i] - p for i in nbrs], axis=1)


def genericity_defects(rho: Mesh, floor: float | None = None, tol: float = 1e-10) -> dict:
    """Report which of the three genericity conditions fail, per condition."""
    A = _corners(rho)
    fr = apex_frame(*A, tol=tol)
    beta = np.abs(fr.beta)
    if floor is None:
        floor = 1e-6 * float(np.mean(np.linalg.norm(fr.D0, axis=1) * np.linalg.norm(A[1] - A[0], axis=1)))
    flat = np.flatnonzero(beta.max(axis=1) <= floor)
    single = np.flatnonzero(beta.min(axis=1) <= floor)
    E = vertex_edges(rho)
    scale = float(np.max(np.linalg.norm(E, axis=2)))
    weak = []
    for v in range(rho.grid.size):
        ok = _rank(E[v], scale) >= 3 and all(
            _rank(E[v][list(c)], scale) == 3 for c in itertools.combinations(range(4), 3)
        )
        if not ok:
            weak.append(v)
    return {"flat_faces": flat.tolist(), "vertex_stars": weak, "degenerate_rays": single.tolist()}


def genericity_perturb(rho: Mesh, s: float, rng_seed: int = 0, floor: float | None = None,
                       max_attempts: int = 100) -> Mesh:
    """Shear the even vertices by s T (T random unit vector, redrawn until the
    mesh is generic). Isotropy is unaffected since diagonals do not change."""
    rng = np.random.default_rng(rng_seed)
    last = None
    for _ in range(max_attempts):
        T = rng.standard_normal(rho.points.shape[1])
        T /= np.linalg.norm(T)
        cand = shear(rho, s * T, np.zeros_like(T))
        defects = genericity_defects(cand, floor)
        if not any(defects.values()):
            return cand
        last = defects
    failed = [k for k, v in last.items() if v]
    raise GenericityFailed(f"conditions still failing after {max_attempts} draws: {failed}")


def immersion_check(tm: TriMesh, rel_tol: float = 1e-8) -> list:
    """Offending points of the piecewise linear map: ('apex', face) when the four
    rays of a pyramid are dependent, ('vertex', v) when two of the eight
    triangles at a base vertex span less than three dimensions (or a triangle
    is degenerate)."""
    grid = tm.grid
    pts = tm.base.points
    A = tm.corners()
    rays = np.stack([a - tm.apex for a in A], axis=1)
    scale = float(np.max(np.linalg.norm(rays, axis=2)))
    bad = []
    for f in range(grid.size):
        if _rank(rays[f], scale, rel_tol) < 4:
            bad.append(("apex", f))
    fv = grid.face_vertices
    vf = grid.vertex_faces
    for v in range(grid.size):
        tri_edges = []
        for p in range(4):
            f = vf[v, p]
            P = tm.apex[f] - pts[v]
            nxt = pts[fv[f, (p + 1) % 4]] - pts[v]
            prv = pts[fv[f, (p + 3) % 4]] - pts[v]
            tri_edges += [np.stack([P, nxt]), np.stack([P, prv])]
        sc = max(scale, float(np.max([np.abs(t).max() for t in tri_edges])))
        ok = all(_rank(t, sc, rel_tol) == 2 for t in tri_edges) and all(
            _rank(np.vstack([a, b]), sc, rel_tol) >= 3
            for a, b in itertools.combinations(tri_edges, 2)
        )
        if not ok:
            bad.append(("vertex", v))
    return bad


def search_immersion(rho: Mesh, s: float, seed: int = 0, rounds: int = 100,
                     nudge: float | None = None):
    """genericity_perturb followed by random admissible apex nudges until
    immersion_check is clean. Returns (trimesh, remaining offenders, rounds used)."""
    rng = np.random.default_rng(seed)
    nudge = 0.01 / rho.grid.N if nudge is None else nudge
    tm = refine(genericity_perturb(rho, s, seed))
    bad = immersion_check(tm)
    used = 0
    while bad and used < rounds:
        faces = set()
        for kind, i in bad:
            if kind == "apex":
                faces.add(i)
            else:
                faces.update(int(f) for f in tm.grid.vertex_faces[i])
        for f in sorted(faces):
            tm = apex_nudge(tm, f, nudge * rng.standard_normal(tm.apex.shape[1]))
        bad = immersion_check(tm)
        used += 1
    return tm, bad, used
