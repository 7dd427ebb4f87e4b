"""Meshes on a quad grid, diagonals, inner products and the shear action.

Points of R^{2n} use canonical coordinates (x1, y1, ..., xn, yn) with
omega(a, b) = sum_i a_xi b_yi - a_yi b_xi and J(x1, y1, ...) = (y1, -x1, ...),
so that omega(a, b) = g(a, Ja). With this orientation of J the map
tau -> J delta* mu is minus the gradient of the squared density (see
discrete_ops), which is what the flow and the perturbation scheme rely on.

Face functions are 1-d arrays indexed like the grid faces; vertex fields are
(size, 2n) arrays indexed like the grid vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NonFinite, PeriodicityViolation
from .lattice_grid import QuadGrid

SQRT2 = np.sqrt(2.0)


def omega(a, b):
    """Standard symplectic form, broadcast over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.sum(a[..., 0::2] * b[..., 1::2] - a[..., 1::2] * b[..., 0::2], axis=-1)


def J(a):
    """Complex structure (x, y) -> (y, -x) in every symplectic plane."""
    a = np.asarray(a)
    out = np.empty_like(a)
    out[..., 0::2] = a[..., 1::2]
    out[..., 1::2] = -a[..., 0::2]
    return out


@dataclass(frozen=True, eq=False)
class Mesh:
    """One point of R^{2n} per grid vertex."""

    grid: QuadGrid
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != self.grid.size:
            raise GridMismatch(
                f"expected {self.grid.size} points, got array of shape {pts.shape}"
            )
        if pts.shape[1] < 4 or pts.shape[1] % 2:
            raise ValueError(f"points must live in R^(2n) with n >= 2, got dim {pts.shape[1]}")
        if not np.all(np.isfinite(pts)):
            raise NonFinite("mesh contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[1] // 2

    @property
    def N(self) -> int:
        return self.grid.N

    def with_points(self, points) -> "Mesh":
        return Mesh(self.grid, points)

    def __add__(self, field) -> "Mesh":
        return Mesh(self.grid, self.points + check_vertex_field(self.grid, field, self.n))


def check_face_function(grid: QuadGrid, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.size,):
        raise GridMismatch(f"face function of shape {phi.shape}, grid has {grid.size} faces")
    return phi


def check_vertex_field(grid: QuadGrid, V, n: int | None = None) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != grid.size or (n is not None and V.shape[1] != 2 * n):
        raise GridMismatch(f"vertex field of shape {V.shape} does not fit the grid")
    return V


def check_same_grid(a: Mesh, b: Mesh):
    if not a.grid.same_as(b.grid) or a.n != b.n:
        raise GridMismatch("meshes live on different grids")


def diagonals(mesh: Mesh, face=None, renormalized: bool = False):
    """Diagonals (Du, Dv) of every face, or of one face if `face` is given.

    Du = tau(v_{k+1,l+1}) - tau(v_kl), Dv = tau(v_{k,l+1}) - tau(v_{k+1,l}).
    With renormalized=True the pair (U, V) = (N/sqrt2) (Du, Dv) is returned.
    """
    fv = mesh.grid.face_vertices
    if face is not None:
        fv = fv[int(face)][None, :]
    p = mesh.points
    du = p[fv[:, 2]] - p[fv[:, 0]]
    dv = p[fv[:, 3]] - p[fv[:, 1]]
    if renormalized:
        s = mesh.N / SQRT2
        du, dv = s * du, s * dv
    if face is not None:
        return du[0], dv[0]
    return du, dv


def opposite_diagonals(mesh: Mesh) -> np.ndarray:
    """(size, 4, 2n) array: entry [f, p] is tau(w3) - tau(w1) for the cyclic
    relabelling of face f starting at its p-th vertex."""
    fv = mesh.grid.face_vertices
    p = mesh.points
    out = np.empty((fv.shape[0], 4, p.shape[1]))
    for pos in range(4):
        out[:, pos] = p[fv[:, (pos + 3) % 4]] - p[fv[:, (pos + 1) % 4]]
    return out


def opposite_diagonal(mesh: Mesh, vertex, face) -> np.ndarray:
    """Diagonal of `face` opposite to `vertex`; zero when the vertex is not a corner.

    On very coarse grids a vertex can occur several times in one face; the
    contributions of all occurrences are added.
    """
    corners = mesh.grid.face_vertices[int(face)]
    p = mesh.points
    out = np.zeros(p.shape[1])
    for pos in range(4):
        if corners[pos] == int(vertex):
            out += p[corners[(pos + 3) % 4]] - p[corners[(pos + 1) % 4]]
    return out


def shear(mesh: Mesh, t_plus, t_minus) -> Mesh:
    """Translate even-parity vertices by t_plus and odd-parity ones by t_minus."""
    t_plus = np.asarray(t_plus, dtype=float)
    t_minus = np.asarray(t_minus, dtype=float)
    shift = np.where(mesh.grid.parity[:, None] == 0, t_plus[None, :], t_minus[None, :])
    return Mesh(mesh.grid, mesh.points + shift)


def face_inner(grid: QuadGrid, phi, psi) -> float:
    """Discrete L2 product N^-2 sum_f phi(f) psi(f)."""
    phi = check_face_function(grid, phi)
    psi = check_face_function(grid, psi)
    return float(phi @ psi) / grid.N**2


def vertex_inner(grid: QuadGrid, V, W) -> float:
    """Discrete L2 product N^-2 sum_v g(V(v), W(v))."""
    V = check_vertex_field(grid, V)
    W = check_vertex_field(grid, W)
    if V.shape != W.shape:
        raise GridMismatch("vertex fields of different dimensions")
    return float(np.sum(V * W)) / grid.N**2


def face_norm(grid: QuadGrid, phi) -> float:
    return np.sqrt(face_inner(grid, phi, phi))


def ones(grid: QuadGrid) -> np.ndarray:
    return np.ones(grid.size)


def indicator(grid: QuadGrid, face) -> np.ndarray:
    e = np.zeros(grid.size)
    e[int(face)] = 1.0
    return e


def sample_immersion(imm, grid: QuadGrid, check_periodicity: bool = True) -> Mesh:
    """Evaluate an immersion at the vertices of the grid.

    Plane points of the grid are pushed through the linear map sending the
    approximate periods L/N onto the exact periods of the immersion, so the
    sample is periodic even when the period lattice is not rational.
    """
    if check_periodicity:
        imm.check_periodic()
    U = grid_to_plane(imm, grid)
    pts = imm(grid.plane_points() @ U.T)
    return Mesh(grid, pts)


def grid_to_plane(imm, grid: QuadGrid) -> np.ndarray:
    """Linear map from grid plane coordinates to the immersion's plane,
    taking each column of L/N to the matching period generator."""
    return imm.lattice.matrix @ np.linalg.inv(grid.L / grid.N)


def sample_face_function(fun, imm, grid: QuadGrid) -> np.ndarray:
    """Values of a plane function at the face centers (mapped like the vertices)."""
    U = grid_to_plane(imm, grid)
    return np.asarray(fun(grid.face_centers() @ U.T), dtype=float)


def check_periodic_points(fun, lattice, points, tol: float = 1e-9):
    """Raise PeriodicityViolation unless fun(p + gamma) = fun(p) at the points."""
    base = fun(points)
    scale = max(1.0, float(np.max(np.abs(base))))
    for g in (lattice.gamma1, lattice.gamma2):
        err = float(np.max(np.abs(fun(points + g) - base)))
        if err > tol * scale:
            raise PeriodicityViolation(f"period {g.tolist()} violated by {err:.3e}")
