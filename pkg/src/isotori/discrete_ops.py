"""Symplectic density of quad meshes and the operators built from it.

Conventions: a face function is an array with one value per face, a vertex
field an array of shape (faces, 2n). For a face f with corners (w0, .., w3)
the diagonal opposite to w_p is tau(w_{p+3}) - tau(w_{p+1}).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverDiverged
from .lattice_grid import CORNERS
from .mesh_core import (
    Mesh,
    check_face_function,
    check_same_grid,
    check_vertex_field,
    diagonals,
    omega,
    opposite_diagonals,
)


def moment_map(mesh: Mesh) -> np.ndarray:
    """Symplectic area 1/2 omega(Du, Dv) of every face."""
    du, dv = diagonals(mesh)
    return 0.5 * omega(du, dv)


def moment_map_r(mesh: Mesh) -> np.ndarray:
    """Renormalized density omega(U, V) = N^2 times the face area."""
    U, V = diagonals(mesh, renormalized=True)
    return omega(U, V)


def bilinear_r(tau: Mesh, tau2: Mesh) -> np.ndarray:
    """Symmetric bilinear form whose diagonal is moment_map_r:
    (omega(U, V') + omega(U', V)) / 2, so that
    mu_r(tau + tau') = mu_r(tau) + 2 Psi(tau, tau') + mu_r(tau')."""
    check_same_grid(tau, tau2)
    U1, V1 = diagonals(tau, renormalized=True)
    U2, V2 = diagonals(tau2, renormalized=True)
    return 0.5 * (omega(U1, V2) + omega(U2, V1))


def delta(tau: Mesh, V) -> np.ndarray:
    """(delta V)(f) = N^2/2 sum over corners v of g(V(v), D_{v,f})."""
    V = check_vertex_field(tau.grid, V, tau.n)
    fv = tau.grid.face_vertices
    D = opposite_diagonals(tau)
    out = np.einsum("fpi,fpi->f", V[fv], D)
    return 0.5 * tau.N**2 * out


def delta_star(tau: Mesh, phi) -> np.ndarray:
    """(delta* phi)(v) = N^2/2 sum over faces f around v of phi(f) D_{v,f}."""
    phi = check_face_function(tau.grid, phi)
    vf = tau.grid.vertex_faces
    D = opposite_diagonals(tau)
    # vertex v sits at position p of face vf[v, p]
    out = sum(phi[vf[:, p], None] * D[vf[:, p], p] for p in range(4))
    return 0.5 * tau.N**2 * out


def laplacian(tau: Mesh, phi) -> np.ndarray:
    """Delta phi = delta(delta* phi)."""
    return delta(tau, delta_star(tau, phi))


def _stencil_entries(tau: Mesh):
    """Rows, columns, offsets and values of the 9-point stencil of Delta.

    The coefficient of phi(f) in (Delta phi)(f2) is N^4/4 times the sum of
    g(D_{v,f}, D_{v,f2}) over shared corners v.
    """
    grid = tau.grid
    D = opposite_diagonals(tau)
    c = 0.25 * tau.N**4
    rows, cols, offs, vals = [], [], [], []
    f2 = np.arange(grid.size)
    for p2 in range(4):
        for q in range(4):
            dk, dl = (CORNERS[p2] - CORNERS[q]).tolist()
            f = grid.shift(dk, dl)
            rows.append(f2)
            cols.append(f)
            offs.append(np.full(grid.size, (dk + dl) % 2, dtype=np.int8))
            vals.append(c * np.einsum("fi,fi->f", D[f, q], D[f2, p2]))
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(offs),
            np.concatenate(vals))


def laplacian_matrix(tau: Mesh, part: str = "full") -> sp.csr_matrix:
    """Sparse matrix of Delta from its stencil; part in {full, E, I}.

    E keeps the self and diagonal-neighbour couplings (same checkers
    component), I the edge-neighbour couplings (opposite component).
    """
    rows, cols, odd, vals = _stencil_entries(tau)
    if part == "E":
        keep = odd == 0
    elif part == "I":
        keep = odd == 1
    elif part == "full":
        keep = slice(None)
    else:
        raise ValueError(f"unknown stencil part {part!r}")
    M = tau.grid.size
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(M, M))


def laplacian_stencil(tau: Mesh, phi) -> np.ndarray:
    """Delta phi evaluated from the explicit stencil (cross-check path)."""
    phi = check_face_function(tau.grid, phi)
    return laplacian_matrix(tau) @ phi


def second_diag_diff(grid, X, direction: str) -> np.ndarray:
    """N^2/2 (X o T - 2X + X o T^-1) with T the (1,1) shift for 'u', (-1,1) for 'v'."""
    if direction == "u":
        fwd, back = grid.shift(1, 1), grid.shift(-1, -1)
    elif direction == "v":
        fwd, back = grid.shift(-1, 1), grid.shift(1, -1)
    else:
        raise ValueError("direction must be 'u' or 'v'")
    return 0.5 * grid.N**2 * (X[fwd] - 2 * X + X[back])


def stencil_parts(tau: Mesh, phi):
    """(Delta^E phi, Delta^I phi, theta_u, theta_v, kappa)."""
    phi = check_face_function(tau.grid, phi)
    dE = laplacian_matrix(tau, "E") @ phi
    dI = laplacian_matrix(tau, "I") @ phi
    U, V = diagonals(tau, renormalized=True)
    theta_u = np.einsum("fi,fi->f", U, U)
    theta_v = np.einsum("fi,fi->f", V, V)
    g = tau.grid
    kappa = -np.einsum("fi,fi->f", second_diag_diff(g, V, "u"), V) - np.einsum(
        "fi,fi->f", second_diag_diff(g, U, "v"), U
    )
    return dE, dI, theta_u, theta_v, kappa


def _orthonormal(vectors, M):
    if not vectors:
        return np.zeros((M, 0))
    Q, R = np.linalg.qr(np.column_stack([np.asarray(v, dtype=float) for v in vectors]))
    keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(R).max())
    return Q[:, keep]


def spectral_gap(tau: Mesh, deflate=None, tol: float = 1e-8, max_iters: int | None = None) -> float:
    """Smallest Rayleigh quotient of Delta on the complement of `deflate`.

    LOBPCG with the deflation vectors as hard constraints, preconditioned by
    a sparse factorization of the shifted stencil matrix. The Rayleigh
    quotient is the same for face_inner and the Euclidean product.
    """
    M = tau.grid.size
    if deflate is None:
        deflate = [np.ones(M)]
    Y = _orthonormal(deflate, M)
    max_iters = 10 * M if max_iters is None else max_iters
    A = laplacian_matrix(tau).tocsc()
    scale = float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
    if scale == 0.0:
        return 0.0
    if M - Y.shape[1] <= 8:
        return _dense_gap(tau, Y)

    op = spla.LinearOperator((M, M), matvec=lambda x: laplacian(tau, np.ravel(x)), dtype=float)
    shift = 1e-6 * scale
    lu = spla.splu((A + shift * sp.identity(M, format="csc")).tocsc())
    prec = spla.LinearOperator((M, M), matvec=lu.solve, dtype=float)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((M, 3))
    X -= Y @ (Y.T @ X)
    vals, vecs = spla.lobpcg(op, X, M=prec, Y=Y, tol=tol * 1e-2, maxiter=max_iters,
                             largest=False)
    i = int(np.argmin(vals))
    lam, x = float(vals[i]), vecs[:, i]
    res = np.linalg.norm(laplacian(tau, x) - lam * x) / np.linalg.norm(x)
    if not np.isfinite(lam) or res > max(1e-10 * scale, tol * abs(lam)):
        raise SolverDiverged(f"eigensolver stalled, residual {res:.3e} at eigenvalue {lam:.6g}")
    return lam


def dense_laplacian(tau: Mesh) -> np.ndarray:
    """Dense matrix of Delta obtained by applying delta o delta* to unit vectors."""
    M = tau.grid.size
    return np.column_stack([laplacian(tau, e) for e in np.eye(M)])


def _dense_gap(tau: Mesh, Y) -> float:
    M = tau.grid.size
    A = dense_laplacian(tau)
    # basis of the complement
    Q, _ = np.linalg.qr(np.column_stack([Y, np.eye(M)]))
    C = Q[:, Y.shape[1]:M]
    w = np.linalg.eigvalsh(C.T @ A @ C)
    return float(w[0])


def dense_spectral_gap(tau: Mesh, deflate=None) -> float:
    """Reference gap from a full symmetric eigendecomposition (small grids)."""
    M = tau.grid.size
    Y = _orthonormal([np.ones(M)] if deflate is None else deflate, M)
    return _dense_gap(tau, Y)
