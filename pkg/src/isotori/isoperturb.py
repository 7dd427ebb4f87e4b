"""Perturbing a nearly isotropic sample into an exactly isotropic mesh.

Given a sample tau, look for a face function phi with

    mu_r(tau - J delta* phi) = eta + Delta phi + mu_r(J delta* phi) = const,

where eta = mu_r(tau). This is solved by iterating
phi <- -G(eta + mu_r(J delta* phi)) from phi = 0, with G the inverse of Delta
on the orthogonal complement of the constants. The constant is zero because
the total symplectic area of a closed mesh always vanishes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .discrete_ops import _orthonormal, delta_star, laplacian, moment_map, moment_map_r, spectral_gap
from .errors import DegenerateKernel, NoContraction, NoNondegenerateRotation, SolverDiverged
from .immersions import E_U, E_V
from .mesh_core import J, Mesh, check_face_function

log = logging.getLogger(__name__)


@dataclass
class GreenConfig:
    cg_tol: float = 1e-10
    cg_max_iters: int | None = None  # None means 50 * faces
    deflation: list | None = None  # None means the constants
    check_gap: bool = False

    def __post_init__(self):
        if not self.cg_tol > 0:
            raise ValueError("cg_tol must be positive")


@dataclass
class PerturbReport:
    iterations: int
    phi_norm: float  # weak C^{2,alpha} norm of phi
    max_density: float  # max |mu_r(rho)|
    stokes_constant: float  # mean of mu_r(rho), zero up to rounding
    stokes_sum: float  # sum of face areas of rho
    displacement: float  # sup_v |rho(v) - tau(v)|
    increments: list = field(default_factory=list)
    cg_iterations: list = field(default_factory=list)


def error_term(tau: Mesh) -> np.ndarray:
    """Defect eta = mu_r(tau) of a sample."""
    return moment_map_r(tau)


def _deflation_basis(grid, cfg: GreenConfig):
    vecs = [np.ones(grid.size)] if cfg.deflation is None else list(cfg.deflation)
    return _orthonormal(vecs, grid.size)


def green_apply(tau: Mesh, psi, cfg: GreenConfig | None = None, x0=None, info: dict | None = None):
    """phi orthogonal to the deflation space with Delta phi = projected psi.

    Conjugate gradients on the projected operator P Delta P; every iterate is
    re-projected to keep rounding drift out of the kernel.
    """
    cfg = GreenConfig() if cfg is None else cfg
    psi = check_face_function(tau.grid, psi)
    M = tau.grid.size
    Y = _deflation_basis(tau.grid, cfg)

    def proj(x):
        return x - Y @ (Y.T @ x)

    if cfg.check_gap:
        gap = spectral_gap(tau, [Y[:, i] for i in range(Y.shape[1])])
        if gap < 1e-12:
            raise DegenerateKernel(f"spectral gap {gap:.3e} is too small")

    b = proj(psi)
    bnorm = np.linalg.norm(b)
    # what survives the projection of a kernel element is rounding noise
    if bnorm <= 64 * np.finfo(float).eps * np.linalg.norm(psi):
        return np.zeros(M)
    max_iters = 50 * M if cfg.cg_max_iters is None else cfg.cg_max_iters
    x = np.zeros(M) if x0 is None else proj(np.asarray(x0, dtype=float))
    r = b - proj(laplacian(tau, x))
    p = r.copy()
    rr = r @ r
    it = 0
    while np.sqrt(rr) > cfg.cg_tol * bnorm:
        if it >= max_iters:
            raise SolverDiverged(
                f"CG stopped after {it} iterations, residual {np.sqrt(rr) / bnorm:.3e}"
            )
        Ap = proj(laplacian(tau, p))
        pAp = p @ Ap
        if pAp <= 0.0:
            raise DegenerateKernel("Laplacian is singular on the deflated space")
        alpha = rr / pAp
        x = proj(x + alpha * p)
        r = proj(r - alpha * Ap)
        rr_new = r @ r
        p = proj(r + (rr_new / rr) * p)
        rr = rr_new
        it += 1
        if it % 50 == 0:
            # guard against drift of the recursive residual
            r = b - proj(laplacian(tau, x))
            rr = r @ r
    if info is not None:
        info["iterations"] = it
    return x


def quadratic_term(tau: Mesh, phi) -> np.ndarray:
    """mu_r of the vertex field J delta* phi regarded as a mesh."""
    W = J(delta_star(tau, phi))
    return moment_map_r(Mesh(tau.grid, W))


def perturbation_map(tau: Mesh, phi, eta=None, cfg=None, x0=None, info=None):
    """One application of phi -> -G(eta + mu_r(J delta* phi))."""
    eta = error_term(tau) if eta is None else eta
    return -green_apply(tau, eta + quadratic_term(tau, phi), cfg, x0=x0, info=info)


def perturbed_mesh(tau: Mesh, phi) -> Mesh:
    """rho = tau - J delta* phi."""
    return Mesh(tau.grid, tau.points - J(delta_star(tau, phi)))


def fixed_point_solve(tau: Mesh, green_cfg: GreenConfig | None = None, fp_tol: float = 1e-12,
                      fp_max_iters: int = 200, holder_alpha: float = 0.5):
    """Iterate the perturbation map from phi = 0. Returns (phi, rho, report)."""
    from .analysis_norms import weak_holder_norm

    green_cfg = GreenConfig() if green_cfg is None else green_cfg
    eta = error_term(tau)
    phi = np.zeros(tau.grid.size)
    increments, cg_its = [], []
    prev_inc = None
    it = 0
    for it in range(1, fp_max_iters + 1):
        info = {}
        new = perturbation_map(tau, phi, eta, green_cfg, x0=phi, info=info)
        cg_its.append(info.get("iterations", 0))
        inc = float(np.max(np.abs(new - phi)))
        increments.append(inc)
        phi = new
        if not np.all(np.isfinite(phi)):
            raise NoContraction("iterates became non-finite")
        if prev_inc is not None and prev_inc > 0 and inc > 10 * prev_inc and inc > fp_tol:
            raise NoContraction(f"increment grew from {prev_inc:.3e} to {inc:.3e}")
        prev_inc = inc
        if inc <= fp_tol:
            break
    else:
        log.warning("fixed point iteration hit the cap of %d iterations", fp_max_iters)
    rho = perturbed_mesh(tau, phi)
    mu_rho = moment_map_r(rho)
    n_exact = tau.grid.size <= 4096
    report = PerturbReport(
        iterations=it,
        phi_norm=weak_holder_norm(tau.grid, phi, 2, holder_alpha, exact=n_exact).weak,
        max_density=float(np.max(np.abs(mu_rho))),
        stokes_constant=float(np.mean(mu_rho)),
        stokes_sum=float(np.sum(moment_map(rho))),
        displacement=float(np.max(np.linalg.norm(rho.points - tau.points, axis=1))),
        increments=increments,
        cg_iterations=cg_its,
    )
    return phi, rho, report


# degeneracy of the limit operator

def _fundamental_samples(imm, sample_count: int):
    s = int(max(2, np.ceil(np.sqrt(sample_count))))
    t = (np.arange(s) + 0.5) / s
    a, b = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()]) @ imm.lattice.matrix.T


def energy_density(imm, P) -> np.ndarray:
    """E = 2 |(d^2 l / du dv)^perp|^2 at the points P (perp to the tangent plane)."""
    lu = imm.derivative(P, [E_U])
    lv = imm.derivative(P, [E_V])
    luv = imm.derivative(P, [E_U, E_V])
    T = np.stack([lu, lv], axis=-1)  # (..., 2n, 2)
    coef = np.linalg.solve(np.swapaxes(T, -1, -2) @ T, np.swapaxes(T, -1, -2) @ luv[..., None])
    perp = luv - (T @ coef)[..., 0]
    return 2.0 * np.sum(perp**2, axis=-1)


def second_derivative_scale(imm, P) -> float:
    lu_u = imm.derivative(P, [E_U, E_U])
    lv_v = imm.derivative(P, [E_V, E_V])
    luv = imm.derivative(P, [E_U, E_V])
    return float(np.max(np.sum(lu_u**2 + lv_v**2 + luv**2, axis=-1)))


def degeneracy_scan(imm, sample_count: int = 256) -> float:
    """Maximum of E over a grid of points in a fundamental domain."""
    P = _fundamental_samples(imm, sample_count)
    return float(np.max(energy_density(imm, P)))


def is_degenerate(imm, sample_count: int = 256, rel_tol: float = 1e-10) -> bool:
    P = _fundamental_samples(imm, sample_count)
    scale2 = second_derivative_scale(imm, P)
    return degeneracy_scan(imm, sample_count) < rel_tol * max(scale2, 1e-300)


def rotate_cover(imm, angle: float):
    """Precompose the immersion with a rotation of the plane."""
    return imm.rotate(angle)


def remove_degeneracy(imm, sample_count: int = 256):
    """Return (immersion, angle): the input if nondegenerate, else the first
    rotation k pi/16 (k = 1..15) that is."""
    if not is_degenerate(imm, sample_count):
        return imm, 0.0
    for k in range(1, 16):
        angle = k * np.pi / 16
        cand = rotate_cover(imm, angle)
        if not is_degenerate(cand, sample_count):
            return cand, angle
    raise NoNondegenerateRotation("every scanned rotation is degenerate")
