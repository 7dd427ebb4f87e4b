"""Finite differences on the checkers components, weak Hoelder norms, the
continuum limit of the discrete Laplacian, and convergence studies.

Directions: u = (x + y)/sqrt2 and v = (y - x)/sqrt2 in the grid plane, so one
diagonal step of a face is T_u: (k, l) -> (k+1, l+1), T_v: (k, l) -> (k-1, l+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discrete_ops import laplacian, moment_map_r, stencil_parts
from .errors import TooLargeForExact
from .immersions import E_U, E_V, fd_directional
from .lattice_grid import QuadGrid, approximate_lattice, build_grid
from .mesh_core import SQRT2, check_face_function, diagonals, grid_to_plane, sample_face_function, sample_immersion

_SHIFTS = {"u": (1, 1), "v": (-1, 1)}


def finite_diff(grid: QuadGrid, phi, direction: str) -> np.ndarray:
    """One of u_fwd, u_back, v_fwd, v_back (N/sqrt2 times a diagonal difference)."""
    phi = check_face_function(grid, phi)
    axis, _, kind = direction.partition("_")
    if axis not in _SHIFTS or kind not in ("fwd", "back"):
        raise ValueError(f"unknown direction {direction!r}")
    dk, dl = _SHIFTS[axis]
    s = grid.N / SQRT2
    if kind == "fwd":
        return s * (phi[grid.shift(dk, dl)] - phi)
    return s * (phi - phi[grid.shift(-dk, -dl)])


def difference_family(grid: QuadGrid, phi, k: int) -> list:
    """The difference quotients entering the C^k norms, orders 0..k.

    Order 1: forward u and v. Order 2: backward-forward in u, in v, and the
    forward mixed difference. Backward differences are translates of forward
    ones and so have the same norms.
    """
    out = [np.asarray(phi, dtype=float)]
    if k >= 1:
        du = finite_diff(grid, phi, "u_fwd")
        dv = finite_diff(grid, phi, "v_fwd")
        out += [du, dv]
    if k >= 2:
        out += [
            finite_diff(grid, du, "u_back"),
            finite_diff(grid, dv, "v_back"),
            finite_diff(grid, du, "v_fwd"),
        ]
    if k > 2:
        raise ValueError("k must be 0, 1 or 2")
    return out


@dataclass
class NormValue:
    k: int
    alpha: float
    c0: tuple  # (plus, minus) sup norms of phi
    ck: tuple  # (plus, minus) C^k norms
    holder: tuple  # (plus, minus) summed Hoelder seminorms
    plus: float
    minus: float
    exact: bool
    pairs: int = 0

    @property
    def weak(self) -> float:
        return self.plus + self.minus

    def as_dict(self) -> dict:
        return {
            "k": self.k, "alpha": self.alpha, "c0": list(self.c0), "ck": list(self.ck),
            "holder": list(self.holder), "plus": self.plus, "minus": self.minus,
            "weak": self.weak, "exact": self.exact, "pairs": self.pairs,
        }


def _torus_distance(grid: QuadGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance between plane points, minimized over the 9 nearby deck translates."""
    periods = grid.L.T / grid.N
    diff = a - b
    best = None
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            d = np.linalg.norm(diff + i * periods[0] + j * periods[1], axis=-1)
            best = d if best is None else np.minimum(best, d)
    return best


def _holder_seminorm(grid, values, centers, alpha, exact, rng, pairs=100_000, chunk=512):
    m = len(values)
    if m < 2:
        return 0.0, 0
    if exact:
        best = 0.0
        for s in range(0, m, chunk):
            a = slice(s, min(m, s + chunk))
            d = _torus_distance(grid, centers[a, None, :], centers[None, :, :])
            dv = np.abs(values[a, None] - values[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(d > 0, dv / d**alpha, 0.0)
            best = max(best, float(q.max()))
        return best, m * (m - 1) // 2
    i = rng.integers(0, m, pairs)
    j = rng.integers(0, m, pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    d = _torus_distance(grid, centers[i], centers[j])
    q = np.abs(values[i] - values[j]) / d**alpha
    return float(q.max()) if len(q) else 0.0, int(len(q))


def weak_holder_norm(grid: QuadGrid, phi, k: int = 0, alpha: float = 0.5,
                     exact: bool = True, seed: int = 0) -> NormValue:
    """Weak C^{k,alpha} norm: the sum over the two checkers components of the
    component-wise norms (sup plus Hoelder quotient of every difference up to
    order k)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    phi = check_face_function(grid, phi)
    if exact and grid.size > 4096:
        raise TooLargeForExact(f"{grid.size} faces; use exact=False")
    rng = np.random.default_rng(seed)
    centers = grid.face_centers()
    family = difference_family(grid, phi, k)
    c0, ck, hold, totals = [], [], [], []
    npairs = 0
    for comp in (0, 1):
        mask = grid.parity == comp
        sup = float(np.max(np.abs(phi[mask]))) if mask.any() else 0.0
        ck_c, h_c = 0.0, 0.0
        for vals in family:
            ck_c += float(np.max(np.abs(vals[mask]))) if mask.any() else 0.0
            h, npairs_c = _holder_seminorm(grid, vals[mask], centers[mask], alpha, exact, rng)
            h_c += h
            npairs += npairs_c
        c0.append(sup)
        ck.append(ck_c)
        hold.append(h_c)
        totals.append(ck_c + h_c)
    return NormValue(k, alpha, tuple(c0), tuple(ck), tuple(hold), totals[0], totals[1], exact, npairs)


def comb(grid: QuadGrid) -> np.ndarray:
    """+1 on the + component, -1 on the - component."""
    return np.where(grid.parity == 0, 1.0, -1.0)


# continuum limit of the Laplacian

class ScalarField:
    """A smooth plane function with directional derivatives (finite differences
    by default)."""

    def __init__(self, fun, derivative=None, h: float = 1e-3):
        self.fun = fun
        self._derivative = derivative
        self.h = h

    def __call__(self, P):
        return np.asarray(self.fun(np.asarray(P, dtype=float)), dtype=float)

    def derivative(self, P, dirs):
        if self._derivative is not None:
            return self._derivative(P, dirs)
        return fd_directional(self, P, dirs, self.h)


def as_field(phi) -> ScalarField:
    return phi if isinstance(phi, ScalarField) else ScalarField(phi)


def trig_field(a: float = 1.0, wave=(1, 0), phase: float = 0.0, const: float = 0.0,
               lattice=None) -> ScalarField:
    """const + a cos(2 pi <wave, A p> + phase) with exact derivatives.

    A is the inverse of the period matrix of `lattice` (identity if None), so
    the field is periodic for that lattice.
    """
    A = np.eye(2) if lattice is None else np.linalg.inv(lattice.matrix)
    w = 2 * np.pi * (np.asarray(wave, dtype=float) @ A)

    def f(P):
        return const + a * np.cos(np.asarray(P) @ w + phase)

    def d(P, dirs):
        m = len(dirs)
        fac = np.prod([w @ np.asarray(x) for x in dirs]) if dirs else 1.0
        val = a * fac * np.cos(np.asarray(P) @ w + phase + m * np.pi / 2)
        return val + (const if m == 0 else 0.0)

    return ScalarField(f, d)


def conformal_factor(imm, P) -> np.ndarray:
    lu = imm.derivative(P, [E_U])
    return np.sum(lu * lu, axis=-1)


def curvature_plus_energy(imm, P) -> np.ndarray:
    """K + E from third derivatives: -g(l_uuv, l_v) - g(l_vvu, l_u)."""
    lu = imm.derivative(P, [E_U])
    lv = imm.derivative(P, [E_V])
    luuv = imm.derivative(P, [E_U, E_U, E_V])
    lvvu = imm.derivative(P, [E_V, E_V, E_U])
    return -np.sum(luuv * lv, axis=-1) - np.sum(lvvu * lu, axis=-1)


def gauss_curvature(imm, P, h: float = 1e-3) -> np.ndarray:
    """K = -(1/2 theta) (d_uu + d_vv) log theta for the conformal metric theta g_flat."""
    logt = lambda Q: np.log(conformal_factor(imm, Q))
    lap = fd_directional(logt, P, [E_U, E_U], h) + fd_directional(logt, P, [E_V, E_V], h)
    return -lap / (2 * conformal_factor(imm, P))


def xi_apply(imm, phi_plus, phi_minus, P):
    """Limit operator on a pair of smooth functions, evaluated at points P.

    Returns (xi_plus, xi_minus) with
    xi_plus = theta Lap phi+ - g(d phi+, d theta) + (K + E)(phi+ - phi-),
    Lap = -(d_uu + d_vv), and symmetrically for xi_minus.
    """
    P = np.asarray(P, dtype=float)
    fp, fm = as_field(phi_plus), as_field(phi_minus)
    lu = imm.derivative(P, [E_U])
    theta = np.sum(lu * lu, axis=-1)
    theta_u = 2 * np.sum(imm.derivative(P, [E_U, E_U]) * lu, axis=-1)
    theta_v = 2 * np.sum(imm.derivative(P, [E_U, E_V]) * lu, axis=-1)
    ke = curvature_plus_energy(imm, P)

    def one(f):
        lap = -(f.derivative(P, [E_U, E_U]) + f.derivative(P, [E_V, E_V]))
        grad = f.derivative(P, [E_U]) * theta_u + f.derivative(P, [E_V]) * theta_v
        return theta * lap - grad, f(P)

    a, va = one(fp)
    b, vb = one(fm)
    return a + ke * (va - vb), b + ke * (vb - va)


def grid_for(imm, N: int):
    return build_grid(approximate_lattice(imm.lattice, N), N)


def split_sample(imm, grid, phi_plus, phi_minus=None) -> np.ndarray:
    """Face-center samples of phi+ on + faces and phi- on - faces."""
    phi_minus = phi_plus if phi_minus is None else phi_minus
    a = sample_face_function(phi_plus, imm, grid)
    b = sample_face_function(phi_minus, imm, grid)
    return np.where(grid.parity == 0, a, b)


def limit_residual(imm, phi, N: int, phi_minus=None) -> float:
    """sup |Delta phi_N - samples of the limit operator| on the grid of size N.

    With phi_minus given, the two checkers components carry different
    functions, which exercises the coupling term (K + E)(phi+ - phi-).
    """
    grid = grid_for(imm, N)
    tau = sample_immersion(imm, grid)
    fp = as_field(phi)
    fm = fp if phi_minus is None else as_field(phi_minus)
    phi_N = split_sample(imm, grid, fp, fm)
    P = grid.face_centers() @ grid_to_plane(imm, grid).T
    xp, xm = xi_apply(imm, fp, fm, P)
    target = np.where(grid.parity == 0, xp, xm)
    return float(np.max(np.abs(laplacian(tau, phi_N) - target)))


def kappa_error(imm, N: int) -> float:
    """sup |kappa_N - (K + E)| at the face centers."""
    grid = grid_for(imm, N)
    tau = sample_immersion(imm, grid)
    kappa = stencil_parts(tau, np.zeros(grid.size))[4]
    P = grid.face_centers() @ grid_to_plane(imm, grid).T
    return float(np.max(np.abs(kappa - curvature_plus_energy(imm, P))))


def loglog_slope(Ns, values) -> float:
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(Ns), np.log(values), 1)[0])


@dataclass
class StudyTable:
    case: str
    rows: list = field(default_factory=list)  # (N, value)
    slope: float = float("nan")

    def to_csv(self) -> str:
        lines = ["N,value"] + [f"{N},{v!r}" for N, v in self.rows]
        return "\n".join(lines) + "\n"


def sample_error(imm, N: int) -> float:
    """sup_f |U(f) - d l/du| at the face centers (direction pushed to the
    immersion plane like the samples)."""
    grid = grid_for(imm, N)
    tau = sample_immersion(imm, grid)
    Umap = grid_to_plane(imm, grid)
    U, _ = diagonals(tau, renormalized=True)
    P = grid.face_centers() @ Umap.T
    exact = imm.derivative(P, [Umap @ E_U])
    return float(np.max(np.linalg.norm(U - exact, axis=1)))


def eta_norm(imm, N: int) -> float:
    grid = grid_for(imm, N)
    return float(np.max(np.abs(moment_map_r(sample_immersion(imm, grid)))))


def fixed_point_distance(imm, N: int) -> float:
    from .isoperturb import fixed_point_solve

    grid = grid_for(imm, N)
    tau = sample_immersion(imm, grid)
    _, rho, _ = fixed_point_solve(tau)
    return float(np.max(np.linalg.norm(rho.points - tau.points, axis=1)))


def pl_sup_error(imm, N: int, probes_per_cell: int = 5) -> float:
    from .isoperturb import fixed_point_solve
    from .pyramid_refine import pl_eval_many, refine

    grid = grid_for(imm, N)
    tau = sample_immersion(imm, grid)
    _, rho, _ = fixed_point_solve(tau)
    tm = refine(rho)
    s = probes_per_cell * N
    t = (np.arange(s) + 0.37) / s
    a, b = np.meshgrid(t, t, indexing="ij")
    # probe points in the fundamental domain spanned by the columns of L/N
    Q = np.column_stack([a.ravel(), b.ravel()]) @ (grid.L / grid.N).T
    approx = pl_eval_many(tm, Q)
    exact = imm(Q @ grid_to_plane(imm, grid).T)
    return float(np.max(np.linalg.norm(approx - exact, axis=1)))


STUDY_CASES = {
    "sample-error": sample_error,
    "eta-norm": eta_norm,
    "fixed-point-distance": fixed_point_distance,
    "limit-residual": None,
    "kappa-error": kappa_error,
    "pl-sup-error": pl_sup_error,
}


def convergence_study(case: str, N_list, imm, phi=None, phi_minus=None) -> StudyTable:
    """Evaluate one quantity for each N and fit the log-log slope."""
    N_list = [int(N) for N in N_list]
    if len(N_list) < 3 or sorted(N_list) != N_list:
        raise ValueError("need at least three ascending resolutions")
    if case not in STUDY_CASES:
        raise ValueError(f"unknown study case {case!r}")
    if case == "limit-residual":
        phi = trig_field(1.0, (1, 1), lattice=imm.lattice) if phi is None else phi
        fun = lambda m, N: limit_residual(m, phi, N, phi_minus)
    else:
        fun = STUDY_CASES[case]
    table = StudyTable(case)
    for N in N_list:
        table.rows.append((N, fun(imm, N)))
    table.slope = loglog_slope([r[0] for r in table.rows], [r[1] for r in table.rows])
    return table
