"""Slow reference implementations used as oracles by the tests.

Everything here is written with explicit loops over a square N x N grid
(vertex (k, l) stored at points[k % N, l % N]) and does not call into the
library except where noted. Running this file prints the frozen values used
in tests/frozen.py.
"""

from __future__ import annotations

import itertools

import numpy as np


def omega_ref(a, b) -> float:
    s = 0.0
    for i in range(len(a) // 2):
        s += a[2 * i] * b[2 * i + 1] - a[2 * i + 1] * b[2 * i]
    return s


def J_ref(a):
    out = np.empty(len(a))
    for i in range(len(a) // 2):
        out[2 * i], out[2 * i + 1] = a[2 * i + 1], -a[2 * i]
    return out


def liouville_area(A) -> float:
    """Integral of the Liouville form around the closed polygon A0 A1 A2 A3."""
    return sum(0.5 * omega_ref(A[i], A[(i + 1) % 4]) for i in range(4))


def nearest_even(target):
    """Closest integer vector with even coordinate sum, ties lexicographic."""
    best = None
    cx, cy = int(np.floor(target[0])), int(np.floor(target[1]))
    for a in range(cx - 3, cx + 4):
        for b in range(cy - 3, cy + 4):
            if (a + b) % 2:
                continue
            d = (a - target[0]) ** 2 + (b - target[1]) ** 2
            key = (round(d, 12), a, b)
            if best is None or key < best:
                best = key
    return best[1], best[2]


def square_corners(N, k, l):
    return [((k) % N, (l) % N), ((k + 1) % N, l % N), ((k + 1) % N, (l + 1) % N),
            (k % N, (l + 1) % N)]


def dense_delta(points) -> np.ndarray:
    """Matrix of phi-valued delta: rows faces (k, l) -> k*N + l, columns
    (vertex, coordinate). (delta V)(f) = N^2/2 sum_v g(V(v), D_{v,f})."""
    N, _, d = points.shape
    M = N * N
    mat = np.zeros((M, M * d))
    for k in range(N):
        for l in range(N):
            w = square_corners(N, k, l)
            for p in range(4):
                v = w[p]
                opp = points[w[(p + 3) % 4]] - points[w[(p + 1) % 4]]
                col = (v[0] * N + v[1]) * d
                mat[k * N + l, col:col + d] += 0.5 * N * N * opp
    return mat


def dense_laplacian_ref(points) -> np.ndarray:
    """Delta = delta delta^*; both inner products carry the same N^-2 weight,
    so delta^* is the transpose."""
    D = dense_delta(points)
    return D @ D.T


def dense_gap_ref(points) -> float:
    L = dense_laplacian_ref(points)
    M = L.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([np.ones(M), np.eye(M)[:, : M - 1]]))
    Q = Q[:, 1:]
    return float(np.linalg.eigvalsh(Q.T @ L @ Q).min())


def dense_green_ref(points, psi) -> np.ndarray:
    """Pseudo-inverse solution on the complement of the constants."""
    L = dense_laplacian_ref(points)
    psi = psi - psi.mean()
    return np.linalg.pinv(L, rcond=1e-10) @ psi


def product_torus_points(N, radius=1 / (2 * np.pi)) -> np.ndarray:
    pts = np.zeros((N, N, 4))
    for k in range(N):
        for l in range(N):
            x, y = 2 * np.pi * k / N, 2 * np.pi * l / N
            pts[k, l] = radius * np.array([np.cos(x), np.sin(x), np.cos(y), np.sin(y)])
    return pts


def to_library_order(points) -> np.ndarray:
    """(N, N, d) -> (N*N, d) in the order of the square grid index i*N + j."""
    N = points.shape[0]
    return points.reshape(N * N, -1)


def random_isotropic_quad(rng, n, flat=False):
    """Quad A0..A3 with omega(D0, D1) = 0; flat quads have V in span(D0, D1)."""
    A0 = rng.standard_normal(2 * n)
    D0 = rng.standard_normal(2 * n)
    D1 = rng.standard_normal(2 * n)
    # remove the omega(D0, .) component of D1 along -J D0, where omega(D0, -J D0) = |D0|^2
    D1 = D1 - omega_ref(D0, D1) / (D0 @ D0) * (-J_ref(D0))
    if flat:
        V = rng.standard_normal() * D0 + rng.standard_normal() * D1
    else:
        V = rng.standard_normal(2 * n)
    return A0, A0 + V, A0 + D0, A0 + V + D1


def random_unitary_real(rng, n) -> np.ndarray:
    """Real 2n x 2n form of a random unitary matrix on C^n, z_j = x_j - i y_j
    so that the real matrix commutes with J(x, y) = (y, -x)."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(Z)
    R = np.zeros((2 * n, 2 * n))
    for i, j in itertools.product(range(n), repeat=2):
        a, b = U[i, j].real, U[i, j].imag
        R[2 * i:2 * i + 2, 2 * j:2 * j + 2] = [[a, b], [-b, a]]
    return R


if __name__ == "__main__":
    print("nearest even to (8.24, 1.92):", nearest_even((8.24, 1.92)))
    print("nearest even to (-1.68, 7.84):", nearest_even((-1.68, 7.84)))
    print("dense gap, product torus N=8:", repr(dense_gap_ref(product_torus_points(8))))
    print("theta of the product torus:", repr(1.0))
    print("K + E of the product torus:", repr(4 * np.pi**2))
