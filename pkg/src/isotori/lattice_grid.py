"""Quadrangulations of a torus as quotients of the integer grid.

A grid is the square lattice Z^2 (vertex (k, l) sits at the plane point
(k/N, l/N)) modulo a deck lattice L whose columns have even coordinate sum.
Faces are keyed by their lower-left vertex, so vertices and faces share the
same index set Z^2/L.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLattice, InvalidLattice

# cyclic vertex offsets of a face: v_kl, v_{k+1,l}, v_{k+1,l+1}, v_{k,l+1}
CORNERS = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=np.int64)

PLUS, MINUS = 0, 1


@dataclass(frozen=True)
class LatticeBasis:
    """Oriented basis (gamma1, gamma2) of a period lattice in the plane."""

    gamma1: np.ndarray
    gamma2: np.ndarray

    def __post_init__(self):
        g1 = np.asarray(self.gamma1, dtype=float).reshape(2)
        g2 = np.asarray(self.gamma2, dtype=float).reshape(2)
        object.__setattr__(self, "gamma1", g1)
        object.__setattr__(self, "gamma2", g2)
        if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
            raise InvalidLattice("lattice generators must be finite")
        if self.det <= 0:
            raise InvalidLattice(f"basis must be positively oriented, det={self.det!r}")

    @property
    def matrix(self) -> np.ndarray:
        """2x2 matrix with the generators as columns."""
        return np.column_stack([self.gamma1, self.gamma2])

    @property
    def det(self) -> float:
        return float(self.gamma1[0] * self.gamma2[1] - self.gamma1[1] * self.gamma2[0])

    @property
    def orientation(self) -> int:
        return int(np.sign(self.det))


def _nearest_even(target: np.ndarray) -> tuple[int, int]:
    base = np.floor(target).astype(np.int64)
    best = None
    for da, db in itertools.product(range(-1, 3), repeat=2):
        a, b = int(base[0] + da), int(base[1] + db)
        if (a + b) % 2:
            continue
        d = (a - target[0]) ** 2 + (b - target[1]) ** 2
        key = (d, a, b)
        if best is None or key < best:
            best = key
    return best[1], best[2]


def approximate_lattice(basis: LatticeBasis, N: int) -> np.ndarray:
    """Integer matrix whose columns are the even-sum vectors closest to N*gamma_i."""
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    cols = [_nearest_even(N * g) for g in (basis.gamma1, basis.gamma2)]
    L = np.array(cols, dtype=np.int64).T
    det = int(L[0, 0] * L[1, 1] - L[0, 1] * L[1, 0])
    if det <= 0:
        raise DegenerateLattice(f"N={N} is too small for this lattice (det L = {det})")
    return L


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hermite_normal_form(L: np.ndarray) -> tuple[int, int, int]:
    """Column-style lower triangular form [[a, 0], [b, c]] of L.

    Returns (a, b, c) with a, c > 0 and 0 <= b < c, spanning the same lattice.
    """
    (p, q), (r, s) = np.asarray(L, dtype=np.int64).tolist()
    g, x, y = _ext_gcd(p, q)
    if g == 0:
        raise DegenerateLattice("first row of L vanishes")
    # unimodular column operation sending (p, q) to (g, 0)
    c1 = (x, y)
    c2 = (-q // g, p // g)
    a, b = g, r * c1[0] + s * c1[1]
    c = r * c2[0] + s * c2[1]
    if a < 0:
        a, b = -a, -b
    if c < 0:
        c = -c
    if c == 0:
        raise DegenerateLattice("L is singular")
    b %= c
    return int(a), int(b), int(c)


@dataclass(frozen=True, eq=False)
class QuadGrid:
    """Combinatorics of the torus quadrangulation Z^2 / L at resolution N."""

    N: int
    L: np.ndarray
    hnf: tuple[int, int, int] = field(init=False)
    reps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = np.array(self.L, dtype=np.int64).reshape(2, 2)
        L.setflags(write=False)
        object.__setattr__(self, "L", L)
        if int(self.N) != self.N or self.N < 1:
            raise InvalidLattice("N must be a positive integer")
        if np.any(L.sum(axis=0) % 2):
            raise InvalidLattice("columns of L must have even coordinate sum")
        if L[0, 0] * L[1, 1] - L[0, 1] * L[1, 0] <= 0:
            raise InvalidLattice("L must have positive determinant")
        a, b, c = hermite_normal_form(L)
        object.__setattr__(self, "hnf", (a, b, c))
        i, j = np.meshgrid(np.arange(a), np.arange(c), indexing="ij")
        reps = np.column_stack([i.ravel(), j.ravel()]).astype(np.int64)
        reps.setflags(write=False)
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "_cache", {})

    @property
    def size(self) -> int:
        """Number of vertices, which is also the number of faces."""
        return self.hnf[0] * self.hnf[2]

    @property
    def det(self) -> int:
        return self.size

    def same_as(self, other: "QuadGrid") -> bool:
        return other is self or (self.N == other.N and np.array_equal(self.L, other.L))

    def reduce(self, k, l):
        """Canonical representative (i, j) of (k, l) modulo L (vectorized)."""
        a, b, c = self.hnf
        k = np.asarray(k, dtype=np.int64)
        l = np.asarray(l, dtype=np.int64)
        i = np.mod(k, a)
        q = (k - i) // a
        j = np.mod(l - q * b, c)
        return i, j

    def index(self, k, l):
        """Index in [0, size) of the class of (k, l)."""
        i, j = self.reduce(k, l)
        return i * self.hnf[2] + j

    def shift(self, dk: int, dl: int) -> np.ndarray:
        """Index array s with s[m] = index of rep(m) + (dk, dl)."""
        key = ("shift", dk, dl)
        if key not in self._cache:
            s = self.index(self.reps[:, 0] + dk, self.reps[:, 1] + dl)
            s.setflags(write=False)
            self._cache[key] = s
        return self._cache[key]

    @property
    def face_vertices(self) -> np.ndarray:
        """(size, 4) vertex indices of each face in cyclic order."""
        key = "fv"
        if key not in self._cache:
            fv = np.column_stack([self.shift(int(dk), int(dl)) for dk, dl in CORNERS])
            fv.setflags(write=False)
            self._cache[key] = fv
        return self._cache[key]

    @property
    def vertex_faces(self) -> np.ndarray:
        """(size, 4) faces around each vertex; column p holds the face where the
        vertex sits at cyclic position p."""
        key = "vf"
        if key not in self._cache:
            vf = np.column_stack([self.shift(-int(dk), -int(dl)) for dk, dl in CORNERS])
            vf.setflags(write=False)
            self._cache[key] = vf
        return self._cache[key]

    @property
    def parity(self) -> np.ndarray:
        """(k + l) mod 2 for every vertex or face representative."""
        return (self.reps.sum(axis=1) % 2).astype(np.int8)

    def plane_points(self, offset=(0.0, 0.0)) -> np.ndarray:
        """Plane coordinates (k + offset) / N of every representative."""
        return (self.reps + np.asarray(offset, dtype=float)) / self.N

    def face_centers(self) -> np.ndarray:
        return self.plane_points((0.5, 0.5))

    def face_corners(self, face) -> list[int]:
        """Vertex indices of one face in cyclic order."""
        return [int(v) for v in self.face_vertices[int(face)]]


def build_grid(L, N: int) -> QuadGrid:
    return QuadGrid(N=int(N), L=np.asarray(L))


def square_grid(N: int) -> QuadGrid:
    """Grid for the lattice Z^2 at even resolution N."""
    if N % 2:
        raise InvalidLattice("the square lattice needs an even N")
    return build_grid([[N, 0], [0, N]], N)


def face_component(grid: QuadGrid, face) -> int:
    """PLUS (0) or MINUS (1): the checkers component of a face.

    `face` is either an index or a (k, l) key (any representative).
    """
    if np.ndim(face) == 0:
        k, l = grid.reps[int(face)]
    else:
        k, l = face
    return int((int(k) + int(l)) % 2)
