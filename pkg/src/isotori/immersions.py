"""Doubly periodic maps of the plane into R^{2n}.

The built-in family composes closed planar curves with linear forms:

    l(p) = (c_1(<k_1, A p>), ..., c_n(<k_n, A p>))

where each c_j is a trigonometric polynomial of period 1, each k_j an integer
wave vector and A an invertible 2x2 matrix. Every such map is isotropic, and
A^-1 Z^2 is a period lattice. The plain product of two curves is k_1 = (1, 0),
k_2 = (0, 1), A = identity; precomposing with a rotation R replaces A by A R.
Optional non-isotropic bumps a sin(2 pi <k, A p>) can be added to single
coordinates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .lattice_grid import LatticeBasis
from .mesh_core import check_periodic_points

TWO_PI = 2.0 * np.pi
E_U = np.array([1.0, 1.0]) / np.sqrt(2.0)
E_V = np.array([-1.0, 1.0]) / np.sqrt(2.0)


def fd_directional(fun, P, dirs, h: float = 1e-3):
    """Nested central differences along dirs, with one Richardson level."""
    P = np.asarray(P, dtype=float)
    dirs = [np.asarray(d, dtype=float) for d in dirs]

    def nested(Q, ds, step):
        if not ds:
            return np.asarray(fun(Q), dtype=float)
        d = ds[0]
        return (nested(Q + step * d, ds[1:], step) - nested(Q - step * d, ds[1:], step)) / (2 * step)

    if not dirs:
        return np.asarray(fun(P), dtype=float)
    coarse = nested(P, dirs, h)
    fine = nested(P, dirs, h / 2)
    return (4 * fine - coarse) / 3


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Curve:
    """Closed plane curve c(t) = sum_k m_k exp(2 pi i k t), t in R/Z."""

    freqs: tuple
    coeffs: tuple

    @classmethod
    def from_modes(cls, modes: dict) -> "Curve":
        items = sorted((int(k), complex(c)) for k, c in modes.items() if c != 0)
        return cls(tuple(k for k, _ in items), tuple(c for _, c in items))

    @classmethod
    def from_trig(cls, cos=(), sin=()) -> "Curve":
        """X(t) = sum_k cos[k-1] cos(2 pi k t), Y(t) = sum_k sin[k-1] sin(2 pi k t)."""
        modes: dict = {}
        for k, a in enumerate(cos, start=1):
            modes[k] = modes.get(k, 0) + a / 2
            modes[-k] = modes.get(-k, 0) + a / 2
        for k, b in enumerate(sin, start=1):
            modes[k] = modes.get(k, 0) + b / 2
            modes[-k] = modes.get(-k, 0) - b / 2
        return cls.from_modes(modes)

    @classmethod
    def circle(cls, radius: float = 1.0 / TWO_PI) -> "Curve":
        return cls.from_modes({1: radius})

    @classmethod
    def bumpy_circle(cls, radius: float, eps: float, m: int, terms: int = 24) -> "Curve":
        """Constant-speed curve whose tangent angle is 2 pi t + eps sin(2 pi m t).

        Closed for m >= 2; the speed is 2 pi radius everywhere. Fourier
        coefficients come from the Jacobi-Anger expansion.
        """
        if m < 2:
            raise ValueError("bumpy_circle needs m >= 2 to close up")
        modes = {}
        for j in range(-terms, terms + 1):
            k = 1 + j * m
            c = radius * jv(j, eps) / k
            if abs(c) > 1e-300:
                modes[k] = modes.get(k, 0) + c
        return cls.from_modes(modes)

    @classmethod
    def from_spec(cls, spec: dict) -> "Curve":
        if "modes" in spec:
            return cls.from_modes({int(k): complex(re, im) for k, re, im in spec["modes"]})
        return cls.from_trig(spec.get("cos", ()), spec.get("sin", ()))

    def to_spec(self) -> dict:
        return {"modes": [[k, c.real, c.imag] for k, c in zip(self.freqs, self.coeffs)]}

    def derivative(self, t, order: int = 0) -> np.ndarray:
        """order-th derivative in t, as (..., 2) real array."""
        t = np.asarray(t, dtype=float)
        k = np.array(self.freqs, dtype=float)
        c = np.array(self.coeffs, dtype=complex) * (TWO_PI * 1j * k) ** order
        z = np.exp(TWO_PI * 1j * t[..., None] * k) @ c
        return np.stack([z.real, z.imag], axis=-1)

    def __call__(self, t):
        return self.derivative(t, 0)


class Immersion:
    """Base class: a map of the plane into R^{2n}, periodic for `lattice`.

    Subclasses implement `__call__`; derivatives default to nested central
    differences with one Richardson level.
    """

    lattice: LatticeBasis
    jet_step: float = 1e-3

    def __call__(self, P) -> np.ndarray:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return int(self(np.zeros((1, 2))).shape[-1])

    def derivative(self, P, dirs) -> np.ndarray:
        """Directional derivative d^m l / d dirs[0] ... d dirs[m-1] at points P."""
        return self.fd_derivative(P, dirs)

    def fd_derivative(self, P, dirs, h: float | None = None) -> np.ndarray:
        return fd_directional(self, P, dirs, self.jet_step if h is None else h)

    def check_periodic(self, count: int = 16, tol: float = 1e-9):
        rng = np.random.default_rng(12345)
        pts = rng.uniform(-1, 1, size=(count, 2)) @ self.lattice.matrix.T
        check_periodic_points(self, self.lattice, pts, tol)

    def rotate(self, angle: float) -> "Immersion":
        return RotatedImmersion(self, angle)

    def to_spec(self) -> dict | None:
        return None


class FunctionImmersion(Immersion):
    """Wrap a vectorized callable P (..., 2) -> (..., 2n)."""

    def __init__(self, fun, lattice: LatticeBasis, jet_step: float = 1e-3):
        self.fun = fun
        self.lattice = lattice
        self.jet_step = jet_step

    def __call__(self, P):
        return np.asarray(self.fun(np.asarray(P, dtype=float)), dtype=float)


class RotatedImmersion(Immersion):
    """p -> base(R p), with period lattice R^-1 (base lattice)."""

    def __init__(self, base: Immersion, angle: float):
        self.base = base
        self.angle = float(angle)
        self.R = rotation(angle)
        Rinv = self.R.T
        self.lattice = LatticeBasis(Rinv @ base.lattice.gamma1, Rinv @ base.lattice.gamma2)
        self.jet_step = base.jet_step

    def __call__(self, P):
        return self.base(np.asarray(P, dtype=float) @ self.R.T)

    def derivative(self, P, dirs):
        return self.base.derivative(np.asarray(P, dtype=float) @ self.R.T, [self.R @ d for d in dirs])


@dataclass
class FactorImmersion(Immersion):
    """l(p) = (c_j(<k_j, A p>))_j plus optional bumps (see module docstring)."""

    curves: list
    waves: np.ndarray
    frame: np.ndarray = field(default_factory=lambda: np.eye(2))
    bumps: list = field(default_factory=list)
    analytic: bool = True
    jet_step: float = 1e-3

    def __post_init__(self):
        self.waves = np.asarray(self.waves, dtype=float).reshape(len(self.curves), 2)
        if not np.allclose(self.waves, np.round(self.waves)):
            raise ValueError("wave vectors must be integer")
        self.frame = np.asarray(self.frame, dtype=float).reshape(2, 2)
        if len(self.curves) < 2:
            raise ValueError("need at least two factors (n >= 2)")
        Ainv = np.linalg.inv(self.frame)
        self.lattice = LatticeBasis(Ainv[:, 0], Ainv[:, 1])
        self.bumps = [
            (float(b["amplitude"]), np.asarray(b["wave"], dtype=float), int(b["axis"]))
            for b in (dict(x) for x in self.bumps)
        ]

    @classmethod
    def product(cls, curve1: Curve, curve2: Curve, rotation_angle: float = 0.0, **kw):
        return cls([curve1, curve2], [(1, 0), (0, 1)], rotation(rotation_angle), **kw)

    def rotate(self, angle: float) -> "FactorImmersion":
        return FactorImmersion(
            list(self.curves), self.waves.copy(), self.frame @ rotation(angle),
            [dict(amplitude=a, wave=w, axis=i) for a, w, i in self.bumps],
            self.analytic, self.jet_step,
        )

    def _phase(self, P):
        # (..., n) phases <k_j, A p>
        return np.asarray(P, dtype=float) @ (self.waves @ self.frame).T

    def __call__(self, P):
        return self._eval(np.asarray(P, dtype=float), [])

    def derivative(self, P, dirs):
        if not self.analytic:
            return self.fd_derivative(P, dirs)
        return self._eval(np.asarray(P, dtype=float), [np.asarray(d, dtype=float) for d in dirs])

    def _eval(self, P, dirs):
        W = self.waves @ self.frame  # rows: covectors of each factor in plane coords
        t = P @ W.T
        m = len(dirs)
        parts = []
        for j, c in enumerate(self.curves):
            factor = np.prod([W[j] @ d for d in dirs]) if dirs else 1.0
            parts.append(c.derivative(t[..., j], m) * factor)
        out = np.concatenate(parts, axis=-1)
        for amp, wave, axis in self.bumps:
            w = wave @ self.frame
            s = TWO_PI * (P @ w)
            factor = np.prod([TWO_PI * (w @ d) for d in dirs]) if dirs else 1.0
            # m-th derivative of sin is sin(s + m pi/2)
            out[..., axis] += amp * factor * np.sin(s + m * np.pi / 2)
        return out

    def to_spec(self) -> dict:
        return {
            "type": "factors",
            "factors": [
                {"curve": c.to_spec(), "wave": [int(round(a)) for a in w]}
                for c, w in zip(self.curves, self.waves)
            ],
            "frame": self.frame.tolist(),
            "bumps": [
                {"amplitude": a, "wave": [int(round(x)) for x in w], "axis": i}
                for a, w, i in self.bumps
            ],
        }


def immersion_from_spec(spec) -> Immersion:
    """Build an immersion from a JSON-like dict (or a JSON string / path)."""
    if isinstance(spec, str):
        text = spec
        if not text.lstrip().startswith("{"):
            with open(spec) as fh:
                text = fh.read()
        spec = json.loads(text)
    kind = spec.get("type", "product")
    bumps = spec.get("bumps", [])
    if kind == "product":
        imm = FactorImmersion(
            [Curve.from_spec(spec["curve1"]), Curve.from_spec(spec["curve2"])],
            [(1, 0), (0, 1)],
            np.array(spec.get("frame", np.eye(2)), dtype=float),
            bumps,
        )
    elif kind == "factors":
        imm = FactorImmersion(
            [Curve.from_spec(f["curve"]) for f in spec["factors"]],
            [f["wave"] for f in spec["factors"]],
            np.array(spec.get("frame", np.eye(2)), dtype=float),
            bumps,
        )
    else:
        raise ValueError(f"unknown immersion type {kind!r}")
    r = float(spec.get("rotation", 0.0))
    return imm.rotate(r) if r else imm


# a few ready-made examples

def product_torus(radius1: float = 1 / TWO_PI, radius2: float = 1 / TWO_PI) -> FactorImmersion:
    """Product of two round circles over Z^2."""
    return FactorImmersion.product(Curve.circle(radius1), Curve.circle(radius2))


def diagonal_product_torus(normalized: bool = True) -> FactorImmersion:
    """Circles along the diagonal directions u = (x+y)/sqrt2, v = (y-x)/sqrt2.

    (exp(2 pi i u), exp(2 pi i v)), divided by 2 pi when normalized.
    """
    r = 1 / TWO_PI if normalized else 1.0
    A = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)
    return FactorImmersion([Curve.circle(r), Curve.circle(r)], [(1, 0), (0, 1)], A)


def checkerboard_product_torus(radius: float = 1 / TWO_PI) -> FactorImmersion:
    """Circles along x+y and y-x with periods (1/2, 1/2) and (-1/2, 1/2)."""
    A = np.array([[1.0, 1.0], [-1.0, 1.0]])
    return FactorImmersion([Curve.circle(radius), Curve.circle(radius)], [(1, 0), (0, 1)], A)


def bumpy_product_torus(eps: float = 0.3, m1: int = 2, m2: int = 3, angle: float = 0.0,
                        radius: float = 1 / TWO_PI) -> FactorImmersion:
    """Product of two constant-speed bumpy circles; conformal and isotropic."""
    imm = FactorImmersion.product(
        Curve.bumpy_circle(radius, eps, m1), Curve.bumpy_circle(radius, eps, m2)
    )
    return imm.rotate(angle) if angle else imm


def padded_product_torus(eps3: float = 0.5, radius: float = 1 / TWO_PI) -> FactorImmersion:
    """Isotropic torus in R^6: (c(x), c(y), eps3 c(x + y)) with round circles."""
    c = Curve.circle(radius)
    return FactorImmersion(
        [c, c, Curve.circle(eps3 * radius)], [(1, 0), (0, 1), (1, 1)]
    )


def bumped_product_torus(a1: float = 0.03, a0: float = 0.02,
                         radius: float = 1 / TWO_PI) -> FactorImmersion:
    """Round product torus plus two small coordinate bumps; not isotropic.

    a1 sin(2 pi (x + y)) is added to coordinate 1 and a0 sin(2 pi y) to
    coordinate 0, so the samples carry a symplectic density of order a.
    """
    bumps = [{"amplitude": a1, "wave": (1, 1), "axis": 1},
             {"amplitude": a0, "wave": (0, 1), "axis": 0}]
    return FactorImmersion.product(Curve.circle(radius), Curve.circle(radius), bumps=bumps)
