"""Explicit Euler integration of the moment map flow d tau/dt = J delta* mu_r(tau)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .discrete_ops import delta_star, moment_map_r
from .errors import NonFinite
from .mesh_core import J, Mesh, face_inner, vertex_inner

log = logging.getLogger(__name__)

CONVERGED, MAX_STEPS, DIVERGED = "Converged", "MaxSteps", "Diverged"
BLOWUP = 1e12


@dataclass
class FlowConfig:
    dt0: float | None = None  # None means c0 / N^2
    c0: float = 0.5
    max_steps: int = 100_000
    tol_density: float = 1e-8
    adaptive: bool = True
    backtrack_factor: float = 0.5
    max_backtracks: int = 30
    growth_factor: float = 1.1
    growth_every: int = 10
    log_every: int = 1

    def __post_init__(self):
        if self.dt0 is not None and not self.dt0 > 0:
            raise ValueError("dt0 must be positive")
        if self.tol_density < 0:
            raise ValueError("tol_density must be nonnegative")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")

    def initial_step(self, N: int) -> float:
        return self.dt0 if self.dt0 is not None else self.c0 / N**2


@dataclass
class FlowReport:
    steps: int
    reason: str
    final_max_density: float
    final_energy: float
    stationarity: float  # ||delta* mu_r|| at the last mesh
    trace: list = field(default_factory=list)  # rows (step, energy, max_density, dt)
    rejected: int = 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([row[1] for row in self.trace])


def energy(mesh: Mesh, mu=None) -> float:
    """||mu_r||^2 for the discrete L2 product on faces."""
    mu = moment_map_r(mesh) if mu is None else mu
    return face_inner(mesh.grid, mu, mu)


def flow_velocity(mesh: Mesh, mu=None) -> np.ndarray:
    mu = moment_map_r(mesh) if mu is None else mu
    return J(delta_star(mesh, mu))


def _advance(mesh: Mesh, velocity, dt) -> Mesh:
    pts = mesh.points + dt * velocity
    if not np.all(np.isfinite(pts)):
        raise NonFinite("flow step produced non-finite coordinates")
    return Mesh(mesh.grid, pts)


def flow_step(mesh: Mesh, dt: float) -> Mesh:
    """One Euler step tau + dt J delta* mu_r(tau)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _advance(mesh, flow_velocity(mesh), dt)


def run_flow(tau0: Mesh, cfg: FlowConfig | None = None, callback=None):
    """Integrate the flow until max |mu_r| <= tol, the step budget runs out,
    or the iterates blow up. Returns (final mesh, FlowReport)."""
    cfg = FlowConfig() if cfg is None else cfg
    tau = tau0
    mu = moment_map_r(tau)
    E = energy(tau, mu)
    dt = cfg.initial_step(tau.N)
    trace = [(0, E, float(np.max(np.abs(mu))), dt)]
    reason = MAX_STEPS
    steps = rejected = accepted_since_growth = 0

    def report(reason):
        stat = np.sqrt(vertex_inner(tau.grid, *(2 * [delta_star(tau, mu)])))
        if trace[-1][0] != steps:
            trace.append((steps, E, float(np.max(np.abs(mu))), dt))
        return tau, FlowReport(steps, reason, float(np.max(np.abs(mu))), E, float(stat),
                               trace, rejected)

    if np.max(np.abs(mu)) <= cfg.tol_density:
        return report(CONVERGED)

    while steps < cfg.max_steps:
        vel = flow_velocity(tau, mu)
        for _ in range(cfg.max_backtracks + 1):
            try:
                cand = _advance(tau, vel, dt)
            except NonFinite:
                if not cfg.adaptive:
                    return report(DIVERGED)
                dt *= cfg.backtrack_factor
                rejected += 1
                continue
            mu_c = moment_map_r(cand)
            E_c = energy(cand, mu_c)
            if not cfg.adaptive or E_c <= E:
                break
            dt *= cfg.backtrack_factor
            rejected += 1
        else:
            log.warning("step size underflow after %d halvings", cfg.max_backtracks)
            return report(DIVERGED)

        tau, mu, E = cand, mu_c, E_c
        steps += 1
        if np.max(np.abs(tau.points)) > BLOWUP or not np.isfinite(E):
            return report(DIVERGED)
        accepted_since_growth += 1
        if cfg.adaptive and accepted_since_growth >= cfg.growth_every:
            dt *= cfg.growth_factor
            accepted_since_growth = 0
        if steps % cfg.log_every == 0:
            trace.append((steps, E, float(np.max(np.abs(mu))), dt))
        if callback is not None:
            callback(steps, tau, E)
        if np.max(np.abs(mu)) <= cfg.tol_density:
            reason = CONVERGED
            break
    return report(reason)
