"""Isotropic quadrangular meshes of tori: sampling, the moment map flow, the
fixed point perturbation, pyramid refinement and convergence studies."""

from .discrete_ops import delta, delta_star, laplacian, moment_map, moment_map_r, spectral_gap
from .flow_engine import FlowConfig, run_flow
from .isoperturb import GreenConfig, fixed_point_solve
from .lattice_grid import LatticeBasis, QuadGrid, build_grid, square_grid
from .mesh_core import J, Mesh, omega, sample_immersion, shear
from .pyramid_refine import TriMesh, optimal_apex, refine

__all__ = [
    "FlowConfig", "GreenConfig", "J", "LatticeBasis", "Mesh", "QuadGrid", "TriMesh",
    "build_grid", "delta", "delta_star", "fixed_point_solve", "laplacian", "moment_map",
    "moment_map_r", "omega", "optimal_apex", "refine", "run_flow", "sample_immersion",
    "shear", "spectral_gap", "square_grid",
]
