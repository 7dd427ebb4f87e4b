"""Command line interface.

Exit codes: 0 success, 1 invalid input or failed validation, 2 solver
failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import errors
from .analysis_norms import STUDY_CASES, convergence_study, grid_for, weak_holder_norm
from .cli_io import (export_obj, export_ply, load_face_function, load_mesh, save_mesh,
                     write_trace)
from .discrete_ops import moment_map, moment_map_r, spectral_gap
from .flow_engine import CONVERGED, FlowConfig, run_flow
from .immersions import (bumpy_product_torus, checkerboard_product_torus, diagonal_product_torus,
                         immersion_from_spec, padded_product_torus, product_torus)
from .isoperturb import GreenConfig, fixed_point_solve
from .mesh_core import sample_immersion
from .pyramid_refine import TriMesh, genericity_perturb, immersion_check, refine

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64

NAMED = {
    "product": lambda n: product_torus() if n == 2 else padded_product_torus(),
    "bumpy": lambda n: bumpy_product_torus(0.3, 2, 3, angle=0.3),
    "diagonal": lambda n: diagonal_product_torus(),
    "checkerboard": lambda n: checkerboard_product_torus(),
}
STUDY_ALIASES = {"eta": "eta-norm", "sample": "sample-error", "fixed-point": "fixed-point-distance",
                 "limit": "limit-residual", "kappa": "kappa-error", "pl": "pl-sup-error"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def load_immersion(arg: str, n: int):
    if arg in NAMED:
        return NAMED[arg](n)
    return immersion_from_spec(arg)


def _emit(doc: dict, out):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        from .cli_io import atomic_write
        atomic_write(out, text + "\n")
    print(text)


def cmd_sample(a):
    imm = load_immersion(a.imm, a.n)
    mesh = sample_immersion(imm, grid_for(imm, a.N))
    spec = imm.to_spec() if hasattr(imm, "to_spec") else {"name": a.imm}
    save_mesh(a.out, mesh, {"immersion": spec, "command": "sample", "N": a.N})
    print(f"wrote {a.out}: {mesh.grid.size} vertices, n = {mesh.n}")
    return EXIT_OK


def _quad(path):
    obj = load_mesh(path).to_mesh()
    return obj.base if isinstance(obj, TriMesh) else obj


def cmd_flow(a):
    mesh = _quad(a.mesh)
    cfg = FlowConfig(dt0=a.dt0, tol_density=a.tol, max_steps=a.max_steps)
    final, rep = run_flow(mesh, cfg)
    if a.out:
        save_mesh(a.out, final, {"command": "flow", "flow": vars(cfg)})
    if a.trace:
        write_trace(a.trace, rep.trace)
    print(f"{rep.reason}: {rep.steps} steps, max density {rep.final_max_density:.3e}, "
          f"energy {rep.final_energy:.3e}")
    return EXIT_OK if rep.reason == CONVERGED else EXIT_SOLVER


def cmd_perturb(a):
    tau = _quad(a.mesh)
    cfg = GreenConfig(cg_tol=a.tol)
    _, rho, rep = fixed_point_solve(tau, cfg)
    if a.out:
        save_mesh(a.out, rho, {"command": "perturb", "green": {"cg_tol": a.tol}})
    doc = {k: v for k, v in vars(rep).items()}
    _emit(doc, a.report)
    return EXIT_OK if rep.max_density <= 1e-8 else EXIT_SOLVER


def cmd_refine(a):
    rho = _quad(a.mesh)
    if a.shear:
        rho = genericity_perturb(rho, a.shear, a.seed)
    tm = refine(rho)
    save_mesh(a.out, tm, {"command": "refine", "shear": a.shear, "seed": a.seed})
    print(f"wrote {a.out}: {4 * tm.grid.size} triangles, "
          f"max residual {np.max(np.abs(tm.residuals())):.3e}")
    return EXIT_OK


def check_document(obj, gap: bool = True) -> dict:
    tri = isinstance(obj, TriMesh)
    base = obj.base if tri else obj
    mu = moment_map_r(base)
    doc = {
        "n": base.n, "N": base.N, "vertices": base.grid.size,
        "max_density": float(np.max(np.abs(mu))),
        "stokes_sum": float(np.sum(moment_map(base))),
    }
    if gap:
        try:
            doc["spectral_gap"] = spectral_gap(base)
        except errors.SolverDiverged as exc:
            doc["spectral_gap"] = None
            doc["gap_error"] = str(exc)
    if tri:
        doc["max_triangle_residual"] = float(np.max(np.abs(obj.residuals())))
        doc["immersion_offenders"] = [list(x) for x in immersion_check(obj)]
    return doc


def cmd_check(a):
    obj = load_mesh(a.mesh).to_mesh()
    doc = check_document(obj, gap=not a.no_gap)
    _emit(doc, a.out)
    return EXIT_OK


def cmd_norms(a):
    grid, phi = load_face_function(a.file)
    nv = weak_holder_norm(grid, phi, a.k, a.alpha, exact=a.exact_holder, seed=a.seed)
    _emit(nv.as_dict(), a.out)
    return EXIT_OK


def cmd_study(a):
    case = STUDY_ALIASES.get(a.case, a.case)
    if case not in STUDY_CASES:
        raise UsageError(f"unknown study case {a.case!r}")
    Ns = [int(x) for x in a.N.split(",")]
    imm = load_immersion(a.imm, a.n)
    table = convergence_study(case, Ns, imm)
    text = table.to_csv()
    if a.out:
        from .cli_io import atomic_write
        atomic_write(a.out, text)
    sys.stdout.write(text)
    print(f"slope {table.slope:.4f}")
    return EXIT_OK


def cmd_export(a):
    obj = load_mesh(a.mesh).to_mesh()
    fmt = a.format or ("ply" if a.out.endswith(".ply") else "obj")
    writer = export_ply if fmt == "ply" else export_obj
    moved = writer(obj, a.out, a.projection, a.drop, a.quads)
    print(f"wrote {a.out}" + (f" ({moved} vertices moved off the pole)" if moved else ""))
    return EXIT_OK


def build_parser() -> Parser:
    p = Parser(prog="isotori", description="Isotropic quad meshes of tori.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=Parser)

    s = sub.add_parser("sample", help="sample an immersion on a grid")
    s.add_argument("--imm", default="product",
                   help="JSON spec (file or string) or one of: " + ", ".join(NAMED))
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("flow", help="run the moment map flow")
    s.add_argument("mesh")
    s.add_argument("--dt0", type=float, default=None)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-steps", type=int, default=100_000)
    s.add_argument("--trace", default=None, help="CSV trace path")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("perturb", help="fixed point perturbation to an isotropic mesh")
    s.add_argument("mesh")
    s.add_argument("--tol", type=float, default=1e-10, help="CG tolerance")
    s.add_argument("--out", default=None)
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_perturb)

    s = sub.add_parser("refine", help="optimal triangulation of an isotropic mesh")
    s.add_argument("mesh")
    s.add_argument("--shear", type=float, default=0.0, help="genericity shear size")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("check", help="diagnostics of a mesh file as JSON")
    s.add_argument("mesh")
    s.add_argument("--no-gap", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("norms", help="weak Hoelder norm of a face function file")
    s.add_argument("file")
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--exact-holder", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("study", help="convergence study with a log-log slope")
    s.add_argument("case", help=", ".join(sorted(set(STUDY_CASES) | set(STUDY_ALIASES))))
    s.add_argument("--N", default="8,16,32,64")
    s.add_argument("--imm", default="bumpy")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("export", help="OBJ or PLY export")
    s.add_argument("mesh")
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=["obj", "ply"], default=None)
    s.add_argument("--projection", choices=["none3of4", "radial_stereo"], default="none3of4")
    s.add_argument("--drop", type=int, default=3, help="coordinate dropped by none3of4")
    s.add_argument("--quads", choices=["split", "native"], default="split")
    s.set_defaults(func=cmd_export)
    return p


INVALID = (errors.FormatError, errors.IoError, errors.InvalidLattice, errors.DegenerateLattice,
           errors.GridMismatch, errors.PeriodicityViolation, errors.NonFinite,
           errors.NotIsotropic, errors.DegenerateDiagonals, errors.ProjectionError, ValueError)
SOLVER = (errors.SolverDiverged, errors.DegenerateKernel, errors.NoContraction,
          errors.GenericityFailed, errors.NoNondegenerateRotation)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return a.func(a)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SOLVER as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except INVALID as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
