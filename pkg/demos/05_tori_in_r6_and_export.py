"""
An immersed triangulated torus in R^6, and exporting meshes
===========================================================

For n = 3 the apex of each face can move inside a family of solutions, and
the mesh itself can be sheared. Both are used to reach a triangulation
whose apex and vertex stars are embedded. The command line tools do the
same from files.
"""

import os
import tempfile

import numpy as np

from isotori.cli import main
from isotori.immersions import padded_product_torus
from isotori.lattice_grid import square_grid
from isotori.mesh_core import sample_immersion
from isotori.pyramid_refine import search_immersion

rho = sample_immersion(padded_product_torus(), square_grid(8))
tm, bad, rounds = search_immersion(rho, 0.3 / 8, seed=0)
print(f"offending stars: {len(bad)}, nudge rounds: {rounds}, "
      f"max residual {np.max(np.abs(tm.residuals())):.1e}")

with tempfile.TemporaryDirectory() as d:
    m, t = os.path.join(d, "m.json"), os.path.join(d, "t.json")
    main(["sample", "--imm", "bumpy", "--N", "16", "--out", m])
    main(["perturb", m, "--out", m, "--report", os.path.join(d, "report.json")])
    main(["refine", m, "--out", t])
    main(["check", t, "--no-gap"])
    main(["export", t, "--out", os.path.join(d, "t.obj"), "--projection", "radial_stereo"])
    print(sorted(os.listdir(d)))
