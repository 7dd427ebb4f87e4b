"""
Sampling a torus and measuring its symplectic density
=====================================================

A quad mesh of a torus in R^4 is isotropic when every face has zero
symplectic area. Here we sample two tori on the same grid and compare.
"""

import numpy as np

from isotori.analysis_norms import grid_for
from isotori.discrete_ops import moment_map, moment_map_r
from isotori.immersions import bumped_product_torus, bumpy_product_torus
from isotori.mesh_core import sample_immersion

# A product of two bumpy circles, rotated in the parameter plane. Products of
# curves are isotropic, but the samples are only close to isotropic.
bumpy = bumpy_product_torus(0.3, 2, 3, angle=0.3)
for N in (8, 16, 32):
    tau = sample_immersion(bumpy, grid_for(bumpy, N))
    print(f"bumpy torus, N = {N:2d}: max |density| = {np.max(np.abs(moment_map_r(tau))):.2e}")

# Stokes: the face areas of any closed mesh sum to zero.
tau = sample_immersion(bumpy, grid_for(bumpy, 16))
print("sum of face areas:", moment_map(tau).sum())

# A torus that is not isotropic at all keeps a density of order its bumps.
bumped = bumped_product_torus()
tau = sample_immersion(bumped, grid_for(bumped, 16))
print(f"bumped torus, N = 16: max |density| = {np.max(np.abs(moment_map_r(tau))):.2e}")
