"""Values computed once by the oracles in tests/oracles.py (or by hand) and
frozen here. tests/test_oracles.py checks the oracles still reproduce them."""

import math

# best even-sum approximations for gamma1 = (1.03, 0.24), gamma2 = (-0.21, 0.98), N = 8
APPROX_L_EXAMPLE = [[8, -2], [2, 8]]

# smallest nonzero eigenvalue of the Laplacian of the round product torus
# (radius 1 / 2 pi), square grid N = 8, dense eigensolver
DENSE_GAP_PRODUCT_N8 = 30.388518513656976

# (cos 2 pi x, sin 2 pi x, cos 2 pi y, sin 2 pi y) / 2 pi: |l_u|^2 = 1, K = 0,
# d^2 l / du dv = (l_xx - l_yy) / 2 is normal with |.|^2 = 8 pi^4 / (4 pi^2) = 2 pi^2,
# so E = 4 pi^2 and K + E = 4 pi^2
THETA_PRODUCT = 1.0
KE_PRODUCT = 4 * math.pi**2

# (exp(2 pi i u), exp(2 pi i v)) without normalization: theta = 4 pi^2, E = 0
THETA_DIAGONAL_UNNORMALIZED = 4 * math.pi**2
# the same map after a quarter-turn rotation of the plane is the unnormalized
# product torus: |d^2 l / du dv|^2 = 8 pi^4, all normal, so E = 16 pi^4
E_DIAGONAL_ROTATED = 16 * math.pi**4

# (c(x + y), c(y - x)), c the circle of radius 1 / 2 pi: l_u = sqrt2 c'(x + y), theta = 2
THETA_CHECKERBOARD = 2.0

# apex_diameter_ratio of the optimal triangulation of the perturbed bumpy
# torus (eps 0.3, modes 2 and 3, rotation 0.3) at N = 8
DIAMETER_RATIO_N8 = 0.5083496018621917
