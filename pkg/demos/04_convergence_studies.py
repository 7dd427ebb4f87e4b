"""
Convergence rates on the bumpy torus
====================================

Each study evaluates one quantity for several grid sizes and fits a
log-log slope. Every quantity here should decay at least like 1/N.
"""

from isotori.analysis_norms import convergence_study, limit_residual, loglog_slope, trig_field
from isotori.immersions import bumpy_product_torus

imm = bumpy_product_torus(0.3, 2, 3, angle=0.3)
for case in ("sample-error", "eta-norm", "kappa-error", "fixed-point-distance", "pl-sup-error"):
    Ns = [8, 16, 32] if case in ("fixed-point-distance", "pl-sup-error") else [8, 16, 32, 64]
    table = convergence_study(case, Ns, imm)
    values = ", ".join(f"{v:.2e}" for _, v in table.rows)
    print(f"{case:22s} slope {table.slope:6.2f}   ({values})")

# the mesh Laplacian of a sampled function approaches the limit operator,
# here with different functions on the two checkers components
fp = trig_field(1.0, (1, 1), 0.1, lattice=imm.lattice)
fm = trig_field(0.5, (0, 1), 0.7, const=0.3, lattice=imm.lattice)
Ns = [8, 16, 32, 64]
res = [limit_residual(imm, fp, N, fm) for N in Ns]
print(f"{'limit-residual':22s} slope {loglog_slope(Ns, res):6.2f}")
