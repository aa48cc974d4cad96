"""
Rates with adaptive perturbations
=================================

When delta and eta are tied to the current residual and error on a
subsequence of steps, the AWCGA keeps the rate of the exact algorithm up to
the factor (1 + eta_0).
"""

# %%
import numpy as np

from awcga.scenarios import rate_l2_dense, rate_l2_gap2, rate_l3_corollary
from awcga.schedules import adaptive_constant
from awcga.space import SpaceSpec

print("adaptive factor in l_2:", adaptive_constant(SpaceSpec(2, 2)), "= 1/2304")

# %%
# Three instances: a flat element in l_2 adaptive on every step, the same
# element adaptive on even steps only, and decaying weights in l_3.
for preset in (rate_l2_dense, rate_l2_gap2, rate_l3_corollary):
    res = preset()
    rep = res.info["report"]
    print(f"{res.name:18s} C={rep.C:.3f} eta0={rep.eta0:.3g} "
          f"max observed/bound={rep.ratio.max():.3f} violations={len(rep.violations)}")

# %%
# On the gap-2 preset only even steps are adaptive; odd steps may waste up
# to 50% in the error.  N(n) counts the adaptive steps so far.
rep = rate_l2_gap2().info["report"]
for k in (1, 2, 3, 10, 100, 255):
    print(f"n={k:3d}  N={rep.N[k - 1]:3d}  ||f_n||={rep.observed[k - 1]:.4f}  bound={rep.bound[k - 1]:.4f}")

# %%
# The one-step estimate of E_{n+1} recorded in each trace is never exceeded.
res = rate_l3_corollary()
print("one-step violations:", res.info["bound_violations"])
b = res.trace.column("bound_E_next")[:-1]
E = res.trace.column("E_n")[1:]
print("min slack of E_{n+1} under its bound:", float(np.min(b - E)))
