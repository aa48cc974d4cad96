"""
Realizations that never converge
================================

Three constructions in which an admissible sequence of choices keeps the
residual away from zero: persistent perturbations, unbounded errors and a
nonsmooth norm.
"""

# %%
# Perturbations that do not vanish.  With t = 1 and delta = eta = 0.2 a
# scripted realization keeps ||f_n||_q^q >= 1 at every step while passing
# every step condition.
import numpy as np

from awcga.engine import residual
from awcga.scenarios import (default_necessity_instance, finite_branch_scenario,
                             necessity_scenario, nonsmooth_scenario, unbounded_eta_scenario)

inst = default_necessity_instance()
res = necessity_scenario(inst, n_max=100)
print(res.summary())
print("min ||f_n||_q^q:", res.info["min_norm_q"], " min margin:", res.info["min_margin"])
branches = list(res.info["branches"].values())
print("steps using e_0 / e_1:", branches.count("delta"), "/", branches.count("eta"))

# %%
# The residual always has the closed form predicted by the construction.
n = 37
print("max |f_n - closed form| at n=37:", np.abs(residual(res.trace, n) - inst.residual(n)).max())

# %%
# A weakness sequence with sum t_n^2 < infinity traps even the plain WCGA:
# the e_0 component is never touched.
res = finite_branch_scenario(n_max=200)
print(res.summary(), " sum t^p =", round(res.info["sum_t_p"], 4))

# %%
# Unbounded errors: eta_{2k} = k lets the approximant drop back to zero at
# every even step, so ||f_n|| returns to ||f|| infinitely often.
res = unbounded_eta_scenario(n_max=200)
norms = res.trace.column("residual_norm")
print(res.summary())
print("residual at steps 1..6:", np.round(norms[:6], 4))

# %%
# In l_1 the norming functional of e_0 is not unique.  Choosing the wrong
# one selects an element along which no progress is possible.
res = nonsmooth_scenario(dim=2, n_max=50)
con = res.info["construction"]
print(res.summary())
print("F =", con.F, " F' =", con.F_prime, " F(g) =", con.F @ con.g, " F'(g) =", con.F_prime @ con.g)
