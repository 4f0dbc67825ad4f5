"""
Checking the solver against the heat equation
=============================================

With ``P = 1`` the box initial condition has the closed-form solution
``(erf((x + x0)/sqrt(4t)) - erf((x - x0)/sqrt(4t))) / (4 x0)``.  Halving the
cell width should cut the max-norm error by about four.
"""

import numpy as np

from nondiff import Box, Grid, PolynomialDiffusivity, SolverConfig, exact_heat_box, run

P = PolynomialDiffusivity((1.0,))

# %%
prev = None
for n in (400, 800, 1600):
    cfg = SolverConfig(x_max=20.0, n_cells=n, t_final=1.0, rel_tol=1e-10, abs_tol=1e-12)
    u0 = Box(1.0).sample(Grid(cfg.x_max, n))
    (u,), state = run(u0, P, cfg, [1.0])
    err = np.max(np.abs(u.values - exact_heat_box(1.0, 1.0, u.x, 1.0)))
    rate = "" if prev is None else f"   ratio {prev / err:.2f}"
    print(f"n = {n:5d}  steps {state.step_count:4d}  max error {err:.3e}{rate}")
    prev = err
