"""
Particles with a density-dependent clock
========================================

Each particle jumps by ``+-delta`` and waits ``tau = delta^2 / (2 D(v))``
between jumps, with ``v`` the local particle density.  With small jumps
the histogram follows the conservative PDE solution; with jumps as large
as the initial box only one or two jumps happen by ``t = 1`` and the
histogram is still far from it.
"""

import numpy as np

from nondiff import (
    Box, Grid, ParticleEnsemble, PolynomialDiffusivity, SolverConfig,
    density_estimate, evolve, run, sample_positions,
)
from nondiff.walk import TwoPoint, Uniform

P = PolynomialDiffusivity((1.0, 1.0))
x_max, bins, cells = 20.0, 80, 4000

cfg = SolverConfig(x_max=x_max, n_cells=cells, t_final=1.0)
(u,), _ = run(Box(1.0).sample(Grid(x_max, cells)), P, cfg, [1.0])
ref = u.values.reshape(bins, -1).mean(axis=1)

# %%
for jump in (Uniform(), TwoPoint(0.4), TwoPoint(0.2), TwoPoint(0.1)):
    rng = np.random.default_rng(0)
    ens = ParticleEnsemble(sample_positions(Box(1.0), 200_000, rng), 0, jump)
    f = density_estimate(evolve(ens, P, Grid(x_max, bins), 1.0), x_max, bins)
    print(f"{jump}: L1 distance to the PDE at t = 1 is {np.sum(np.abs(f.values - ref)) * f.h:.4f}")
