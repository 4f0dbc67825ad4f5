"""
Gaussian upper and lower envelopes
==================================

For every output time we find the tightest constants with
``c2 exp(-x^2/4t) <= sqrt(t) u <= c1 exp(-x^2/4t)`` on ``|xi| <= 3``.
The ratio ``c1/c2`` shrinks towards one as the solution forgets the box.
"""

from nondiff import Box, Grid, PolynomialDiffusivity, SolverConfig, run, sandwich_envelope

P = PolynomialDiffusivity((1.0, 1.0))
times = [1.0, 2.0, 5.0, 10.0, 20.0]
cfg = SolverConfig(x_max=60.0, n_cells=3000, t_final=times[-1])
snaps, _ = run(Box(1.0).sample(Grid(60.0, 3000)), P, cfg, times)

# %%
print("   t      c1        c2      c1/c2")
for s in snaps:
    c1, c2 = sandwich_envelope(s, P.a0)
    print(f"{s.time:5.1f}  {c1:.5f}  {c2:.5f}  {c1 / c2:.4f}")
