"""
The transition map between the two forms
========================================

A diffusivity ``P(u) = a0 + a1 u + ...`` in divergence form corresponds to
``D(v) = P(psi^-1(v))`` in non-divergence form, where ``psi(u)`` is the
integral of ``P`` from 0 to ``u``.  This script tabulates both sides.
"""

import numpy as np

from nondiff import PolynomialDiffusivity, D_of_v, eval_P, linear_F, psi, psi_inverse

# %%
# A linear diffusivity has a closed-form inverse, so ``D`` can be checked
# against ``a0 + F(v)`` directly.
P = PolynomialDiffusivity((1.0, 1.0))
v = np.array([0.0, 0.5, 1.5, 4.0, 12.0])
print("  v      psi^-1(v)   D(v)      a0 + F(v)")
for vi, ui, Di in zip(v, psi_inverse(P, v), D_of_v(P, v)):
    print(f"{vi:5.1f}   {ui:9.6f}   {Di:8.6f}  {1.0 + linear_F(1.0, 1.0, vi):8.6f}")

# %%
# For the quadratic case there is no such formula; Newton iteration does
# the inversion and the identity ``P(u) = D(psi(u))`` holds to round-off.
Q = PolynomialDiffusivity((1.0, 1.0, 10.0))
u = np.linspace(0.0, 2.0, 9)
gap = np.abs(D_of_v(Q, psi(Q, u)) - eval_P(Q, u))
print(f"\nquadratic: max |D(psi(u)) - P(u)| = {gap.max():.2e} on u in [0, 2]")
