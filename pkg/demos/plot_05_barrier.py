"""
The barrier supersolution
=========================

``F(x, t) = (t + 1)^-s exp(-x^2 / (4 beta (t + 1)))`` is a supersolution of
``w_t = P w_xx`` whenever ``a0 <= P <= beta`` and ``s <= a0 / (2 beta)``.
We scan the residual for an admissible choice and for one just past the
threshold.
"""

import numpy as np

from nondiff import BarrierParams, barrier_residual

a0, beta = 1.0, 2.0
x = np.linspace(-30, 30, 601)[:, None]
t = np.linspace(0, 50, 101)[None, :]

# %%
for s in (a0 / (2 * beta), 1.1 * a0 / (2 * beta)):
    p = BarrierParams(s, beta)
    worst = min(barrier_residual(p, a0, P, x, t).min() for P in np.linspace(a0, beta, 11))
    print(f"s = {s:.3f} (admissible: {p.admissible(a0)}): min residual {worst:+.3e}")
