"""Polynomial diffusivities and the change of variable between the two PDE forms.

A diffusivity ``P(u) = a0 + a1 u + ... + an u^n`` with ``a0 > 0`` and all
``ai >= 0`` drives the divergence-form equation ``u_t = (P(u) u_x)_x``.  The
antiderivative

.. math::

    v = \\psi(u) = \\int_0^u P(\\xi)\\,d\\xi

maps its solutions onto solutions of ``v_t = D(v) v_xx`` with
``D(v) = P(psi^{-1}(v))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12
MAX_ITER = 100


class InversionError(ArithmeticError):
    """Raised when ``psi_inverse`` fails to converge.

    The offending input values and the last iterate are kept on the
    exception for inspection.
    """

    def __init__(self, message, v=None, u=None):
        super().__init__(message)
        self.v = v
        self.u = u


@dataclass(frozen=True)
class PolynomialDiffusivity:
    """Non-degenerate polynomial diffusivity with non-negative coefficients.

    Parameters
    ----------
    coefficients:
        ``(a0, a1, ..., an)`` in increasing powers of ``u``.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("at least one coefficient is required")
        if not all(np.isfinite(coeffs)):
            raise ValueError(f"coefficients must be finite, got {coeffs}")
        if coeffs[0] <= 0.0:
            raise ValueError(f"a0 must be strictly positive, got {coeffs[0]}")
        if any(c < 0.0 for c in coeffs):
            raise ValueError(f"coefficients must be non-negative, got {coeffs}")
        object.__setattr__(self, "coefficients", coeffs)
        # P(u) >= a0 > 0 on u >= 0 follows from the two checks above.
        assert eval_P(self, 0.0) > 0.0

    @classmethod
    def parse(cls, text: str) -> "PolynomialDiffusivity":
        """Build from a comma-separated list such as ``"1,1,10"``."""
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(p == "" for p in parts):
            raise ValueError(f"malformed coefficient list: {text!r}")
        try:
            values = tuple(float(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"malformed coefficient list: {text!r}") from exc
        return cls(values)

    @property
    def a0(self) -> float:
        return self.coefficients[0]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 for c in self.coefficients[1:])

    def __str__(self) -> str:
        return ",".join(repr(c) for c in self.coefficients)


def _check_nonnegative(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and non-negative")
    return arr


def _horner(coeffs, u):
    out = np.zeros_like(u) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * u + c
    return out


def _as_output(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def eval_P(poly: PolynomialDiffusivity, u):
    """Evaluate ``P(u)`` by nested multiplication. Accepts scalars or arrays."""
    arr = _check_nonnegative(u, "u")
    return _as_output(_horner(poly.coefficients, arr), u)


def eval_dP(poly: PolynomialDiffusivity, u):
    """Derivative ``P'(u)``."""
    arr = _check_nonnegative(u, "u")
    c = poly.coefficients
    if len(c) == 1:
        return _as_output(np.zeros_like(arr), u)
    deriv = [i * c[i] for i in range(1, len(c))]
    return _as_output(_horner(deriv, arr), u)


def psi(poly: PolynomialDiffusivity, u):
    """Transition map ``psi(u) = sum_i a_i u^(i+1) / (i+1)``."""
    arr = _check_nonnegative(u, "u")
    c = poly.coefficients
    anti = [0.0] + [c[i] / (i + 1) for i in range(len(c))]
    return _as_output(_horner(anti, arr), u)


def psi_inverse(poly: PolynomialDiffusivity, v, tol: float = DEFAULT_TOL):
    """Solve ``psi(u) = v`` for ``u >= 0``.

    Newton's method started from ``v / a0``, which bounds the root from
    above because ``psi(u) >= a0 u``.  Since ``psi`` is increasing and
    convex the iterates fall monotonically onto the root; a bisection step
    on ``[0, v / a0]`` is taken whenever an iterate leaves the current
    bracket (which only happens through rounding).

    Raises
    ------
    InversionError
        If ``|psi(u) - v| <= tol * max(1, v)`` is not met within 100
        iterations.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    v_arr = _check_nonnegative(v, "v")
    a0 = poly.a0
    if poly.is_constant:
        return _as_output(v_arr / a0, v)

    lo = np.zeros_like(v_arr)
    hi = v_arr / a0
    u = hi.copy()
    scale = tol * np.maximum(1.0, v_arr)
    for _ in range(MAX_ITER):
        r = psi(poly, u) - v_arr
        done = np.abs(r) <= scale
        if np.all(done):
            return _as_output(u, v)
        # psi is increasing: r > 0 means u is above the root
        hi = np.where(r > 0.0, np.minimum(hi, u), hi)
        lo = np.where(r < 0.0, np.maximum(lo, u), lo)
        step = r / eval_P(poly, u)
        cand = u - step
        bad = (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        u = np.where(done, u, cand)
    r = psi(poly, u) - v_arr
    if np.all(np.abs(r) <= scale):
        return _as_output(u, v)
    raise InversionError(
        f"psi_inverse did not converge in {MAX_ITER} iterations "
        f"(max residual {np.max(np.abs(r)):.3e})",
        v=v_arr,
        u=u,
    )


def D_of_v(poly: PolynomialDiffusivity, v, tol: float = DEFAULT_TOL):
    """Non-divergence diffusivity ``D(v) = P(psi^{-1}(v))``."""
    return eval_P(poly, psi_inverse(poly, v, tol))


def dD_dv(poly: PolynomialDiffusivity, v, tol: float = DEFAULT_TOL):
    """``dD/dv = P'(u) / P(u)`` with ``u = psi^{-1}(v)``."""
    u = psi_inverse(poly, v, tol)
    return eval_dP(poly, u) / eval_P(poly, u)


def linear_F(a0: float, a1: float, v):
    """Closed-form ``F(v) = -a0 + sqrt(a0^2 + 2 a1 v)`` for ``P = a0 + a1 u``.

    Evaluated as ``2 a1 v / (a0 + sqrt(a0^2 + 2 a1 v))`` to avoid the
    cancellation for small ``a1 v``.
    """
    if a0 <= 0.0:
        raise ValueError("a0 must be positive")
    if a1 < 0.0:
        raise ValueError("a1 must be non-negative")
    arr = _check_nonnegative(v, "v")
    root = np.sqrt(a0 * a0 + 2.0 * a1 * arr)
    return _as_output(2.0 * a1 * arr / (a0 + root), v)
