"""Long-time asymptotics: self-similar collapse, Gaussian envelopes, barriers.

Nonlinear solutions are compared with the heat kernel of the linearised
problem (diffusivity ``a0 = P(0)``) after the diffusive rescaling

    xi = x / sqrt(4 a0 t),    U = sqrt(4 pi a0 t) u,

under which the kernel collapses to ``exp(-xi^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diffusivity import PolynomialDiffusivity, eval_P, psi
from .profiles import Field1D, mass

XI_WINDOW = 3.0
FLOOR = 1e-8


@dataclass(frozen=True)
class BarrierParams:
    """Exponent ``s``, diffusivity bound ``beta`` and dimension ``d`` of
    ``F(x, t) = (t+1)^-s exp(-|x|^2 / (4 beta (t+1)))``."""

    s: float
    beta: float
    d: int = 1

    def __post_init__(self) -> None:
        if not (self.s > 0.0 and self.beta > 0.0):
            raise ValueError("s and beta must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")

    def admissible(self, a0: float) -> bool:
        """Whether ``beta >= a0`` and ``s <= a0 d / (2 beta)``."""
        return self.beta >= a0 and self.s <= a0 * self.d / (2.0 * self.beta)


@dataclass
class DiagnosticsReport:
    times: np.ndarray
    l2_errors: np.ndarray
    slope: float
    c1_series: np.ndarray
    c2_series: np.ndarray
    ratio_series: np.ndarray
    min_values: np.ndarray = field(default_factory=lambda: np.array([]))
    masses: np.ndarray = field(default_factory=lambda: np.array([]))

    def rows(self):
        for k, t in enumerate(self.times):
            yield (t, self.l2_errors[k], self.c1_series[k], self.c2_series[k],
                   self.ratio_series[k], self.min_values[k], self.masses[k])


def rescale_self_similar(f: Field1D, P0: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(xi, U)`` for the diffusive similarity variables."""
    if not f.time > 0.0:
        raise ValueError("rescaling needs t > 0")
    xi = f.x / math.sqrt(4.0 * P0 * f.time)
    U = math.sqrt(4.0 * math.pi * P0 * f.time) * f.values
    return xi, U


def l2_error_vs_gaussian(xi: np.ndarray, U: np.ndarray,
                         xi_window: float = XI_WINDOW) -> float:
    """Trapezoidal ``||U - exp(-xi^2)||_2`` over ``|xi| <= xi_window``."""
    xi = np.asarray(xi, dtype=float)
    U = np.asarray(U, dtype=float)
    if np.any(np.diff(xi) <= 0.0):
        raise ValueError("xi must be strictly increasing")
    if xi_window <= 0.0:
        raise ValueError("xi_window must be positive")
    if xi[0] > -xi_window or xi[-1] < xi_window:
        raise ValueError(
            f"window |xi| <= {xi_window} exceeds the data range "
            f"[{xi[0]:.4g}, {xi[-1]:.4g}]"
        )
    inside = np.abs(xi) <= xi_window
    r = U[inside] - np.exp(-xi[inside] ** 2)
    return float(math.sqrt(np.trapezoid(r * r, xi[inside])))


def fit_decay_slope(times, errors, t_min: float | None = None) -> float:
    """Least-squares slope of ``log(error)`` against ``log(t)``.

    Points with ``t < t_min`` are dropped when ``t_min`` is given.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(errors, dtype=float)
    if t.shape != e.shape:
        raise ValueError("times and errors differ in length")
    if t_min is not None:
        keep = t >= t_min
        t, e = t[keep], e[keep]
    if t.size < 3:
        raise ValueError("need at least three points to fit a slope")
    if np.any(t <= 0.0) or np.any(e <= 0.0):
        raise ValueError("times and errors must be positive")
    slope, _ = np.polyfit(np.log(t), np.log(e), 1)
    return float(slope)


def sandwich_envelope(f: Field1D, a0: float, d: int = 1,
                      xi_window: float = XI_WINDOW,
                      floor: float = FLOOR) -> tuple[float, float]:
    """Tightest ``c1, c2`` with ``c2 g <= t^(d/2) u <= c1 g``, ``g = exp(-x^2/4 a0 t)``.

    Only cells with ``|xi| <= xi_window`` and ``u >= floor`` take part.
    """
    t = f.time
    if not t > 0.0:
        raise ValueError("envelope needs t > 0")
    x = f.x
    xi = x / math.sqrt(4.0 * a0 * t)
    ok = (np.abs(xi) <= xi_window) & (f.values >= floor)
    if not np.any(ok):
        raise ValueError("no admissible cells for the envelope")
    r = t ** (0.5 * d) * f.values[ok] * np.exp(x[ok] ** 2 / (4.0 * a0 * t))
    return float(np.max(r)), float(np.min(r))


def barrier_eval(p: BarrierParams, x, t):
    """``(t+1)^-s exp(-|x|^2 / (4 beta (t+1)))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be non-negative")
    x = np.asarray(x, dtype=float)
    out = (t + 1.0) ** (-p.s) * np.exp(-x * x / (4.0 * p.beta * (t + 1.0)))
    return float(out) if out.ndim == 0 else out


def barrier_residual(p: BarrierParams, a0: float, P_value, x, t):
    """Bracket of ``L w / (C F)`` for the barrier ``w = C F``:

    ``|x|^2 (beta - P) / (4 beta^2 (t+1)^2) + (d P - 2 s beta) / (2 beta (t+1))``.

    Non-negative whenever ``a0 <= P <= beta`` and ``s <= a0 d / (2 beta)``.
    """
    P_value = np.asarray(P_value, dtype=float)
    if np.any(P_value < a0):
        raise ValueError("P_value must be at least a0")
    x = np.asarray(x, dtype=float)
    tp1 = np.asarray(t, dtype=float) + 1.0
    b = p.beta
    out = (x * x / (4.0 * b * b * tp1 * tp1) * (b - P_value)
           + (p.d * P_value - 2.0 * p.s * b) / (2.0 * b * tp1))
    return float(out) if out.ndim == 0 else out


def barrier_check(f: Field1D, poly: PolynomialDiffusivity, d: int = 1,
                  s: float | None = None) -> float:
    """Smallest barrier residual over the grid at ``f.time``.

    ``beta`` is the largest diffusivity ``P(u)`` found in ``f``; ``s``
    defaults to the largest admissible value ``a0 d / (2 beta)``.
    """
    P_vals = eval_P(poly, np.maximum(f.values, 0.0))
    beta = float(np.max(P_vals))
    if s is None:
        s = poly.a0 * d / (2.0 * beta)
    p = BarrierParams(s, beta, d)
    return float(np.min(barrier_residual(p, poly.a0, P_vals, f.x, f.time)))


def _check_same_grid(a: Field1D, b: Field1D) -> None:
    if a.n_cells != b.n_cells or not math.isclose(a.x_max, b.x_max, rel_tol=1e-12):
        raise ValueError("fields live on different grids")
    if not math.isclose(a.time, b.time, rel_tol=1e-12, abs_tol=1e-14):
        raise ValueError(f"fields are at different times ({a.time} vs {b.time})")


def mapping_consistency(u_field: Field1D, v_field: Field1D,
                        poly: PolynomialDiffusivity) -> float:
    """``max |v - psi(u)| / max(1, max v)`` between the two PDE forms."""
    _check_same_grid(u_field, v_field)
    mapped = psi(poly, np.maximum(u_field.values, 0.0))
    vmax = float(np.max(v_field.values)) if v_field.n_cells else 0.0
    return float(np.max(np.abs(v_field.values - mapped)) / max(1.0, vmax))


@dataclass
class OrderingReport:
    times: np.ndarray
    minima: np.ndarray
    violations: np.ndarray | None = None
    ordered: str | None = None  # "a>=b", "b>=a" or None when the ICs cross

    def positive(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.minima >= -tol))


def positivity_and_comparison_report(run_a: Sequence[Field1D],
                                     run_b: Sequence[Field1D] | None = None,
                                     ) -> OrderingReport:
    """Per-snapshot minima of ``run_a`` and, for ordered initial data, the
    largest pointwise violation of that ordering in ``run_b``.

    The first snapshot of each run is taken as its initial condition.
    """
    times = np.array([s.time for s in run_a])
    minima = np.array([float(np.min(s.values)) for s in run_a])
    report = OrderingReport(times, minima)
    if run_b is None:
        return report
    if len(run_b) != len(run_a):
        raise ValueError("runs have different numbers of snapshots")
    for a, b in zip(run_a, run_b):
        _check_same_grid(a, b)
    a0, b0 = run_a[0].values, run_b[0].values
    if np.all(a0 >= b0):
        hi, lo, report.ordered = run_a, run_b, "a>=b"
    elif np.all(b0 >= a0):
        hi, lo, report.ordered = run_b, run_a, "b>=a"
    else:
        return report
    report.violations = np.array(
        [max(0.0, float(np.max(l.values - h.values))) for h, l in zip(hi, lo)]
    )
    return report


def build_report(snapshots: Sequence[Field1D], a0: float, d: int = 1,
                 xi_window: float = XI_WINDOW, floor: float = FLOOR,
                 t_min: float = 1.0) -> DiagnosticsReport:
    """Collect L2 errors, envelopes and monitors for a series of snapshots.

    Quantities that are undefined for a snapshot (zero mass, empty
    envelope) are reported as NaN, as is the slope when fewer than three
    usable points remain after dropping ``t < t_min``.
    """
    n = len(snapshots)
    times = np.array([s.time for s in snapshots], dtype=float)
    l2 = np.full(n, np.nan)
    c1 = np.full(n, np.nan)
    c2 = np.full(n, np.nan)
    for k, s in enumerate(snapshots):
        if s.time <= 0.0 or not np.any(s.values != 0.0):
            continue
        xi, U = rescale_self_similar(s, a0)
        l2[k] = l2_error_vs_gaussian(xi, U, xi_window)
        try:
            c1[k], c2[k] = sandwich_envelope(s, a0, d, xi_window, floor)
        except ValueError:
            pass
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = c1 / c2
    usable = np.isfinite(l2) & (l2 > 0.0) & (times >= t_min)
    try:
        slope = fit_decay_slope(times[usable], l2[usable])
    except ValueError:
        slope = math.nan
    return DiagnosticsReport(
        times=times,
        l2_errors=l2,
        slope=slope,
        c1_series=c1,
        c2_series=c2,
        ratio_series=ratio,
        min_values=np.array([float(np.min(s.values)) for s in snapshots]),
        masses=np.array([mass(s) for s in snapshots]),
    )
