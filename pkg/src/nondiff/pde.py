"""Method-of-lines solver for the divergence and non-divergence forms.

Space is discretised by cell-centred finite volumes on ``[-x_max, x_max]``
with zero-flux (Neumann) ends.  Time is advanced by the TR-BDF2 scheme
written as a three-stage ESDIRK: an L-stable, second-order one-step method
whose implicit stages share the same iteration matrix ``I - d*dt*J``.  The
Jacobian ``J`` of the 1-D stencil is tridiagonal, so each stage is a
tridiagonal Newton solve (LAPACK ``gttrf/gttrs``).

The embedded third-order companion gives the local error estimate, which is
filtered through ``(I - d*dt*J)^{-1}`` to stay meaningful on stiff modes.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .diffusivity import (
    DEFAULT_TOL,
    PolynomialDiffusivity,
    dD_dv,
    D_of_v,
    eval_dP,
    eval_P,
)
from .profiles import Field1D, mass

log = logging.getLogger(__name__)

#: roundoff undershoots above this level are clamped to zero inside P
POSITIVITY_TOL = 1e-12
#: a run is flagged when a boundary-adjacent cell exceeds this value
BOUNDARY_TOL = 1e-10

# TR-BDF2 coefficients (gamma = 2 - sqrt 2)
_D = 1.0 - 0.5 * math.sqrt(2.0)
_W = 0.25 * math.sqrt(2.0)
_ERR = ((4.0 * _W - 1.0) / 3.0, -1.0 / 3.0, 2.0 * _D / 3.0)

_MAX_NEWTON = 10
_NEWTON_TOL = 1e-3


class Form(str, enum.Enum):
    DIVERGENCE = "div"
    NONDIVERGENCE = "nondiv"


class SolverError(RuntimeError):
    """Base class for integration failures; carries the last good state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StiffnessError(SolverError):
    """The step size fell below ``1e-14 * t_final``."""


class NegativeValueError(ValueError):
    """Field values below ``-POSITIVITY_TOL`` were passed to a diffusivity."""


@dataclass(frozen=True)
class SolverConfig:
    x_max: float = 200.0
    n_cells: int = 10_000
    t_final: float = 10.0
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    form: Form = Form.DIVERGENCE
    max_step: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "form", Form(self.form))
        if not self.x_max > 0.0:
            raise ValueError("x_max must be positive")
        if int(self.n_cells) != self.n_cells or self.n_cells < 16:
            raise ValueError(f"n_cells must be an integer >= 16, got {self.n_cells}")
        if not self.t_final > 0.0:
            raise ValueError("t_final must be positive")
        for name in ("rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not 0.0 < val <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {val}")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")


@dataclass
class SolverState:
    """Integrator state between calls to :func:`advance`.

    Besides the step counters it keeps the run monitors: the smallest cell
    value seen at any accepted step, the largest mass drift from the first
    state, and whether the solution reached the domain ends.
    """

    field: Field1D
    step_count: int = 0
    last_dt: float = 0.0
    rejected_steps: int = 0
    next_dt: float | None = None
    mass0: float | None = None
    max_mass_drift: float = 0.0
    min_value: float = math.inf
    boundary_flag: bool = False

    def __post_init__(self) -> None:
        if self.mass0 is None:
            self.mass0 = mass(self.field)
        self.min_value = min(self.min_value, float(np.min(self.field.values)))


# -- spatial operators --------------------------------------------------------

def _clamp(u):
    return np.maximum(u, 0.0)


def _validated(values):
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite field values")
    if np.min(values) < -POSITIVITY_TOL:
        raise NegativeValueError(
            f"field minimum {np.min(values):.3e} is below -{POSITIVITY_TOL:g}"
        )
    return values


def _div_rhs(u, poly, h):
    F = eval_P(poly, _clamp(0.5 * (u[1:] + u[:-1]))) * np.diff(u) / h
    rhs = np.empty_like(u)
    rhs[0] = F[0]
    rhs[1:-1] = F[1:] - F[:-1]
    rhs[-1] = -F[-1]
    return rhs / h


def _div_jac(u, poly, h):
    m = _clamp(0.5 * (u[1:] + u[:-1]))
    Pm = eval_P(poly, m)
    half_dPg = 0.5 * eval_dP(poly, m) * np.diff(u) / h
    A = (half_dPg - Pm / h) / h  # dF_j/du_j / h
    B = (half_dPg + Pm / h) / h  # dF_j/du_{j+1} / h
    diag = np.zeros_like(u)
    diag[:-1] += A
    diag[1:] -= B
    return -A, diag, B


def _laplacian(v, h):
    lap = np.empty_like(v)
    lap[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    lap[0] = v[1] - v[0]
    lap[-1] = v[-2] - v[-1]
    return lap / (h * h)


def _nondiv_rhs(v, poly, h, tol=DEFAULT_TOL):
    return D_of_v(poly, _clamp(v), tol) * _laplacian(v, h)


def _nondiv_jac(v, poly, h, tol=DEFAULT_TOL):
    vc = _clamp(v)
    D = D_of_v(poly, vc, tol)
    off = D / (h * h)
    centre = np.full_like(v, -2.0)
    centre[0] = centre[-1] = -1.0
    diag = dD_dv(poly, vc, tol) * _laplacian(v, h) + centre * off
    return off[1:].copy(), diag, off[:-1].copy()


def semidiscretize_divergence(f: Field1D, poly: PolynomialDiffusivity) -> np.ndarray:
    """Finite-volume ``du/dt`` for ``u_t = (P(u) u_x)_x`` with zero-flux ends.

    Face fluxes are ``P((u_i + u_{i+1})/2) (u_{i+1} - u_i) / h``.
    """
    return _div_rhs(_validated(f.values), poly, f.h)


def semidiscretize_nondivergence(f: Field1D, poly: PolynomialDiffusivity,
                                 tol: float = DEFAULT_TOL) -> np.ndarray:
    """``dv/dt = D(v_i) (v_{i+1} - 2 v_i + v_{i-1}) / h^2`` with mirrored ghosts."""
    return _nondiv_rhs(_validated(f.values), poly, f.h, tol)


def _operators(form):
    if form is Form.DIVERGENCE:
        return _div_rhs, _div_jac
    return _nondiv_rhs, _nondiv_jac


# -- time stepping ------------------------------------------------------------

class _Factor:
    """LU factors of ``I - c*J`` for a tridiagonal ``J = (dl, d, du)``."""

    def __init__(self, jac, c):
        dl, d, du = jac
        self.lu = dgttrf(-c * dl, 1.0 - c * d, -c * du)
        if self.lu[-1] != 0:
            raise np.linalg.LinAlgError("singular iteration matrix")

    def solve(self, b):
        dl, d, du, du2, ipiv, _ = self.lu
        x, info = dgttrs(dl, d, du, du2, ipiv, b)
        if info != 0:
            raise np.linalg.LinAlgError("tridiagonal solve failed")
        return x


def _newton(rhs_fn, jac_fn, z, b, c, factor, scale, args):
    """Solve ``z - c*f(z) = b``; returns ``(z, factor)`` or ``(None, factor)``."""
    refreshed = False
    while True:
        zk = z.copy()
        prev = math.inf
        for _ in range(_MAX_NEWTON):
            g = zk - c * rhs_fn(zk, *args) - b
            dz = factor.solve(g)
            zk -= dz
            if not np.all(np.isfinite(zk)):
                break
            nrm = float(np.max(np.abs(dz) / scale))
            if nrm <= _NEWTON_TOL:
                return zk, factor
            if nrm > 2.0 * prev:
                break
            prev = nrm
        if refreshed:
            return None, factor
        # stale Jacobian: rebuild at the current iterate and try once more
        refreshed = True
        base = zk if np.all(np.isfinite(zk)) else z
        factor = _Factor(jac_fn(base, *args), c)


def _initial_dt(u, f, config, span):
    scale = config.abs_tol + config.rel_tol * np.abs(u)
    d0 = float(np.max(np.abs(u) / scale))
    d1 = float(np.max(np.abs(f) / scale))
    dt = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(dt, config.max_step, span)


def advance(state: SolverState, poly: PolynomialDiffusivity, config: SolverConfig,
            t_target: float,
            on_step: Callable[[SolverState], None] | None = None) -> SolverState:
    """Integrate ``state`` forward to exactly ``t_target``.

    Each accepted step satisfies ``|err_i| <= rel_tol*|u_i| + abs_tol``.
    Steps whose result dips below ``-POSITIVITY_TOL`` are rejected and
    retried with a smaller step.  ``on_step`` is called after every
    accepted step.

    Raises
    ------
    StiffnessError
        When the step size underflows ``1e-14 * t_final``.
    """
    t = state.field.time
    if t_target < t:
        raise ValueError(f"t_target {t_target} precedes current time {t}")
    state = replace(state, field=state.field.copy())
    if t_target == t:
        return state
    rhs_fn, jac_fn = _operators(config.form)
    h = state.field.h
    args = (poly, h)
    u = state.field.values
    dt_min = 1e-14 * config.t_final
    f1 = rhs_fn(u, *args)
    dt = state.next_dt or _initial_dt(u, f1, config, t_target - t)
    facmax = 5.0

    while t < t_target:
        dt = min(dt, config.max_step)
        last = t + dt >= t_target * (1.0 - 1e-14)
        step = t_target - t if last else dt
        if step < dt_min:
            raise StiffnessError(f"step size {step:.3e} underflowed at t={t:.6g}",
                                 state)
        scale = config.abs_tol + config.rel_tol * np.abs(u)
        c = _D * step
        factor = _Factor(jac_fn(u, *args), c)

        z2, factor = _newton(rhs_fn, jac_fn, u + 2.0 * c * f1, u + c * f1,
                             c, factor, scale, args)
        z3 = None
        if z2 is not None:
            f2 = (z2 - u) / c - f1
            b3 = u + _W * step * (f1 + f2)
            guess = u + (z2 - u) / (2.0 * _D)
            z3, factor = _newton(rhs_fn, jac_fn, guess, b3, c, factor, scale, args)
        if z3 is None:
            state.rejected_steps += 1
            dt = 0.5 * step
            facmax = 1.0
            log.debug("Newton failure at t=%g, retrying with dt=%g", t, dt)
            continue

        f3 = (z3 - b3) / c
        est = step * (_ERR[0] * f1 + _ERR[1] * f2 + _ERR[2] * f3)
        est = factor.solve(est)
        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(u), np.abs(z3))
        err = float(np.max(np.abs(est) / scale))
        negative = float(np.min(z3)) < -POSITIVITY_TOL
        if err > 1.0 or negative:
            state.rejected_steps += 1
            fac = 0.5 if negative else max(0.2, 0.9 * err ** (-1.0 / 3.0))
            dt = step * min(fac, 0.9)
            facmax = 1.0
            continue

        # accepted
        t = t_target if last else t + step
        u = z3
        f1 = rhs_fn(u, *args)
        state.field = state.field.with_values(u, time=t)
        state.step_count += 1
        state.last_dt = step
        state.min_value = min(state.min_value, float(np.min(u)))
        if config.form is Form.DIVERGENCE:
            drift = abs(mass(state.field) - state.mass0)
            state.max_mass_drift = max(state.max_mass_drift, drift)
        if max(abs(u[0]), abs(u[-1])) > BOUNDARY_TOL:
            state.boundary_flag = True
        fac = 5.0 if err == 0.0 else 0.9 * err ** (-1.0 / 3.0)
        proposal = step * min(facmax, max(0.2, fac))
        if not last or proposal < dt:
            dt = proposal
        state.next_dt = dt
        facmax = 5.0
        if on_step is not None:
            on_step(state)
    return state


def geometric_times(t_first: float, t_final: float, count: int) -> np.ndarray:
    """``count`` log-spaced output times from ``t_first`` to ``t_final``."""
    if count < 1:
        raise ValueError("count must be positive")
    if count == 1:
        return np.array([float(t_final)])
    if not 0.0 < t_first <= t_final:
        raise ValueError("need 0 < t_first <= t_final")
    times = np.geomspace(t_first, t_final, count)
    times[-1] = t_final
    return times


def run(u0: Field1D, poly: PolynomialDiffusivity, config: SolverConfig,
        output_times: Sequence[float],
        on_step: Callable[[SolverState], None] | None = None,
        ) -> tuple[list[Field1D], SolverState]:
    """Solve from ``u0`` and return the snapshots at ``output_times``."""
    if u0.n_cells != config.n_cells or u0.x_max != config.x_max:
        raise ValueError("initial field does not match the solver grid")
    times = sorted(float(t) for t in output_times)
    if times and times[0] < u0.time:
        raise ValueError("output times precede the initial time")
    state = SolverState(u0.copy())
    snapshots = []
    for t_out in times:
        state = advance(state, poly, config, t_out, on_step=on_step)
        snapshots.append(state.field.copy())
    return snapshots, state
