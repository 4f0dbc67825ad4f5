"""Einstein free-jump random walk with a density-dependent waiting time.

Every particle performs symmetric free jumps drawn from a fixed jump
distribution.  Consecutive jumps are separated by the waiting time

    tau(v) = M2 / (2 D(v)),

where ``M2`` is the second moment of the jump distribution and ``D`` the
non-divergence diffusivity evaluated at the local particle density ``v``.
The density is re-estimated on a histogram grid once per macro step and
frozen in between.

Random numbers come from one stream per (macro step, particle chunk),
derived from the ensemble seed with :class:`numpy.random.SeedSequence`, so
results do not depend on the order in which chunks are processed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .diffusivity import DEFAULT_TOL, PolynomialDiffusivity, D_of_v
from .profiles import Field1D, Grid

CHUNK = 1 << 16
# clocks within this relative distance of the target count as arrived
_CLOCK_EPS = 1e-9


@dataclass(frozen=True)
class TwoPoint:
    """Jumps of exactly ``+delta`` or ``-delta`` with equal probability."""

    delta: float

    def __post_init__(self) -> None:
        if self.delta < 0.0:
            raise ValueError("delta must be non-negative")


@dataclass(frozen=True)
class Uniform:
    """Jumps uniform on ``[-delta_max, delta_max]``.

    The default ``delta_max = sqrt(6)`` gives ``M2 / 2 = 1``.
    """

    delta_max: float = math.sqrt(6.0)

    def __post_init__(self) -> None:
        if not self.delta_max > 0.0:
            raise ValueError("delta_max must be positive")


JumpSpec = Union[TwoPoint, Uniform]


def make_jump(kind: str, delta: float | None = None) -> JumpSpec:
    if kind == "twopoint":
        return TwoPoint(math.sqrt(2.0) if delta is None else delta)
    if kind == "uniform":
        return Uniform(math.sqrt(6.0) if delta is None else delta)
    raise ValueError(f"unknown jump distribution {kind!r}")


def second_moment(jump: JumpSpec) -> float:
    if isinstance(jump, TwoPoint):
        return jump.delta ** 2
    if isinstance(jump, Uniform):
        return jump.delta_max ** 2 / 3.0
    raise TypeError(f"not a jump spec: {jump!r}")


def first_moment(jump: JumpSpec) -> float:
    # both distributions are symmetric by construction
    return 0.0


def draw_jumps(jump: JumpSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(jump, TwoPoint):
        return jump.delta * (2.0 * rng.integers(0, 2, size=n) - 1.0)
    return rng.uniform(-jump.delta_max, jump.delta_max, size=n)


def diffusivity_from_moments(jump: JumpSpec, tau: float) -> float:
    """``D = M2 / (2 tau)``."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    return second_moment(jump) / (2.0 * tau)


def waiting_time(poly: PolynomialDiffusivity, jump: JumpSpec, local_density,
                 tol: float = DEFAULT_TOL):
    """``tau(v) = M2 / (2 D(v))``; tends to ``M2 / (2 a0)`` as ``v -> 0``."""
    return second_moment(jump) / (2.0 * D_of_v(poly, local_density, tol))


@dataclass
class ParticleEnsemble:
    """Particle positions plus the private clock of each particle."""

    positions: np.ndarray
    seed: int
    jump: JumpSpec
    time: float = 0.0
    clocks: np.ndarray | None = None
    macro_steps: int = 0

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 1 or self.positions.size < 1:
            raise ValueError("need a non-empty 1-D array of positions")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")
        if self.clocks is None:
            self.clocks = np.full(self.positions.size, float(self.time))
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

    @property
    def n(self) -> int:
        return self.positions.size


def _reflect(x, x_max):
    # fold back into [-x_max, x_max]; a jump never exceeds the window width
    x = np.where(x > x_max, 2.0 * x_max - x, x)
    return np.where(x < -x_max, -2.0 * x_max - x, x)


def _bin_index(x, grid: Grid):
    idx = np.floor((x + grid.x_max) / grid.h).astype(np.int64)
    return np.clip(idx, 0, grid.n_cells - 1)


def density_estimate(ens: ParticleEnsemble, x_max: float, n_bins: int) -> Field1D:
    """Histogram density ``count_i / (N h)`` on ``n_bins`` cells."""
    if n_bins < 8:
        raise ValueError("n_bins must be at least 8")
    grid = Grid(x_max, n_bins)
    inside = np.abs(ens.positions) <= x_max
    idx = _bin_index(ens.positions[inside], grid)
    counts = np.bincount(idx, minlength=n_bins)
    return Field1D.on(grid, counts / (ens.n * grid.h), time=ens.time)


def step_ensemble(ens: ParticleEnsemble, poly: PolynomialDiffusivity, grid: Grid,
                  dt_macro: float) -> ParticleEnsemble:
    """Advance all particles by one macro step of length ``dt_macro``.

    A particle keeps jumping while its clock is behind the macro-step end;
    each jump advances the clock by ``tau`` looked up from the particle's
    current bin in the density frozen at the start of the step.
    """
    if not dt_macro > 0.0:
        raise ValueError("dt_macro must be positive")
    if grid.n_cells < 1:
        raise ValueError("density grid is empty")
    t_end = ens.time + dt_macro
    out = replace(ens, positions=ens.positions.copy(), clocks=ens.clocks.copy(),
                  time=t_end, macro_steps=ens.macro_steps + 1)
    if second_moment(ens.jump) == 0.0:
        out.clocks[:] = np.maximum(out.clocks, t_end)
        return out

    rho = density_estimate(ens, grid.x_max, grid.n_cells)
    tau_bins = waiting_time(poly, ens.jump, rho.values)
    limit = t_end - _CLOCK_EPS * max(1.0, abs(t_end))
    for c, start in enumerate(range(0, ens.n, CHUNK)):
        sl = slice(start, min(start + CHUNK, ens.n))
        x = out.positions[sl]
        clk = out.clocks[sl]
        rng = np.random.default_rng(
            np.random.SeedSequence(ens.seed, spawn_key=(ens.macro_steps, c)))
        active = np.flatnonzero(clk < limit)
        while active.size:
            xa = x[active]
            tau = tau_bins[_bin_index(xa, grid)]
            x[active] = _reflect(xa + draw_jumps(ens.jump, rng, active.size),
                                 grid.x_max)
            clk[active] += tau
            active = active[clk[active] < limit]
    return out


def evolve(ens: ParticleEnsemble, poly: PolynomialDiffusivity, grid: Grid,
           t_final: float, dt_macro: float | None = None) -> ParticleEnsemble:
    """Repeat :func:`step_ensemble` until ``t_final``.

    ``dt_macro`` defaults to ten times the longest waiting time,
    ``10 M2 / (2 a0)``; the last macro step is shortened to land on
    ``t_final``.
    """
    if dt_macro is None:
        dt_macro = 10.0 * second_moment(ens.jump) / (2.0 * poly.a0)
        if dt_macro == 0.0:
            dt_macro = t_final - ens.time
    while ens.time < t_final * (1.0 - 1e-14):
        ens = step_ensemble(ens, poly, grid, min(dt_macro, t_final - ens.time))
    return ens
