"""Grid fields, initial profiles and closed-form reference solutions."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.special import erf


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on ``[-x_max, x_max]``."""

    x_max: float
    n_cells: int

    def __post_init__(self) -> None:
        if not self.x_max > 0.0:
            raise ValueError(f"x_max must be positive, got {self.x_max}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"n_cells must be a positive integer, got {self.n_cells}")
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def h(self) -> float:
        return 2.0 * self.x_max / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        # (i + 1/2) - n/2 is exact in binary, so x[i] == -x[n-1-i] exactly
        i = np.arange(self.n_cells, dtype=float)
        return (i + 0.5 - 0.5 * self.n_cells) * self.h

    @property
    def faces(self) -> np.ndarray:
        i = np.arange(self.n_cells + 1, dtype=float)
        return (i - 0.5 * self.n_cells) * self.h


@dataclass
class Field1D:
    """Cell-centred profile ``u(x_i, t)`` on a :class:`Grid`."""

    x_max: float
    n_cells: int
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n_cells,):
            raise ValueError(
                f"values has shape {self.values.shape}, expected ({self.n_cells},)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if self.time < 0.0:
            raise ValueError("time must be non-negative")

    @classmethod
    def on(cls, grid: Grid, values, time: float = 0.0) -> "Field1D":
        return cls(grid.x_max, grid.n_cells, values, time)

    @property
    def grid(self) -> Grid:
        return Grid(self.x_max, self.n_cells)

    @property
    def h(self) -> float:
        return 2.0 * self.x_max / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return self.grid.centers

    def with_values(self, values, time: float | None = None) -> "Field1D":
        return replace(self, values=np.asarray(values, dtype=float),
                       time=self.time if time is None else time)

    def copy(self) -> "Field1D":
        return replace(self, values=self.values.copy())


def mass(f: Field1D) -> float:
    """Midpoint-rule integral ``h * sum(values)``."""
    return float(f.h * np.sum(f.values))


# -- pointwise profiles -------------------------------------------------------

def box_profile(x0: float, x):
    """Unit-area box: ``1/(2 x0)`` on ``|x| <= x0`` and zero outside."""
    if x0 <= 0.0:
        raise ValueError("x0 must be positive")
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= x0, 0.5 / x0, 0.0)
    return float(out) if out.ndim == 0 else out


def algebraic_prefactor(x0: float, gamma: float) -> float:
    return (gamma - 1.0) / (2.0 * (x0 * (gamma - 1.0) + 1.0))


def algebraic_profile(x0: float, gamma: float, x):
    """Unit-mass plateau of half-width ``x0`` with tails ``(|x|-x0+1)^-gamma``."""
    if x0 <= 0.0:
        raise ValueError("x0 must be positive")
    if not gamma > 1.0:
        raise ValueError(f"gamma must exceed 1 for finite mass, got {gamma}")
    c = algebraic_prefactor(x0, gamma)
    ax = np.abs(np.asarray(x, dtype=float))
    tail = np.maximum(ax - x0 + 1.0, 1.0) ** (-gamma)
    out = c * np.where(ax <= x0, 1.0, tail)
    return float(out) if out.ndim == 0 else out


def gaussian_fundamental(P0: float, x, t: float):
    """Heat kernel ``(4 pi P0 t)^(-1/2) exp(-x^2 / (4 P0 t))``."""
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if not P0 > 0.0:
        raise ValueError(f"P0 must be positive, got {P0}")
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x / (4.0 * P0 * t)) / np.sqrt(4.0 * np.pi * P0 * t)
    return float(out) if out.ndim == 0 else out


def exact_heat_box(x0: float, D: float, x, t: float):
    """Exact solution of ``u_t = D u_xx`` on the line from the unit box."""
    if x0 <= 0.0 or D <= 0.0 or not t > 0.0:
        raise ValueError("x0, D and t must be positive")
    x = np.asarray(x, dtype=float)
    s = np.sqrt(4.0 * D * t)
    out = (erf((x + x0) / s) - erf((x - x0) / s)) / (4.0 * x0)
    return float(out) if out.ndim == 0 else out


# -- initial-profile variants ------------------------------------------------

@dataclass(frozen=True)
class Box:
    x0: float = 1.0

    def __post_init__(self) -> None:
        if not self.x0 > 0.0:
            raise ValueError("x0 must be positive")

    def __call__(self, x):
        return box_profile(self.x0, x)

    def sample(self, grid: Grid) -> Field1D:
        # exact cell averages: only the cells straddling +-x0 differ from
        # centre sampling
        faces = grid.faces
        lo = np.clip(faces[:-1], -self.x0, self.x0)
        hi = np.clip(faces[1:], -self.x0, self.x0)
        return Field1D.on(grid, (hi - lo) / grid.h * (0.5 / self.x0))


@dataclass(frozen=True)
class AlgebraicDecay:
    x0: float = 1.0
    gamma: float = 3.0

    def __post_init__(self) -> None:
        if not self.x0 > 0.0:
            raise ValueError("x0 must be positive")
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1 for finite mass, got {self.gamma}")

    def __call__(self, x):
        return algebraic_profile(self.x0, self.gamma, x)

    def sample(self, grid: Grid) -> Field1D:
        return Field1D.on(grid, self(grid.centers))


@dataclass(frozen=True)
class Gaussian:
    """Heat kernel evaluated at the offset time ``t0``."""

    P0: float = 1.0
    t0: float = 1.0

    def __post_init__(self) -> None:
        if not (self.P0 > 0.0 and self.t0 > 0.0):
            raise ValueError("P0 and t0 must be positive")

    def __call__(self, x):
        return gaussian_fundamental(self.P0, x, self.t0)

    def sample(self, grid: Grid) -> Field1D:
        return Field1D.on(grid, self(grid.centers))


@dataclass(frozen=True)
class Zero:
    """Identically zero profile (no mass); used for the trivial-solution checks."""

    def __call__(self, x):
        out = np.zeros_like(np.asarray(x, dtype=float))
        return float(out) if out.ndim == 0 else out

    def sample(self, grid: Grid) -> Field1D:
        return Field1D.on(grid, np.zeros(grid.n_cells))


InitialProfile = Union[Box, AlgebraicDecay, Gaussian, Zero]


def make_profile(ic: str, x0: float = 1.0, gamma: float = 3.0,
                 P0: float = 1.0, t0: float = 1.0) -> InitialProfile:
    """Build a profile from its config tag ``box|algebraic|gaussian|zero``."""
    if ic == "box":
        return Box(x0)
    if ic == "algebraic":
        return AlgebraicDecay(x0, gamma)
    if ic == "gaussian":
        return Gaussian(P0, t0)
    if ic == "zero":
        return Zero()
    raise ValueError(f"unknown initial condition {ic!r}")


def sample_positions(profile: InitialProfile, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` particle positions distributed like ``profile``."""
    if isinstance(profile, Box):
        return rng.uniform(-profile.x0, profile.x0, size=n)
    if isinstance(profile, Gaussian):
        return rng.normal(0.0, np.sqrt(2.0 * profile.P0 * profile.t0), size=n)
    if isinstance(profile, AlgebraicDecay):
        x0, g = profile.x0, profile.gamma
        c = algebraic_prefactor(x0, g)
        p_core = 2.0 * x0 * c
        u = rng.uniform(size=n)
        sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
        core = u < p_core
        # tail |x| = x0 - 1 + s, s >= 1 with density ~ s^-gamma (Pareto)
        w = (u - p_core) / (1.0 - p_core)
        s = (1.0 - w) ** (-1.0 / (g - 1.0))
        r = np.where(core, u / p_core * x0, x0 - 1.0 + s)
        return sign * r
    raise ValueError(f"cannot sample particles from {profile!r}")
