"""Acceptance criteria, each printed as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary block at
the end of the session lists every criterion.
"""
import math
import os
import time

import numpy as np
import pytest

from nondiff.diagnostics import (
    BarrierParams,
    barrier_residual,
    build_report,
    mapping_consistency,
    sandwich_envelope,
)
from nondiff.diffusivity import PolynomialDiffusivity, psi
from nondiff.pde import Form, SolverConfig, geometric_times, run
from nondiff.profiles import (
    AlgebraicDecay,
    Box,
    Field1D,
    Grid,
    exact_heat_box,
    gaussian_fundamental,
    mass,
    sample_positions,
)
from nondiff.walk import ParticleEnsemble, Uniform, density_estimate, evolve

LINEAR = PolynomialDiffusivity((1.0,))
AFFINE = PolynomialDiffusivity((1.0, 1.0))
QUAD = PolynomialDiffusivity((1.0, 1.0, 10.0))
FIG_TIMES = [float(t) for t in geometric_times(1.0, 10.0, 10)]

MASS_TOL = 1e-8
POS_TOL = -1e-12


class Run:
    """A solve plus the per-step monitor record used by criteria 5 and 6."""

    def __init__(self, name, u0, poly, cfg, times):
        self.name, self.form = name, cfg.form
        self.step_mass, self.step_min = [], []
        m0 = mass(u0)

        def monitor(state):
            self.step_mass.append(abs(mass(state.field) - m0))
            self.step_min.append(float(state.field.values.min()))

        t0 = time.perf_counter()
        snaps, self.state = run(u0, poly, cfg, times, on_step=monitor)
        self.seconds = time.perf_counter() - t0
        self.snaps = [u0] + snaps
        self.mass0 = m0

    def at(self, t):
        return next(s for s in self.snaps if math.isclose(s.time, t, rel_tol=1e-12))

    def output_mass_drift(self):
        return max(abs(mass(s) - self.mass0) for s in self.snaps)

    def output_min(self):
        return min(float(s.values.min()) for s in self.snaps)


def fig_config(**kw):
    base = dict(x_max=200.0, n_cells=10_000, t_final=10.0, rel_tol=1e-6, abs_tol=1e-10)
    base.update(kw)
    return SolverConfig(**base)


@pytest.fixture(scope="session")
def runs():
    return {}


@pytest.fixture(scope="session")
def linear_run(runs):
    cfg = fig_config(t_final=1.0, rel_tol=1e-8, abs_tol=1e-8)
    r = Run("linear oracle", Box(1.0).sample(Grid(200.0, 10_000)), LINEAR, cfg, [1.0])
    runs[r.name] = r
    return r


@pytest.fixture(scope="session")
def fig1_run(runs):
    times = sorted(set(FIG_TIMES) | {2.0})
    r = Run("fig1", Box(1.0).sample(Grid(200.0, 10_000)), AFFINE, fig_config(), times)
    runs[r.name] = r
    return r


@pytest.fixture(scope="session")
def fig2_run(runs):
    r = Run("fig2", Box(1.0).sample(Grid(200.0, 10_000)), QUAD, fig_config(), FIG_TIMES)
    runs[r.name] = r
    return r


@pytest.fixture(scope="session")
def fig3_run(runs):
    cfg = fig_config(x_max=500.0, n_cells=25_000, t_final=50.0)
    times = [float(t) for t in geometric_times(1.0, 50.0, 12)]
    u0 = AlgebraicDecay(1.0, 3.0).sample(Grid(500.0, 25_000))
    r = Run("fig3", u0, AFFINE, cfg, times)
    runs[r.name] = r
    return r


@pytest.fixture(scope="session")
def mapping_runs(runs):
    g = Grid(200.0, 10_000)
    u0 = Box(1.0).sample(g)
    cfg = fig_config(t_final=1.0, rel_tol=1e-8)
    div = Run("map div", u0, AFFINE, cfg, [1.0])
    cfg_v = fig_config(t_final=1.0, rel_tol=1e-8, form=Form.NONDIVERGENCE)
    nondiv = Run("map nondiv", u0.with_values(psi(AFFINE, u0.values)), AFFINE, cfg_v, [1.0])
    runs[div.name], runs[nondiv.name] = div, nondiv
    return div, nondiv


def fig_errors(r, times):
    rep = build_report([r.at(t) for t in times], a0=1.0)
    return rep.l2_errors, rep.slope


def test_criterion_1_linear_oracle(linear_run, record):
    f = linear_run.at(1.0)
    err = float(np.max(np.abs(f.values - exact_heat_box(1.0, 1.0, f.x, 1.0))))
    ok = err <= 1e-4 and linear_run.seconds <= 60.0
    record("criterion 1", ok,
           f"max error {err:.3e} (<= 1e-4), runtime {linear_run.seconds:.1f} s (<= 60 s)")
    assert ok


def test_criterion_2_fig1_decay(fig1_run, record):
    errs, slope = fig_errors(fig1_run, FIG_TIMES)
    decreasing = bool(np.all(np.diff(errs) < 0.0))
    in_band = abs(slope + 1.0) <= 0.3
    record("criterion 2", decreasing and in_band,
           f"strictly decreasing={decreasing}, slope {slope:.4f} (band -1 +/- 0.3)")
    assert decreasing, errs
    assert in_band, f"fitted slope {slope:.4f} outside [-1.3, -0.7]"


def test_criterion_3_fig2_decay(fig1_run, fig2_run, record):
    errs1, _ = fig_errors(fig1_run, FIG_TIMES)
    errs2, slope = fig_errors(fig2_run, FIG_TIMES)
    in_band = abs(slope + 1.0) <= 0.4
    worse = errs2[-1] > errs1[-1]
    record("criterion 3", in_band and worse,
           f"slope {slope:.4f} (band -1 +/- 0.4), final error {errs2[-1]:.4f} "
           f"vs fig1 {errs1[-1]:.4f} (must be larger)")
    assert worse
    assert in_band, f"fitted slope {slope:.4f} outside [-1.4, -0.6]"


def test_criterion_4_fig3_algebraic(fig3_run, record):
    times = [s.time for s in fig3_run.snaps if s.time > 0.0]
    rep = build_report([fig3_run.at(t) for t in times], a0=1.0)
    late = np.array(times) >= 5.0
    decreasing = bool(np.all(np.diff(rep.l2_errors[late]) < 0.0))
    ok = decreasing and rep.slope < 0.0
    record("criterion 4", ok,
           f"decreasing for t>=5: {decreasing}, slope {rep.slope:.4f} (< 0)")
    assert ok


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("NONDIFF_FULL"), reason="set NONDIFF_FULL=1")
def test_fig3_full_scale():
    cfg = fig_config(x_max=2000.0, n_cells=100_000, t_final=100.0)
    times = [float(t) for t in geometric_times(1.0, 100.0, 14)]
    u0 = AlgebraicDecay(1.0, 3.0).sample(Grid(2000.0, 100_000))
    r = Run("fig3 full", u0, AFFINE, cfg, times)
    rep = build_report(r.snaps[1:], a0=1.0)
    late = np.array(times) >= 5.0
    assert np.all(np.diff(rep.l2_errors[late]) < 0.0)
    assert rep.slope < 0.0
    assert r.output_mass_drift() <= MASS_TOL


def test_criterion_5_conservation(runs, linear_run, fig1_run, fig2_run, fig3_run,
                                  mapping_runs, record):
    div = {k: r for k, r in runs.items() if r.form is Form.DIVERGENCE}
    worst_out = max(r.output_mass_drift() for r in div.values())
    worst_step = max(max(r.step_mass) for r in div.values())
    ok = worst_out <= MASS_TOL
    record("criterion 5", ok,
           f"{len(div)} divergence runs, max |mass - 1| {worst_out:.2e} at outputs, "
           f"{worst_step:.2e} over all steps (<= 1e-8)")
    assert ok
    assert worst_step <= MASS_TOL


def test_criterion_6_positivity(runs, linear_run, fig1_run, fig2_run, fig3_run,
                                mapping_runs, record):
    worst = min(r.output_min() for r in runs.values())
    worst_step = min(min(r.step_min) for r in runs.values())
    ok = worst >= POS_TOL
    record("criterion 6", ok,
           f"{len(runs)} runs, min value {worst:.3e} at outputs, "
           f"{worst_step:.3e} over all steps (>= -1e-12)")
    assert ok
    assert worst_step >= POS_TOL


def test_criterion_7_mapping(mapping_runs, record):
    div, nondiv = mapping_runs
    disc = mapping_consistency(div.at(1.0), nondiv.at(1.0), AFFINE)
    ok = disc <= 1e-3
    record("criterion 7", ok, f"mapping_consistency {disc:.3e} (<= 1e-3)")
    assert ok


def test_criterion_8_sandwich(fig1_run, record):
    c1a, c2a = sandwich_envelope(fig1_run.at(2.0), 1.0, 1, 3.0, 1e-8)
    c1b, c2b = sandwich_envelope(fig1_run.at(10.0), 1.0, 1, 3.0, 1e-8)
    g = Grid(200.0, 10_000)
    exact = Field1D.on(g, gaussian_fundamental(1.0, g.centers, 5.0), time=5.0)
    e1, e2 = sandwich_envelope(exact, 1.0, 1, 3.0, 1e-8)
    tight = c1b / c2b < c1a / c2a
    unit = abs(e1 / e2 - 1.0) <= 1e-10
    record("criterion 8", tight and unit,
           f"c1/c2 {c1a / c2a:.4f} at t=2 -> {c1b / c2b:.4f} at t=10, "
           f"exact Gaussian |c1/c2 - 1| = {abs(e1 / e2 - 1):.1e}")
    assert tight and unit


def test_criterion_9_barrier(record):
    rng = np.random.default_rng(20240901)
    n = 1000
    a0 = rng.uniform(0.05, 5.0, n)
    beta = a0 * rng.uniform(1.0, 5.0, n)
    P = a0 + rng.uniform(0.0, 1.0, n) * (beta - a0)
    s = rng.uniform(1e-3, 1.0, n) * a0 / (2.0 * beta)
    x = rng.uniform(-100.0, 100.0, n)
    t = rng.uniform(0.0, 100.0, n)
    res = np.array([barrier_residual(BarrierParams(s[k], beta[k], 1), a0[k], P[k], x[k], t[k])
                    for k in range(n)])
    admissible = all(BarrierParams(s[k], beta[k]).admissible(a0[k]) for k in range(n))
    # s above a0 d / (2 beta) with P = a0 at x = 0
    bad = BarrierParams(1.1 * 1.0 / (2.0 * 2.0), 2.0, 1)
    counter = barrier_residual(bad, 1.0, 1.0, 0.0, 0.0)
    ok = admissible and bool(np.all(res >= 0.0)) and counter < 0.0
    record("criterion 9", ok,
           f"min residual over {n} admissible samples {res.min():.3e} (>= 0), "
           f"counterexample s=0.275>0.25 gives {counter:.4f} (< 0)")
    assert ok


def test_criterion_10_random_walk(record):
    started = time.perf_counter()
    # constant D = 1 with M2 / 2 = 1: displacement from the origin
    ens = ParticleEnsemble(np.zeros(1_000_000), seed=1, jump=Uniform())
    out = evolve(ens, LINEAR, Grid(50.0, 100), 1.0)
    ratio = float(np.mean(out.positions ** 2)) / 2.0

    x_max, bins, n_cells = 20.0, 80, 4000
    rng = np.random.default_rng(2)
    ens = ParticleEnsemble(sample_positions(Box(1.0), 200_000, rng), seed=2, jump=Uniform())
    walk = density_estimate(evolve(ens, AFFINE, Grid(x_max, bins), 1.0), x_max, bins)
    cfg = SolverConfig(x_max=x_max, n_cells=n_cells, t_final=1.0)
    (u,), _ = run(Box(1.0).sample(Grid(x_max, n_cells)), AFFINE, cfg, [1.0])
    ref = u.values.reshape(bins, -1).mean(axis=1)
    l1 = float(np.sum(np.abs(walk.values - ref)) * walk.h)
    seconds = time.perf_counter() - started

    msd_ok = 0.98 <= ratio <= 1.02
    l1_ok = l1 <= 0.05
    fast = seconds <= 300.0
    record("criterion 10", msd_ok and l1_ok and fast,
           f"MSD/(2Dt) {ratio:.5f} (in [0.98, 1.02]), nonlinear L1 {l1:.4f} (<= 0.05), "
           f"runtime {seconds:.1f} s (<= 300 s)")
    assert msd_ok
    assert fast
    assert l1_ok, f"L1 distance {l1:.4f} > 0.05"
