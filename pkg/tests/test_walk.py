import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nondiff.diffusivity import PolynomialDiffusivity
from nondiff.pde import SolverConfig, run
from nondiff.profiles import Box, Grid, exact_heat_box, gaussian_fundamental, sample_positions
from nondiff.walk import (
    CHUNK,
    ParticleEnsemble,
    TwoPoint,
    Uniform,
    density_estimate,
    diffusivity_from_moments,
    draw_jumps,
    evolve,
    first_moment,
    make_jump,
    second_moment,
    step_ensemble,
    waiting_time,
    _reflect,
)

LINEAR = PolynomialDiffusivity((1.0,))
AFFINE = PolynomialDiffusivity((1.0, 1.0))


def test_moments():
    assert second_moment(TwoPoint(0.5)) == 0.25
    assert second_moment(Uniform()) == pytest.approx(2.0, rel=1e-15)
    assert first_moment(Uniform(3.0)) == 0.0
    with pytest.raises(ValueError):
        TwoPoint(-1.0)
    with pytest.raises(ValueError):
        Uniform(0.0)
    assert make_jump("twopoint") == TwoPoint(math.sqrt(2.0))
    with pytest.raises(ValueError):
        make_jump("cauchy")


def test_empirical_moments():
    rng = np.random.default_rng(5)
    for jump in (TwoPoint(0.3), Uniform(2.0)):
        z = draw_jumps(jump, rng, 400_000)
        m2 = second_moment(jump)
        assert abs(z.mean()) < 5 * math.sqrt(m2 / z.size)
        assert np.mean(z * z) == pytest.approx(m2, rel=0.01)


def test_diffusivity_from_moments():
    assert diffusivity_from_moments(Uniform(), 1.0) == pytest.approx(1.0)
    assert diffusivity_from_moments(TwoPoint(1.0), 0.25) == 2.0
    with pytest.raises(ValueError):
        diffusivity_from_moments(Uniform(), 0.0)


@pytest.mark.parametrize("v, expected", [(0.0, 1.0), (1.5, 0.5)])
def test_waiting_time_examples(v, expected):
    # M2 = 2, P = 1 + u: D(0) = 1, D(1.5) = 2
    assert waiting_time(AFFINE, Uniform(), v) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 50.0), min_size=2, max_size=10))
def test_waiting_time_non_increasing_in_density(vs):
    vs = np.sort(vs)
    tau = waiting_time(PolynomialDiffusivity((0.5, 2.0, 1.0)), TwoPoint(0.4), vs)
    assert np.all(np.diff(tau) <= 1e-12 * tau[:-1])
    assert np.all(tau <= 0.16 / (2 * 0.5) * (1 + 1e-12))


def test_density_estimate_example():
    ens = ParticleEnsemble(np.array([0.1, 0.1, -0.1]), seed=0, jump=Uniform())
    f = density_estimate(ens, 1.0, 8)
    expected = np.zeros(8)
    expected[4] = 2 / (3 * 0.25)
    expected[3] = 1 / (3 * 0.25)
    assert np.allclose(f.values, expected, rtol=1e-15)
    assert sum(f.values) * f.h == pytest.approx(1.0)


def test_reflect():
    assert np.allclose(_reflect(np.array([1.2, -1.5, 0.3]), 1.0), [0.8, -0.5, 0.3])


def test_zero_jump_is_a_no_op():
    x = np.linspace(-1, 1, 11)
    ens = ParticleEnsemble(x, seed=3, jump=TwoPoint(0.0))
    out = evolve(ens, AFFINE, Grid(4.0, 16), 5.0)
    assert np.array_equal(out.positions, x)
    assert out.time == pytest.approx(5.0)


def test_count_preserved_and_confined():
    rng = np.random.default_rng(0)
    ens = ParticleEnsemble(rng.uniform(-1, 1, 5000), seed=1, jump=Uniform(0.5))
    out = evolve(ens, AFFINE, Grid(2.0, 40), 20.0)
    assert out.n == 5000
    assert np.all(np.abs(out.positions) <= 2.0)
    assert sum(density_estimate(out, 2.0, 40).values) * 0.1 == pytest.approx(1.0)


def test_deterministic_and_chunk_layout_independent():
    rng = np.random.default_rng(9)
    x0 = rng.uniform(-1, 1, CHUNK + 1000)
    grid = Grid(30.0, 60)
    a = evolve(ParticleEnsemble(x0, 42, Uniform()), AFFINE, grid, 3.0)
    b = evolve(ParticleEnsemble(x0, 42, Uniform()), AFFINE, grid, 3.0)
    c = evolve(ParticleEnsemble(x0, 43, Uniform()), AFFINE, grid, 3.0)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    # the first chunk draws from the same stream whatever the ensemble size
    head = evolve(ParticleEnsemble(x0[:CHUNK], 42, Uniform()), LINEAR, grid, 3.0)
    full = evolve(ParticleEnsemble(x0, 42, Uniform()), LINEAR, grid, 3.0)
    assert np.array_equal(head.positions, full.positions[:CHUNK])


def test_step_rejects_bad_dt():
    ens = ParticleEnsemble(np.zeros(4), 0, Uniform())
    with pytest.raises(ValueError):
        step_ensemble(ens, AFFINE, Grid(1.0, 8), 0.0)


def test_linear_mean_square_displacement():
    # tau = 1, so exactly 10 jumps of variance 2 by t = 10
    n = 200_000
    ens = ParticleEnsemble(np.zeros(n), seed=7, jump=Uniform())
    out = evolve(ens, LINEAR, Grid(200.0, 400), 10.0)
    msd = np.mean(out.positions ** 2)
    # sum of k jumps: E x^4 = k mu4 + 3 k (k - 1) sigma^4, mu4 = 36/5 for Uniform(sqrt 6)
    k, s2, mu4 = 10, 2.0, 36.0 / 5.0
    se = math.sqrt((k * mu4 + 3 * k * (k - 1) * s2 ** 2 - (k * s2) ** 2) / n)
    assert abs(msd - 20.0) < 5 * se
    assert abs(np.mean(out.positions)) < 5 * math.sqrt(20.0 / n)


def test_linear_fine_jumps_match_heat_solution():
    n, bins = 100_000, 40
    rng = np.random.default_rng(11)
    ens = ParticleEnsemble(sample_positions(Box(1.0), n, rng), 11, TwoPoint(0.1))
    out = evolve(ens, LINEAR, Grid(10.0, bins), 1.0)
    f = density_estimate(out, 10.0, bins)
    faces = Grid(10.0, bins).faces
    exact = np.array([np.mean(exact_heat_box(1.0, 1.0, np.linspace(a, b, 51), 1.0))
                      for a, b in zip(faces[:-1], faces[1:])])
    assert np.sum(np.abs(f.values - exact)) * f.h < 0.05


def test_nonlinear_fine_jumps_match_divergence_solution():
    n, bins = 200_000, 40
    rng = np.random.default_rng(12)
    ens = ParticleEnsemble(sample_positions(Box(1.0), n, rng), 12, TwoPoint(0.1))
    out = evolve(ens, AFFINE, Grid(10.0, bins), 1.0)
    f = density_estimate(out, 10.0, bins)
    cfg = SolverConfig(x_max=10.0, n_cells=800, t_final=1.0)
    (u,), _ = run(Box(1.0).sample(Grid(10.0, 800)), AFFINE, cfg, [1.0])
    ref = u.values.reshape(bins, -1).mean(axis=1)
    assert np.sum(np.abs(f.values - ref)) * f.h < 0.07


def test_constant_walk_from_origin_matches_kernel():
    # continuous jumps a tenth of the default width: 100 jumps by t = 1
    n, bins = 200_000, 40
    g = Grid(10.0, bins)
    ens = ParticleEnsemble(np.zeros(n), 4, Uniform(math.sqrt(6.0) / 10))
    f = density_estimate(evolve(ens, LINEAR, g, 1.0), 10.0, bins)
    kernel = np.array([np.mean(gaussian_fundamental(1.0, np.linspace(a, b, 101), 1.0))
                       for a, b in zip(g.faces[:-1], g.faces[1:])])
    assert np.sum(np.abs(f.values - kernel)) * f.h <= 0.05
