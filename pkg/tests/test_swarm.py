import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exal.errors import ConfigurationError
from exal.swarm import (
    Bounds,
    Particle,
    SwarmConfig,
    clip_to_bounds,
    empso_velocity_update,
    init_swarm,
    momentum_update,
    mpso_velocity_update,
    optimize,
    update_personal_best,
)


def make_particle(x, v, m=None, pbest_v=None, pbest_f=np.inf):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return Particle(
        x=x,
        v=v,
        m=np.zeros_like(v) if m is None else np.asarray(m, dtype=float),
        pbest_v=v.copy() if pbest_v is None else np.asarray(pbest_v, dtype=float),
        pbest_f=pbest_f,
    )


# -- bounds and config validation ---------------------------------------------


def test_bounds_require_min_below_max():
    with pytest.raises(ConfigurationError):
        Bounds(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_bounds_require_at_least_one_dim():
    with pytest.raises(ConfigurationError):
        Bounds(np.array([]), np.array([]))


def test_symmetric_bounds():
    b = Bounds.symmetric(0.1, 3)
    assert b.dim == 3
    assert np.all(b.lower == -0.1) and np.all(b.upper == 0.1)


def test_config_rejects_zero_particles():
    with pytest.raises(ConfigurationError):
        SwarmConfig(n_particles=0)


@pytest.mark.parametrize("field,value", [("beta", 1.5), ("mu", -0.1), ("c1", -1.0), ("max_iters", 0), ("variant", "annealing")])
def test_config_rejects_bad_values(field, value):
    with pytest.raises(ConfigurationError):
        SwarmConfig(**{field: value})


# -- initialization -----------------------------------------------------------


def test_init_swarm_draws_inside_bounds():
    cfg = SwarmConfig(n_particles=3, rng_seed=7)
    bounds = Bounds.symmetric(0.1, 2)
    state = init_swarm(cfg, bounds)
    assert len(state.swarm) == 3
    for p in state.swarm:
        assert np.all(np.abs(p.x) <= 0.1)
        assert np.all(np.abs(p.v) <= 0.1)
        assert np.all(p.m == 0.0)
        assert np.all(p.pbest_v == p.v)
        assert p.pbest_f == np.inf
    assert state.gbest_v is None
    assert state.gbest_f == np.inf


def test_init_swarm_is_deterministic():
    cfg = SwarmConfig(n_particles=3, rng_seed=7)
    bounds = Bounds.symmetric(0.1, 2)
    a = init_swarm(cfg, bounds)
    b = init_swarm(cfg, bounds)
    for pa, pb in zip(a.swarm, b.swarm):
        assert np.array_equal(pa.x, pb.x)
        assert np.array_equal(pa.v, pb.v)


# -- personal best ------------------------------------------------------------


def test_personal_best_beats_infinity():
    p = make_particle([0.0], [0.5])
    update_personal_best(p, 3.5)
    assert p.pbest_f == 3.5
    assert np.array_equal(p.pbest_v, p.v)


def test_personal_best_tie_keeps_incumbent():
    p = make_particle([0.0], [0.5], pbest_v=[9.0], pbest_f=2.0)
    update_personal_best(p, 2.0)
    assert p.pbest_f == 2.0
    assert np.array_equal(p.pbest_v, [9.0])


def test_personal_best_strict_improvement():
    p = make_particle([0.0], [0.5], pbest_f=2.0)
    update_personal_best(p, 1.5)
    assert p.pbest_f == 1.5


def test_personal_best_copies_velocity():
    p = make_particle([0.0], [0.5])
    update_personal_best(p, 1.0)
    p.v[0] = 99.0
    assert p.pbest_v[0] == 0.5


# -- momentum -----------------------------------------------------------------


def test_momentum_beta_one_keeps_momentum():
    out = momentum_update(np.array([1.0, 2.0]), np.array([9.0, 9.0]), beta=1.0)
    assert np.array_equal(out, [1.0, 2.0])


def test_momentum_beta_zero_copies_velocity():
    out = momentum_update(np.array([1.0, 2.0]), np.array([9.0, 9.0]), beta=0.0)
    assert np.array_equal(out, [9.0, 9.0])


def test_momentum_hand_value():
    # 0.9 * 1.0 + 0.1 * 2.0, evaluated by hand
    out = momentum_update(np.array([1.0]), np.array([2.0]), beta=0.9)
    assert abs(out[0] - 1.1) <= 1e-12


def test_momentum_dimension_mismatch():
    with pytest.raises(ValueError):
        momentum_update(np.zeros(2), np.zeros(3), beta=0.5)


@given(beta=st.floats(0.0, 1.0), t=st.integers(1, 20))
@settings(deadline=None)
def test_momentum_closed_form(beta, t):
    # t applications with constant v from m=0 telescope to (1 - beta^t) * v
    v = np.array([0.7, -1.3])
    m = np.zeros(2)
    for _ in range(t):
        m = momentum_update(m, v, beta)
    expected = (1.0 - beta**t) * v
    assert np.max(np.abs(m - expected)) < 1e-12


# -- velocity updates ---------------------------------------------------------


def test_empso_reduces_to_velocity_when_all_terms_off():
    p = make_particle([3.0, 4.0], [0.5, -0.5], m=[7.0, 7.0])
    cfg = SwarmConfig(beta=0.0, c1=0.0, c2=0.0)
    out = empso_velocity_update(p, np.zeros(2), 0.3, 0.7, cfg)
    assert np.array_equal(out, p.v)


def test_empso_momentum_only_limit():
    p = make_particle([3.0, 4.0], [0.5, -0.5], m=[7.0, -7.0])
    cfg = SwarmConfig(beta=1.0, c1=0.0, c2=0.0)
    out = empso_velocity_update(p, np.zeros(2), 0.3, 0.7, cfg)
    assert np.array_equal(out, [7.0, -7.0])


def test_empso_hand_value():
    # 0.5*(1,0) + 0.5*(0,1) + 1*0.5*((1,1)-(0,0)) + 1*0.5*((1,1)-(0,0)) = (1.5, 1.5)
    p = make_particle([0.0, 0.0], [0.0, 1.0], m=[1.0, 0.0], pbest_v=[1.0, 1.0])
    cfg = SwarmConfig(beta=0.5, c1=1.0, c2=1.0)
    out = empso_velocity_update(p, np.array([1.0, 1.0]), 0.5, 0.5, cfg)
    assert np.max(np.abs(out - np.array([1.5, 1.5]))) <= 1e-12


def test_mpso_pure_inertia():
    p = make_particle([1.0, 1.0], [2.0, -2.0])
    cfg = SwarmConfig(mu=1.0, c1=0.0, c2=0.0)
    out = mpso_velocity_update(p, np.zeros(2), 0.9, 0.9, cfg)
    assert np.array_equal(out, p.v)


def test_mpso_all_terms_vanish():
    p = make_particle([1.0, 1.0], [2.0, -2.0])
    cfg = SwarmConfig(mu=0.0, c1=0.0, c2=0.0)
    out = mpso_velocity_update(p, np.zeros(2), 0.9, 0.9, cfg)
    assert np.array_equal(out, [0.0, 0.0])


def test_mpso_hand_value():
    # 0.5*(2,0) + 1*1*((1,1)-(0,0)) = (2, 1)
    p = make_particle([0.0, 0.0], [2.0, 0.0], pbest_v=[1.0, 1.0])
    cfg = SwarmConfig(mu=0.5, c1=1.0, c2=0.0)
    out = mpso_velocity_update(p, np.array([5.0, 5.0]), 1.0, 0.123, cfg)
    assert np.max(np.abs(out - np.array([2.0, 1.0]))) <= 1e-12


@given(
    r1=st.floats(0.0, 1.0),
    r2=st.floats(0.0, 1.0),
    seed=st.integers(0, 2**20),
)
@settings(deadline=None)
def test_empso_beta0_equals_mpso_mu1(r1, r2, seed):
    rng = np.random.default_rng(seed)
    vec = lambda: rng.uniform(-1, 1, size=3)
    p1 = make_particle(vec(), vec(), m=vec(), pbest_v=vec())
    p2 = Particle(x=p1.x.copy(), v=p1.v.copy(), m=p1.m.copy(), pbest_v=p1.pbest_v.copy())
    g = vec()
    out_e = empso_velocity_update(p1, g, r1, r2, SwarmConfig(beta=0.0, c1=2.0, c2=2.0))
    out_m = mpso_velocity_update(p2, g, r1, r2, SwarmConfig(mu=1.0, c1=2.0, c2=2.0))
    assert np.array_equal(out_e, out_m)


def test_velocity_update_dimension_mismatch():
    p = make_particle([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        empso_velocity_update(p, np.zeros(3), 0.5, 0.5, SwarmConfig())


# -- clipping -----------------------------------------------------------------


@pytest.mark.parametrize("x,expected", [(0.05, 0.05), (0.5, 0.1), (-3.0, -0.1)])
def test_clip_to_bounds(x, expected):
    b = Bounds.symmetric(0.1, 1)
    assert clip_to_bounds(np.array([x]), b)[0] == expected


# -- the optimizer ------------------------------------------------------------


def sphere(v):
    return float(np.sum(v * v))


def test_optimize_sphere_converges():
    bounds = Bounds.cube(-5.0, 5.0, 2)
    finals = []
    for seed in range(10):
        cfg = SwarmConfig(n_particles=30, beta=0.9, c1=2.0, c2=2.0, max_iters=100, rng_seed=seed)
        result = optimize(sphere, bounds, cfg)
        finals.append(result.best_fitness)
        assert np.all(np.diff(result.history) <= 0.0)
    assert np.median(finals) < 1e-2


def test_optimize_single_evaluation_returns_initial_velocity():
    cfg = SwarmConfig(n_particles=1, max_iters=1, rng_seed=5)
    bounds = Bounds.symmetric(0.2, 3)
    state = init_swarm(cfg, bounds)
    result = optimize(sphere, bounds, cfg)
    assert np.array_equal(result.best_velocity, state.swarm[0].v)
    assert result.best_fitness == sphere(state.swarm[0].v)


def test_optimize_constant_fitness():
    cfg = SwarmConfig(n_particles=4, max_iters=5, rng_seed=1)
    result = optimize(lambda v: 2.5, Bounds.symmetric(1.0, 2), cfg)
    assert result.best_fitness == 2.5


def test_optimize_is_deterministic():
    cfg = SwarmConfig(n_particles=8, max_iters=30, rng_seed=42)
    bounds = Bounds.cube(-5.0, 5.0, 3)
    r1 = optimize(sphere, bounds, cfg)
    r2 = optimize(sphere, bounds, cfg)
    assert np.array_equal(r1.best_velocity, r2.best_velocity)
    assert r1.best_fitness == r2.best_fitness
    assert np.array_equal(r1.history, r2.history)


def test_optimize_runs_exactly_max_iters_sweeps():
    calls = []
    cfg = SwarmConfig(n_particles=3, max_iters=7, rng_seed=0)

    def counting(v):
        calls.append(1)
        return sphere(v)

    result = optimize(counting, Bounds.symmetric(1.0, 2), cfg)
    assert len(calls) == 3 * 7
    assert len(result.history) == 7


def test_optimize_best_value_consistency():
    cfg = SwarmConfig(n_particles=6, max_iters=25, rng_seed=9)
    bounds = Bounds.cube(-2.0, 2.0, 2)
    result = optimize(sphere, bounds, cfg)
    assert sphere(result.best_velocity) == result.best_fitness


def test_optimize_gbest_dominates_personal_bests():
    # re-run the sweep logic manually through recorded evaluations
    cfg = SwarmConfig(n_particles=5, max_iters=10, rng_seed=3)
    bounds = Bounds.cube(-1.0, 1.0, 2)
    result = optimize(sphere, bounds, cfg, record_evaluations=True)
    assert result.best_fitness == min(f for _, f in result.evaluations)


def test_optimize_positions_stay_in_bounds_every_sweep():
    bounds = Bounds.cube(-0.5, 0.5, 2)
    cfg = SwarmConfig(n_particles=4, max_iters=15, rng_seed=2)
    sweeps = []

    def check(state):
        sweeps.append(state.t)
        for p in state.swarm:
            assert np.all(p.x >= bounds.lower) and np.all(p.x <= bounds.upper)

    optimize(sphere, bounds, cfg, on_sweep=check)
    assert sweeps == list(range(1, 16))


def test_optimize_nan_fitness_becomes_inf_with_warning():
    calls = {"n": 0}

    def sometimes_nan(v):
        calls["n"] += 1
        return np.nan if calls["n"] == 1 else sphere(v)

    cfg = SwarmConfig(n_particles=2, max_iters=3, rng_seed=0)
    with pytest.warns(RuntimeWarning):
        result = optimize(sometimes_nan, Bounds.symmetric(1.0, 2), cfg)
    assert np.isfinite(result.best_fitness)


def test_optimize_velocity_clip_flag():
    cfg = SwarmConfig(
        n_particles=4, max_iters=10, rng_seed=6, clip_velocity_to_bounds=True
    )
    bounds = Bounds.symmetric(0.3, 2)
    seen = []

    def recording(v):
        seen.append(v.copy())
        return sphere(v)

    optimize(recording, bounds, cfg)
    assert all(np.all(np.abs(v) <= 0.3) for v in seen)


def test_optimize_early_stop_threshold():
    cfg = SwarmConfig(n_particles=10, max_iters=200, rng_seed=1, early_stop_fitness=1e-3)
    result = optimize(sphere, Bounds.cube(-5.0, 5.0, 2), cfg)
    assert result.best_fitness <= 1e-3
    assert len(result.history) < 200


def test_pso_variant_ignores_inertia():
    # pso must equal mpso with mu forced to zero, sweep for sweep
    bounds = Bounds.cube(-1.0, 1.0, 2)
    base = dict(n_particles=5, max_iters=12, rng_seed=8, c1=1.5, c2=1.7, beta=0.4)
    r_pso = optimize(sphere, bounds, SwarmConfig(variant="pso", mu=0.77, **base))
    r_mpso = optimize(sphere, bounds, SwarmConfig(variant="mpso", mu=0.0, **base))
    assert np.array_equal(r_pso.best_velocity, r_mpso.best_velocity)
    assert np.array_equal(r_pso.history, r_mpso.history)
