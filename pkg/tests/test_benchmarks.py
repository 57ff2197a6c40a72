import numpy as np
import pytest

from exal.benchmarks import BENCHMARKS, benchmark_rows, rastrigin, rosenbrock, sphere
from exal.errors import ConfigurationError
from exal.swarm import SwarmConfig


def test_known_optima():
    assert sphere(np.zeros(4)) == 0.0
    assert rastrigin(np.zeros(3)) == 0.0
    assert rosenbrock(np.ones(5)) == 0.0


def test_sphere_value():
    assert sphere(np.array([1.0, 2.0])) == 5.0


def test_rastrigin_value():
    # 10*2 + (1 - 10*cos(2*pi)) + (4 - 10*cos(4*pi)) = 5, cos terms are 1
    assert abs(rastrigin(np.array([1.0, 2.0])) - 5.0) < 1e-9


def test_benchmark_rows_schema():
    cfg = SwarmConfig(n_particles=5, max_iters=12)
    rows = benchmark_rows("rastrigin", dims=2, seed=3, config=cfg)
    assert len(rows) == 12 * 3
    variants = {v for _, v, _ in rows}
    assert variants == {"pso", "mpso", "empso"}
    for t, _, f in rows:
        assert 1 <= t <= 12
        assert np.isfinite(f)


def test_benchmark_rows_fitness_nonincreasing_per_variant():
    rows = benchmark_rows("sphere", dims=2, seed=0, config=SwarmConfig(max_iters=20))
    for variant in ("pso", "mpso", "empso"):
        curve = [f for _, v, f in rows if v == variant]
        assert all(b <= a for a, b in zip(curve, curve[1:]))


def test_unknown_function_rejected():
    with pytest.raises(ConfigurationError):
        benchmark_rows("ackley")


def test_default_empso_sphere_convergence():
    # analytic optimum is 0 at the origin; defaults must land close
    finals = []
    for seed in range(10):
        rows = benchmark_rows("sphere", dims=2, seed=seed)
        finals.append([f for _, v, f in rows if v == "empso"][-1])
    assert np.median(finals) < 1e-2


def test_domains_cover_all_functions():
    assert set(BENCHMARKS) == {"sphere", "rastrigin", "rosenbrock"}
