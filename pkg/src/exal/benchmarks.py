"""Classic test functions and the optimizer benchmark entry for the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .swarm import Bounds, SwarmConfig, optimize, VARIANTS


def sphere(v):
    return float(np.sum(v * v))


def rastrigin(v):
    return float(10.0 * v.size + np.sum(v * v - 10.0 * np.cos(2.0 * np.pi * v)))


def rosenbrock(v):
    return float(np.sum(100.0 * (v[1:] - v[:-1] ** 2) ** 2 + (1.0 - v[:-1]) ** 2))


# canonical search domains
BENCHMARKS = {
    "sphere": (sphere, (-5.12, 5.12)),
    "rastrigin": (rastrigin, (-5.12, 5.12)),
    "rosenbrock": (rosenbrock, (-2.048, 2.048)),
}


def benchmark_rows(
    name: str, dims: int = 2, seed: int = 0, config: SwarmConfig | None = None
) -> list[tuple[int, str, float]]:
    """Run all three variants on one test function with a shared seed.

    Returns ``(iteration, variant, gbest_fitness)`` rows, ``max_iters`` rows
    per variant, ready for convergence-curve CSV output.
    """
    if name not in BENCHMARKS:
        raise ConfigurationError(
            f"unknown benchmark function {name!r}; choose from {sorted(BENCHMARKS)}"
        )
    if dims < 1:
        raise ConfigurationError(f"dims must be >= 1, got {dims}")
    fn, (lo, hi) = BENCHMARKS[name]
    base = config if config is not None else SwarmConfig()
    bounds = Bounds.cube(lo, hi, dims)
    rows: list[tuple[int, str, float]] = []
    for variant in VARIANTS:
        cfg = SwarmConfig(
            n_particles=base.n_particles,
            beta=base.beta,
            mu=base.mu,
            c1=base.c1,
            c2=base.c2,
            max_iters=base.max_iters,
            variant=variant,
            rng_seed=seed,
            clip_velocity_to_bounds=base.clip_velocity_to_bounds,
        )
        result = optimize(fn, bounds, cfg)
        rows.extend(
            (t + 1, variant, float(f)) for t, f in enumerate(result.history)
        )
    return rows
