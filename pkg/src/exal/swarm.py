"""Particle swarm optimizers with momentum (PSO / MPSO / EMPSO).

The unusual twist of this swarm family: the *velocity* vector is the
candidate solution. The fitness function is evaluated on ``v``, the best
velocities are what personal/global bests remember, and the returned optimum
is the global-best velocity. The position ``x`` acts as an integrator state
that only enters the attraction terms ``(v_pbest - x)`` and ``(v_gbest - x)``,
pulling it toward the best velocities; it is the position, not the velocity,
that is clipped to the search box each sweep.

Update rules per particle and sweep:

    EMPSO:  v <- beta*m + (1-beta)*v + c1*r1*(v_pbest - x) + c2*r2*(v_gbest - x)
    MPSO:   v <- mu*v             + c1*r1*(v_pbest - x) + c2*r2*(v_gbest - x)
    PSO:    MPSO with mu = 0

followed by ``x <- x + v``, the momentum average ``m <- beta*m + (1-beta)*v``
(EMPSO only uses it, but it is tracked for all variants), and position
clipping. ``r1, r2 ~ U(0,1)`` are scalar draws per particle per sweep.

All randomness comes from one ``numpy.random.default_rng(seed)`` (PCG64)
generator per optimizer run. Draw order is fixed: all initial positions,
then all initial velocities, then per sweep r1, r2 in particle index order.
Two runs with the same config and fitness are therefore bit-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError

VARIANTS = ("pso", "mpso", "empso")


@dataclass
class Bounds:
    """Per-dimension box constraints, ``lower[i] < upper[i]`` for every i."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ConfigurationError(
                f"bounds must be two equal-length 1-d arrays, got shapes "
                f"{self.lower.shape} and {self.upper.shape}"
            )
        if self.lower.size < 1:
            raise ConfigurationError("bounds need at least one dimension")
        if not np.all(self.lower < self.upper):
            bad = int(np.argmin(self.upper - self.lower))
            raise ConfigurationError(
                f"bounds require min < max in every dimension; dimension {bad} "
                f"has [{self.lower[bad]}, {self.upper[bad]}]"
            )

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def symmetric(cls, halfwidth: float, dim: int) -> "Bounds":
        """``[-halfwidth, +halfwidth]`` in every one of ``dim`` dimensions."""
        if halfwidth <= 0:
            raise ConfigurationError(f"halfwidth must be positive, got {halfwidth}")
        h = float(halfwidth)
        return cls(np.full(dim, -h), np.full(dim, h))

    @classmethod
    def cube(cls, lower: float, upper: float, dim: int) -> "Bounds":
        """Same ``[lower, upper]`` interval in every dimension."""
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))


@dataclass
class SwarmConfig:
    """Hyperparameters for one optimizer run.

    ``beta`` is the exponential momentum weight (EMPSO), ``mu`` the constant
    momentum factor (MPSO only). ``early_stop_fitness`` is off by default;
    when set, the run ends after the first sweep whose global best is at or
    below it, otherwise exactly ``max_iters`` sweeps execute.
    """

    n_particles: int = 20
    beta: float = 0.9
    mu: float = 0.9
    c1: float = 2.0
    c2: float = 2.0
    max_iters: int = 50
    variant: str = "empso"
    rng_seed: int = 0
    clip_velocity_to_bounds: bool = False
    early_stop_fitness: float | None = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigurationError(f"n_particles must be >= 1, got {self.n_particles}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigurationError(f"mu must lie in [0, 1], got {self.mu}")
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigurationError(f"c1 and c2 must be >= 0, got {self.c1}, {self.c2}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}"
            )
        if self.rng_seed < 0:
            raise ConfigurationError(f"rng_seed must be non-negative, got {self.rng_seed}")


@dataclass
class Particle:
    """One candidate: the velocity is the solution under evaluation."""

    x: np.ndarray
    v: np.ndarray
    m: np.ndarray
    pbest_v: np.ndarray
    pbest_f: float = np.inf


@dataclass
class SwarmState:
    swarm: list[Particle]
    gbest_v: np.ndarray | None = None
    gbest_f: float = np.inf
    t: int = 0


@dataclass
class SwarmResult:
    """Outcome of :func:`optimize`.

    ``history[t]`` is the global-best fitness after sweep ``t``'s evaluation
    phase (non-increasing). ``evaluations`` holds every ``(candidate, fitness)``
    pair when recording was requested, else it is empty.
    """

    best_velocity: np.ndarray
    best_fitness: float
    history: np.ndarray
    evaluations: list[tuple[np.ndarray, float]] = field(default_factory=list)


def init_swarm(
    config: SwarmConfig, bounds: Bounds, rng: np.random.Generator | None = None
) -> SwarmState:
    """Draw the initial swarm: x, v ~ U(bounds) per dimension, m = 0.

    Positions for all particles are drawn before any velocity, so the state
    is a pure function of ``config.rng_seed`` when ``rng`` is not supplied.
    """
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    d = bounds.dim
    xs = rng.uniform(bounds.lower, bounds.upper, size=(config.n_particles, d))
    vs = rng.uniform(bounds.lower, bounds.upper, size=(config.n_particles, d))
    swarm = [
        Particle(x=xs[i], v=vs[i], m=np.zeros(d), pbest_v=vs[i].copy(), pbest_f=np.inf)
        for i in range(config.n_particles)
    ]
    return SwarmState(swarm=swarm)


def update_personal_best(p: Particle, f: float) -> Particle:
    """Strict-improvement update: ties keep the incumbent best."""
    if f < p.pbest_f:
        p.pbest_f = f
        p.pbest_v = p.v.copy()
    return p


def momentum_update(m: np.ndarray, v: np.ndarray, beta: float) -> np.ndarray:
    """Exponentially weighted average of velocities: ``beta*m + (1-beta)*v``."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.shape != v.shape:
        raise ValueError(f"momentum/velocity shape mismatch: {m.shape} vs {v.shape}")
    return beta * m + (1.0 - beta) * v


def empso_velocity_update(
    p: Particle, gbest_v: np.ndarray, r1: float, r2: float, config: SwarmConfig
) -> np.ndarray:
    """beta*m + (1-beta)*v + c1*r1*(pbest_v - x) + c2*r2*(gbest_v - x)."""
    gbest_v = np.asarray(gbest_v, dtype=np.float64)
    if gbest_v.shape != p.v.shape:
        raise ValueError(
            f"global best shape {gbest_v.shape} does not match particle {p.v.shape}"
        )
    return (
        config.beta * p.m
        + (1.0 - config.beta) * p.v
        + config.c1 * r1 * (p.pbest_v - p.x)
        + config.c2 * r2 * (gbest_v - p.x)
    )


def mpso_velocity_update(
    p: Particle, gbest_v: np.ndarray, r1: float, r2: float, config: SwarmConfig
) -> np.ndarray:
    """mu*v + c1*r1*(pbest_v - x) + c2*r2*(gbest_v - x); mu=0 is plain PSO."""
    gbest_v = np.asarray(gbest_v, dtype=np.float64)
    if gbest_v.shape != p.v.shape:
        raise ValueError(
            f"global best shape {gbest_v.shape} does not match particle {p.v.shape}"
        )
    return (
        config.mu * p.v
        + config.c1 * r1 * (p.pbest_v - p.x)
        + config.c2 * r2 * (gbest_v - p.x)
    )


def clip_to_bounds(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Clamp each component into its ``[lower, upper]`` interval."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (bounds.dim,):
        raise ValueError(f"vector shape {x.shape} does not match bounds dim {bounds.dim}")
    return np.clip(x, bounds.lower, bounds.upper)


def optimize(
    fitness: Callable[[np.ndarray], float],
    bounds: Bounds,
    config: SwarmConfig,
    record_evaluations: bool = False,
    on_sweep: Callable[[SwarmState], None] | None = None,
) -> SwarmResult:
    """Minimize ``fitness`` over velocities inside the box.

    Each sweep runs two phases. Phase one evaluates every particle's velocity
    and settles personal and global bests (strict ``<`` only, incumbent wins
    ties; a NaN fitness counts as +inf and raises a warning). Phase two draws
    r1, r2 per particle, applies the variant's velocity update, moves
    ``x += v``, refreshes the momentum average with the new velocity, and
    clips the position. The fitness must be pure; the returned best fitness
    is the minimum value ever evaluated and belongs to the returned velocity.
    """
    rng = np.random.default_rng(config.rng_seed)
    state = init_swarm(config, bounds, rng)
    if config.variant == "pso":
        config = replace(config, mu=0.0)
    velocity_update = (
        empso_velocity_update if config.variant == "empso" else mpso_velocity_update
    )

    history: list[float] = []
    evaluations: list[tuple[np.ndarray, float]] = []
    for _ in range(config.max_iters):
        for p in state.swarm:
            f = fitness(p.v)
            if np.isnan(f):
                warnings.warn(
                    "fitness returned NaN; treating the candidate as +inf",
                    RuntimeWarning,
                    stacklevel=2,
                )
                f = np.inf
            f = float(f)
            if record_evaluations:
                evaluations.append((p.v.copy(), f))
            update_personal_best(p, f)
            if f < state.gbest_f:
                state.gbest_f = f
                state.gbest_v = p.v.copy()
        history.append(state.gbest_f)
        for p in state.swarm:
            r1 = rng.uniform()
            r2 = rng.uniform()
            v_new = velocity_update(p, state.gbest_v, r1, r2, config)
            if config.clip_velocity_to_bounds:
                v_new = clip_to_bounds(v_new, bounds)
            p.v = v_new
            p.x = p.x + p.v
            p.m = momentum_update(p.m, p.v, config.beta)
            p.x = clip_to_bounds(p.x, bounds)
        state.t += 1
        if on_sweep is not None:
            on_sweep(state)
        if (
            config.early_stop_fitness is not None
            and state.gbest_f <= config.early_stop_fitness
        ):
            break

    assert state.gbest_v is not None  # first sweep always beats +inf
    return SwarmResult(
        best_velocity=state.gbest_v.copy(),
        best_fitness=state.gbest_f,
        history=np.asarray(history),
        evaluations=evaluations,
    )
