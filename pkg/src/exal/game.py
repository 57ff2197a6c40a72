"""Two-player game orchestration and the experiment table.

One round: train the classifier on clean data, freeze its weights, let the
swarm search the per-pixel box ``[-h, +h]`` for the perturbation that
maximizes payoff, then build the three model variants:

* original    - trained on clean train data, scored on clean test data
* manipulated - the original's weights, scored on perturbed test data
* secure      - retrained from scratch on perturbed train data, scored on
                perturbed test data

The perturbation applied to both splits is ``scale * a_star`` (the scale
multiplies the stored optimum after the search; the search itself always
runs inside the configured box). The headline hypothesis holds when the
secure F1 beats the manipulated F1.

All sub-seeds (model init, training shuffle, swarm, secure re-init, data
sampling) are derived from ``GameConfig.rng_seed``, so a single seed pins
every number in the result table.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import adversary
from .data_io import PairSpec, RawLabeledImages, make_pair_dataset
from .errors import ConfigurationError
from .learner import (
    ConvNet,
    Dataset,
    ModelWeights,
    TrainConfig,
    build_model,
    evaluate,
    set_weights,
    train,
)
from .swarm import Bounds, SwarmConfig, optimize

PERTURBATION_MAGIC = b"EXALP1"

# salts for deriving stage seeds from the master seed
_SALT_MODEL = 1
_SALT_TRAIN = 2
_SALT_SWARM = 3
_SALT_SECURE_MODEL = 4
_SALT_DATA = 5


def derive_seed(master: int, salt: int) -> int:
    """Stable, well-mixed sub-seed for one pipeline stage."""
    seq = np.random.SeedSequence([int(master), int(salt)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class GameConfig:
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    bounds_halfwidth: float = 0.1
    scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.bounds_halfwidth <= 0:
            raise ConfigurationError(
                f"bounds_halfwidth must be positive, got {self.bounds_halfwidth}"
            )
        if self.scale <= 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        if self.rng_seed < 0:
            raise ConfigurationError(f"rng_seed must be non-negative, got {self.rng_seed}")


@dataclass
class GameResult:
    a_star: np.ndarray
    f1_original: float
    f1_manipulated: float
    f1_secure: float
    hypothesis_satisfied: bool
    payoff_trace: np.ndarray


@dataclass
class AttackResult:
    """Output of the search phase: the optimum plus the frozen defender."""

    a_star: np.ndarray
    weights: ModelWeights
    payoff_trace: np.ndarray
    best_fitness: float
    evaluations: list = field(default_factory=list)


def perturbed(data: Dataset, a: np.ndarray) -> Dataset:
    """New dataset with ``a`` added to every row (no clamping)."""
    return Dataset(X=data.X + a, y=data.y, shape=data.shape)


def run_exal(
    data_train: Dataset, cfg: GameConfig, record_evaluations: bool = False
) -> AttackResult:
    """Train the defender, then search for the payoff-maximizing perturbation."""
    model = build_model(data_train.shape, derive_seed(cfg.rng_seed, _SALT_MODEL))
    train_cfg = replace(cfg.train, rng_seed=derive_seed(cfg.rng_seed, _SALT_TRAIN))
    weights = train(model, data_train, train_cfg)

    bounds = Bounds.symmetric(cfg.bounds_halfwidth, data_train.m)
    swarm_cfg = replace(cfg.swarm, rng_seed=derive_seed(cfg.rng_seed, _SALT_SWARM))
    fitness = adversary.make_swarm_fitness(
        weights, data_train, lambda: build_model(data_train.shape)
    )
    result = optimize(fitness, bounds, swarm_cfg, record_evaluations=record_evaluations)
    return AttackResult(
        a_star=result.best_velocity,
        weights=weights,
        payoff_trace=-result.history,
        best_fitness=result.best_fitness,
        evaluations=result.evaluations,
    )


def build_and_score(
    data_train: Dataset,
    data_test: Dataset,
    a_star: np.ndarray,
    cfg: GameConfig,
    original_weights: ModelWeights | None = None,
    payoff_trace: np.ndarray | None = None,
) -> GameResult:
    """Train/score the three model variants under ``scale * a_star``.

    When ``original_weights`` is omitted the original model is retrained
    here with the same derived seeds ``run_exal`` uses, so both paths give
    bit-identical scores.
    """
    a_star = np.asarray(a_star, dtype=np.float64)
    if a_star.shape != (data_train.m,):
        raise ValueError(
            f"perturbation has shape {a_star.shape}, images have {data_train.m} pixels"
        )
    applied = cfg.scale * a_star

    original = build_model(data_train.shape, derive_seed(cfg.rng_seed, _SALT_MODEL))
    train_cfg = replace(cfg.train, rng_seed=derive_seed(cfg.rng_seed, _SALT_TRAIN))
    if original_weights is None:
        train(original, data_train, train_cfg)
    else:
        set_weights(original, original_weights)

    f1_original = evaluate(original, data_test).f1
    f1_manipulated = evaluate(original, perturbed(data_test, applied)).f1

    secure = build_model(data_train.shape, derive_seed(cfg.rng_seed, _SALT_SECURE_MODEL))
    train(secure, perturbed(data_train, applied), train_cfg)
    f1_secure = evaluate(secure, perturbed(data_test, applied)).f1

    return GameResult(
        a_star=a_star,
        f1_original=f1_original,
        f1_manipulated=f1_manipulated,
        f1_secure=f1_secure,
        hypothesis_satisfied=f1_secure > f1_manipulated,
        payoff_trace=np.asarray([] if payoff_trace is None else payoff_trace),
    )


def run_full_game(data_train: Dataset, data_test: Dataset, cfg: GameConfig) -> GameResult:
    """Search plus scoring in one call."""
    attack = run_exal(data_train, cfg)
    return build_and_score(
        data_train,
        data_test,
        attack.a_star,
        cfg,
        original_weights=attack.weights,
        payoff_trace=attack.payoff_trace,
    )


@dataclass
class PairOutcome:
    """One experiment row plus the artifacts the CLI writes per pair."""

    label_positive: str
    label_negative: str
    result: GameResult
    data_train: Dataset
    data_test: Dataset
    runtime_seconds: float


def run_experiment(
    pairs,
    raw: RawLabeledImages,
    cfg: GameConfig,
    samples_per_class: int = 1000,
    train_fraction: float = 0.8,
    label_names: dict[int, str] | None = None,
) -> list[PairOutcome]:
    """Run the full game once per label pair.

    ``pairs`` holds ``(positive, negative)`` source labels as they appear in
    ``raw.labels``. An unknown label raises a configuration error naming it.
    ``label_names`` optionally maps integer labels to display names for the
    result table (image-directory corpora report class names, not indices).
    """
    names = label_names or {}
    outcomes = []
    for i, (pos, neg) in enumerate(pairs):
        spec = PairSpec(
            positive_label=int(pos),
            negative_label=int(neg),
            samples_per_class=samples_per_class,
            train_fraction=train_fraction,
        )
        started = time.perf_counter()
        data_train, data_test = make_pair_dataset(
            raw, spec, seed=derive_seed(cfg.rng_seed, _SALT_DATA + i)
        )
        result = run_full_game(data_train, data_test, cfg)
        outcomes.append(
            PairOutcome(
                label_positive=names.get(int(pos), str(pos)),
                label_negative=names.get(int(neg), str(neg)),
                result=result,
                data_train=data_train,
                data_test=data_test,
                runtime_seconds=time.perf_counter() - started,
            )
        )
    return outcomes


CSV_HEADER = (
    "labels_pos,labels_neg,scale,f1_original,f1_manipulated,f1_secure,"
    "hypothesis,seed,runtime_seconds"
)


def results_to_csv(outcomes: list[PairOutcome], cfg: GameConfig) -> str:
    """Comma-separated result table, LF line endings, '.' decimals.

    The runtime_seconds column is fixed to 0.0 so that identical runs emit
    byte-identical tables; measured wall-clock times live in the run
    manifest instead.
    """
    lines = [CSV_HEADER]
    for out in outcomes:
        r = out.result
        verdict = "Satisfied" if r.hypothesis_satisfied else "Not Satisfied"
        lines.append(
            f"{out.label_positive},{out.label_negative},{cfg.scale:g},"
            f"{r.f1_original:.4f},{r.f1_manipulated:.4f},{r.f1_secure:.4f},"
            f"{verdict},{cfg.rng_seed},0.0"
        )
    return "\n".join(lines) + "\n"


# -- perturbation container ---------------------------------------------------
# 16-byte header: magic "EXALP1", uint32 LE length, 6 reserved zero bytes;
# then the float64 little-endian vector.


def perturbation_to_bytes(a: np.ndarray) -> bytes:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    header = PERTURBATION_MAGIC + struct.pack("<I", a.size) + b"\x00" * 6
    return header + np.ascontiguousarray(a, dtype="<f8").tobytes()


def perturbation_from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < 16:
        raise ValueError(f"perturbation container has only {len(blob)} bytes")
    if blob[:6] != PERTURBATION_MAGIC:
        raise ValueError(
            f"bad perturbation magic {blob[:6]!r}, expected {PERTURBATION_MAGIC!r}"
        )
    (m,) = struct.unpack_from("<I", blob, 6)
    expected = 16 + 8 * m
    if len(blob) != expected:
        raise ValueError(
            f"perturbation container should be {expected} bytes for m={m}, got {len(blob)}"
        )
    return np.frombuffer(blob, dtype="<f8", count=m, offset=16).astype(np.float64)


def save_perturbation(a: np.ndarray, path) -> None:
    Path(path).write_bytes(perturbation_to_bytes(a))


def load_perturbation(path) -> np.ndarray:
    return perturbation_from_bytes(Path(path).read_bytes())
