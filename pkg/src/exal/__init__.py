"""Adversarial-learning game built on a momentum particle swarm.

A swarm optimizer (PSO / MPSO / EMPSO) searches for one bounded additive
perturbation that maximizes a small CNN's classification error net of the
perturbation's L2 norm; the resulting vector is then used to compare
original, manipulated, and adversarially retrained classifiers.
"""

from .adversary import PayoffBreakdown, fitness, make_swarm_fitness, payoff
from .benchmarks import BENCHMARKS, benchmark_rows, rastrigin, rosenbrock, sphere
from .data_io import (
    PairSpec,
    RawLabeledImages,
    export_triptych,
    load_idx,
    load_image_dir,
    make_pair_dataset,
    make_synthetic,
    save_idx,
)
from .errors import ConfigurationError, DataError, ExalError, IdxFormatError
from .game import (
    AttackResult,
    GameConfig,
    GameResult,
    PairOutcome,
    build_and_score,
    load_perturbation,
    results_to_csv,
    run_exal,
    run_experiment,
    run_full_game,
    save_perturbation,
)
from .learner import (
    ConvNet,
    Dataset,
    Metrics,
    ModelWeights,
    TrainConfig,
    build_model,
    compute_metrics,
    evaluate,
    get_weights,
    load_weights,
    loss_and_gradients,
    save_weights,
    set_weights,
    train,
)
from .swarm import Bounds, Particle, SwarmConfig, SwarmResult, SwarmState, optimize

__version__ = "0.1.0"
