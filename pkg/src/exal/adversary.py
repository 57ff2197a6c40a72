"""Scoring of candidate perturbations against a frozen classifier.

A perturbation is one flat vector ``a`` of length pixels-per-image, added to
every image row. Its payoff is ``1 + error - cost`` where error is one minus
the positive-class recall on the perturbed data and cost is the raw L2 norm
of ``a`` (no clamping of perturbed pixels, no per-pixel averaging; the payoff
can go negative when the norm outgrows the error term). The swarm minimizes
the negated payoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .learner import ConvNet, Dataset, ModelWeights, compute_metrics, get_weights, set_weights


@dataclass
class PayoffBreakdown:
    cost: float
    recall: float
    error: float
    payoff: float


def _check_perturbation(a: np.ndarray, data: Dataset) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (data.m,):
        raise ValueError(
            f"perturbation has shape {a.shape}, dataset rows have {data.m} pixels"
        )
    if not np.isfinite(a).all():
        raise ValueError("perturbation contains non-finite entries")
    return a


def _payoff_with_current_weights(model: ConvNet, a: np.ndarray, data: Dataset) -> PayoffBreakdown:
    """Score ``a`` against the model as currently parameterized."""
    cost = float(np.linalg.norm(a))
    x_adv = data.X + a  # one vector added to every row; data.X untouched
    recall = compute_metrics(data.y, model.predict(x_adv)).recall
    error = 1.0 - recall
    return PayoffBreakdown(cost=cost, recall=recall, error=error, payoff=1.0 + error - cost)


def payoff(a: np.ndarray, weights: ModelWeights, data: Dataset, model: ConvNet) -> PayoffBreakdown:
    """Evaluate ``a`` under ``weights``; the caller's model is left untouched.

    The model instance is borrowed: its weights are set to ``weights`` for
    the evaluation and restored before returning.
    """
    a = _check_perturbation(a, data)
    saved = get_weights(model)
    set_weights(model, weights)
    try:
        return _payoff_with_current_weights(model, a, data)
    finally:
        set_weights(model, saved)


def fitness(a: np.ndarray, weights: ModelWeights, data: Dataset, model: ConvNet) -> float:
    """Negated payoff: minimizing it maximizes the adversary's payoff."""
    return -payoff(a, weights, data, model).payoff


def make_swarm_fitness(
    weights: ModelWeights, data: Dataset, model_factory: Callable[[], ConvNet]
) -> Callable[[np.ndarray], float]:
    """Bind frozen weights and data into a pure fitness closure.

    The closure owns a private model instance, never mutates shared state,
    and returns exactly the same value as ``fitness(a, weights, data, model)``
    for every ``a``.
    """
    model = model_factory()
    set_weights(model, weights)

    def swarm_fitness(a: np.ndarray) -> float:
        a_checked = _check_perturbation(a, data)
        return -_payoff_with_current_weights(model, a_checked, data).payoff

    return swarm_fitness
