"""
Synthetic prediction pools.

A point's true label is drawn with the configured positive fraction. Its score is
drawn from a Beta concentrated near 1 for positives and near 0 for negatives;
with probability label_noise the point is scored as if its label were flipped,
which produces confident mistakes. A temperature above 1 pulls scores towards
1/2 on the logit scale.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import expit, logit

from .const import LOGGER, STREAM_POOL
from .data import MultiLabelPool, PredictionPool
from .streams import make_generator

if TYPE_CHECKING:
    from .config import ScenarioConfig


def _scores(
    rng: np.random.Generator, labels: np.ndarray, config: ScenarioConfig
) -> np.ndarray:
    shape = labels.shape
    flipped = rng.random(shape) < config.label_noise
    scored_as = labels ^ flipped

    if math.isinf(config.positive_sharpness):
        positive = np.ones(shape)
    else:
        positive = rng.beta(config.positive_sharpness, 1.0, size=shape)
    if math.isinf(config.negative_sharpness):
        negative = np.zeros(shape)
    else:
        negative = rng.beta(1.0, config.negative_sharpness, size=shape)
    prob = np.where(scored_as == 1, positive, negative)

    if config.temperature != 1.0:
        with np.errstate(divide="ignore"):
            prob = expit(logit(prob) / config.temperature)
    return prob


def simulate_pool(
    config: ScenarioConfig, seed: int | None = None
) -> tuple[PredictionPool, np.ndarray]:
    """
    Simulate a binary prediction pool with its true labels.

    Args:
        config: Scenario describing the pool.
        seed: Base seed; defaults to the scenario seed.

    Returns:
        Tuple of (pool, labels).

    """
    seed = config.seed if seed is None else seed
    rng = make_generator(seed, STREAM_POOL)
    labels = (rng.random(config.n_points) < config.positive_fraction).astype(np.int64)
    prob = _scores(rng, labels, config)
    LOGGER.debug(
        "Simulated %d points, %d positive", config.n_points, int(labels.sum())
    )
    return PredictionPool(prob, config.threshold), labels


def simulate_multilabel_pool(
    config: ScenarioConfig, n_classes: int, seed: int | None = None
) -> tuple[MultiLabelPool, np.ndarray]:
    """Simulate C independent classes, each drawn like a binary pool."""
    seed = config.seed if seed is None else seed
    rng = make_generator(seed, STREAM_POOL, n_classes)
    shape = (config.n_points, n_classes)
    labels = (rng.random(shape) < config.positive_fraction).astype(np.int64)
    prob = _scores(rng, labels, config)
    LOGGER.debug(
        "Simulated %d points over %d classes, %d positive labels",
        config.n_points,
        n_classes,
        int(labels.sum()),
    )
    return MultiLabelPool(prob, config.threshold), labels


def simulate_scenario(
    config: ScenarioConfig, seed: int | None = None
) -> tuple[PredictionPool | MultiLabelPool, np.ndarray]:
    """Simulate the pool a scenario describes, multilabel when it sets n_classes."""
    if config.n_classes is None:
        return simulate_pool(config, seed)
    return simulate_multilabel_pool(config, config.n_classes, seed)
