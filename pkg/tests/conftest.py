"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from metricwise.config import ScenarioConfig
from metricwise.data import PredictionPool


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def small_pool() -> PredictionPool:
    return PredictionPool(np.array([0.95, 0.8, 0.3, 0.6, 0.1, 0.7, 0.2, 0.55]))


@pytest.fixture
def small_labels() -> np.ndarray:
    return np.array([1, 1, 1, 0, 0, 1, 0, 0])


@pytest.fixture
def scenario() -> ScenarioConfig:
    return ScenarioConfig(
        n_points=300, repetitions=30, budgets=(0.2, 0.5), seed=7, label_noise=0.02
    )


def random_pool(
    rng: np.random.Generator, size: int
) -> tuple[PredictionPool, np.ndarray]:
    """Return a pool with labels drawn from its own probabilities."""
    prob = rng.random(size)
    labels = (rng.random(size) < prob).astype(np.int64)
    return PredictionPool(prob), labels
