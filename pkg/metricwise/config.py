"""Scenario configuration for the experiment harness."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from itertools import pairwise
from pathlib import Path
from typing import TYPE_CHECKING, Any

import voluptuous as vol
import yaml

from .const import (
    DEFAULT_B_MIN,
    DEFAULT_EPSILON,
    DEFAULT_LAMBDA,
    DEFAULT_LEVEL,
    DEFAULT_THRESHOLD,
    DESK_POINTS,
    DESK_REPETITIONS,
    ENV_SEED,
    FULL_POINTS,
    FULL_REPETITIONS,
    LOGGER,
    METHOD_ALIASES,
    METHODS,
)
from .exceptions import InvalidBudget, ValidationError

if TYPE_CHECKING:
    from collections.abc import Mapping

DEFAULT_BUDGETS = [0.2, 0.4, 0.6, 0.8]

_unit = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0))
_open_unit = vol.All(
    vol.Coerce(float),
    vol.Range(min=0.0, max=1.0, min_included=False, max_included=False),
)
_positive = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_count = vol.All(vol.Coerce(int), vol.Range(min=1))

SCENARIO_SCHEMA = vol.Schema(
    {
        vol.Optional("n_points", default=DESK_POINTS): _count,
        vol.Optional("positive_fraction", default=0.1): _open_unit,
        vol.Optional("positive_sharpness", default=2.0): _positive,
        vol.Optional("negative_sharpness", default=100.0): _positive,
        vol.Optional("label_noise", default=0.005): _unit,
        vol.Optional("temperature", default=1.0): _positive,
        vol.Optional("threshold", default=DEFAULT_THRESHOLD): _unit,
        vol.Optional("lambda", default=DEFAULT_LAMBDA): _unit,
        vol.Optional("metric_plan", default="F1"): str,
        vol.Optional("metric_eval", default="F1"): str,
        vol.Optional("budgets", default=DEFAULT_BUDGETS): vol.All(
            [_positive], vol.Length(min=1)
        ),
        vol.Optional("repetitions", default=DESK_REPETITIONS): _count,
        vol.Optional("seed", default=0): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional("methods", default=list(METHODS)): vol.All(
            [vol.All(str, vol.Lower, vol.In(METHOD_ALIASES))], vol.Length(min=1)
        ),
        vol.Optional("level", default=DEFAULT_LEVEL): _open_unit,
        vol.Optional("epsilon", default=DEFAULT_EPSILON): vol.All(
            vol.Coerce(float), vol.Range(min=0.0)
        ),
        vol.Optional("b_min", default=DEFAULT_B_MIN): _open_unit,
        vol.Optional("workers", default=1): _count,
        vol.Optional("n_classes", default=None): vol.Any(None, _count),
    }
)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    A validated experiment scenario.

    Attributes:
        n_points: Pool size N.
        positive_fraction: Fraction of true positives in the pool.
        positive_sharpness: Shape s of the Beta(s, 1) score of positives.
        negative_sharpness: Shape s of the Beta(1, s) score of negatives.
        label_noise: Probability that a point is scored as the opposite class.
        temperature: Logit temperature; above 1 flattens scores towards 1/2.
        threshold: Decision threshold.
        lam: Posterior blend weight.
        metric_plan: Metric the plans are optimized for.
        metric_eval: Metric that is estimated and scored.
        budgets: Budgets in ascending order, fractions of N when at most 1.
        repetitions: Monte Carlo repetitions per cell.
        seed: Base seed of every stream.
        methods: Sampling methods, in canonical order.
        level: Confidence level of the reported intervals.
        epsilon: Residual floor of the post-sampling variance.
        b_min: Floor of zero-deviation Bernoulli probabilities.
        workers: Threads running repetitions.
        n_classes: Number of classes of a simulated multilabel pool, None for a
            binary pool.

    """

    n_points: int = DESK_POINTS
    positive_fraction: float = 0.1
    positive_sharpness: float = 2.0
    negative_sharpness: float = 100.0
    label_noise: float = 0.005
    temperature: float = 1.0
    threshold: float = DEFAULT_THRESHOLD
    lam: float = DEFAULT_LAMBDA
    metric_plan: str = "F1"
    metric_eval: str = "F1"
    budgets: tuple[float, ...] = tuple(DEFAULT_BUDGETS)
    repetitions: int = DESK_REPETITIONS
    seed: int = 0
    methods: tuple[str, ...] = tuple(METHODS)
    level: float = DEFAULT_LEVEL
    epsilon: float = DEFAULT_EPSILON
    b_min: float = DEFAULT_B_MIN
    workers: int = 1
    n_classes: int | None = None

    def __post_init__(self) -> None:
        """Check the budget grid against the pool size and the metrics."""
        points = self.budget_points()
        if any(later <= earlier for earlier, later in pairwise(points)):
            msg = f"Budgets must be strictly ascending, got {list(self.budgets)}"
            raise InvalidBudget(msg)
        if points[0] < 1 or points[-1] > self.n_points:
            msg = f"Budgets must lie in [1, {self.n_points}], got {points}"
            raise InvalidBudget(msg)
        if self.repetitions < 1:
            msg = "At least one repetition is needed"
            raise ValidationError(msg)
        if self.n_classes is not None and self.n_classes < 1:
            msg = f"A multilabel pool needs at least one class, got {self.n_classes}"
            raise ValidationError(msg)
        for metric in (self.metric_plan, self.metric_eval):
            if is_multilabel_metric(metric) != self.multilabel:
                pool = "multilabel" if self.multilabel else "binary"
                msg = f"{metric} cannot be measured on a {pool} pool"
                raise ValidationError(msg)

    @property
    def multilabel(self) -> bool:
        """Whether the scenario simulates a multilabel pool."""
        return self.n_classes is not None

    def budget_points(self) -> list[float]:
        """Return the budgets as expected numbers of labelled points."""
        return [b * self.n_points if b <= 1 else float(b) for b in self.budgets]

    def budget_fractions(self) -> list[float]:
        """Return the budgets as fractions of the pool."""
        return [m / self.n_points for m in self.budget_points()]

    def with_changes(self, **changes: Any) -> ScenarioConfig:
        """Return a copy with some fields replaced."""
        return replace(self, **changes)


def is_multilabel_metric(name: str) -> bool:
    """Return whether a metric name is a micro or macro multilabel average."""
    return name.strip().lower().startswith(("micro", "macro"))


def _canonical_methods(names: list[str]) -> tuple[str, ...]:
    chosen = {METHOD_ALIASES[name] for name in names}
    return tuple(method for method in METHODS if method in chosen)


def scenario_from_mapping(
    data: Mapping[str, Any] | None,
    *,
    full: bool = False,
    env: Mapping[str, str] | None = None,
) -> ScenarioConfig:
    """
    Validate a raw mapping and build the scenario.

    Args:
        data: Raw configuration, None for all defaults.
        full: Switch to the full replication scale.
        env: Environment to read the seed override from; defaults to os.environ.

    Returns:
        The validated scenario.

    Raises:
        ValidationError: If the mapping violates the schema.

    """
    try:
        raw = SCENARIO_SCHEMA(dict(data or {}))
    except vol.Invalid as err:
        msg = f"Invalid scenario: {err}"
        raise ValidationError(msg) from err

    if full:
        raw["n_points"] = FULL_POINTS
        raw["repetitions"] = FULL_REPETITIONS
    env = os.environ if env is None else env
    if env.get(ENV_SEED):
        try:
            raw["seed"] = int(env[ENV_SEED])
        except ValueError as err:
            msg = f"{ENV_SEED} must be an integer, got {env[ENV_SEED]!r}"
            raise ValidationError(msg) from err
        LOGGER.info("Seed overridden from %s: %d", ENV_SEED, raw["seed"])

    for key in ("positive_sharpness", "negative_sharpness"):
        if math.isnan(raw[key]):
            msg = f"{key} must be a number"
            raise ValidationError(msg)

    return ScenarioConfig(
        n_points=raw["n_points"],
        positive_fraction=raw["positive_fraction"],
        positive_sharpness=raw["positive_sharpness"],
        negative_sharpness=raw["negative_sharpness"],
        label_noise=raw["label_noise"],
        temperature=raw["temperature"],
        threshold=raw["threshold"],
        lam=raw["lambda"],
        metric_plan=raw["metric_plan"],
        metric_eval=raw["metric_eval"],
        budgets=tuple(raw["budgets"]),
        repetitions=raw["repetitions"],
        seed=raw["seed"],
        methods=_canonical_methods(raw["methods"]),
        level=raw["level"],
        epsilon=raw["epsilon"],
        b_min=raw["b_min"],
        workers=raw["workers"],
        n_classes=raw["n_classes"],
    )


def load_scenario(
    path: str | Path | None = None,
    *,
    full: bool = False,
    env: Mapping[str, str] | None = None,
) -> ScenarioConfig:
    """
    Load a scenario from a YAML or JSON file.

    Args:
        path: Scenario file; None gives the default scenario.
        full: Switch to the full replication scale.
        env: Environment to read the seed override from.

    Returns:
        The validated scenario.

    Raises:
        ValidationError: If the file cannot be read or parsed, or is invalid.

    """
    if path is None:
        return scenario_from_mapping(None, full=full, env=env)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (OSError, yaml.YAMLError, json.JSONDecodeError) as err:
        msg = f"Cannot read scenario {path}: {err}"
        raise ValidationError(msg) from err
    if data is not None and not isinstance(data, dict):
        msg = f"Scenario {path} must hold a mapping"
        raise ValidationError(msg)
    LOGGER.debug("Loaded scenario from %s", path)
    return scenario_from_mapping(data, full=full, env=env)
