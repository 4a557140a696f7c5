"""
Ratio metrics, the blended label posterior and per-point deviations.

A ratio metric is a pair of 2x2 payoff tables f and g indexed by
(predicted class, true class); its value on a labelled pool is sum(f) / sum(g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np

from .const import DEFAULT_LAMBDA, LOGGER
from .data import UNLABELED, BlendedPosterior, DeviationVector, labels_array
from .exceptions import DegenerateMetric, ValidationError

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from .data import PredictionPool

Table = tuple[tuple[float, float], tuple[float, float]]

_TABLE_SHAPE = (2, 2)


class RatioMetric(Protocol):
    """Anything that turns predictions and true labels into per-point (f, g)."""

    name: str

    def payoffs(
        self, pred: np.ndarray, true: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Return per-point numerator and denominator payoffs."""
        ...


def _as_table(values: Any, which: str) -> Table:
    table = np.asarray(values, dtype=float)
    if table.shape != _TABLE_SHAPE:
        msg = f"{which} table must be 2x2, got shape {table.shape}"
        raise ValidationError(msg)
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        msg = f"{which} table entries must be finite and nonnegative"
        raise ValidationError(msg)
    return (
        (float(table[0, 0]), float(table[0, 1])),
        (float(table[1, 0]), float(table[1, 1])),
    )


@dataclass(frozen=True)
class MetricSpec:
    """
    A binary ratio metric given by its payoff tables.

    Attributes:
        name: Display name, also used to parse the metric back from the CLI.
        f_table: Numerator payoff indexed [pred][true].
        g_table: Denominator payoff indexed [pred][true].
        alpha: Weight of the F-alpha family, None for other metrics.

    """

    name: str
    f_table: Table
    g_table: Table
    alpha: float | None = None

    def __post_init__(self) -> None:
        """Validate and normalize the tables."""
        object.__setattr__(self, "f_table", _as_table(self.f_table, "f"))
        object.__setattr__(self, "g_table", _as_table(self.g_table, "g"))

    @property
    def f(self) -> np.ndarray:
        """Numerator table as an array."""
        return np.array(self.f_table)

    @property
    def g(self) -> np.ndarray:
        """Denominator table as an array."""
        return np.array(self.g_table)

    def payoffs(
        self, pred: np.ndarray, true: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """
        Look up per-point payoffs.

        Args:
            pred: Predicted classes.
            true: True classes, same shape.

        Returns:
            Tuple of (f, g) arrays.

        """
        pred = np.asarray(pred, dtype=np.int64)
        true = np.asarray(true, dtype=np.int64)
        return self.f[pred, true], self.g[pred, true]

    @classmethod
    def accuracy(cls) -> MetricSpec:
        """Fraction of correctly classified points."""
        return cls("Accuracy", ((1.0, 0.0), (0.0, 1.0)), ((1.0, 1.0), (1.0, 1.0)))

    @classmethod
    def f_alpha(cls, alpha: float, name: str | None = None) -> MetricSpec:
        """
        Weighted harmonic mean of precision and recall.

        Alpha 1 is precision, alpha 0 is recall and alpha 1/2 is F1.
        """
        if not 0.0 <= alpha <= 1.0:
            msg = f"FAlpha weight {alpha} is outside [0, 1]"
            raise ValidationError(msg)
        return cls(
            name or f"FAlpha:{alpha:g}",
            ((0.0, 0.0), (0.0, 1.0)),
            ((0.0, 1.0 - alpha), (alpha, 1.0)),
            alpha=alpha,
        )

    @classmethod
    def f1(cls) -> MetricSpec:
        """Return the F1 score."""
        return cls.f_alpha(0.5, name="F1")

    @classmethod
    def precision(cls) -> MetricSpec:
        """Return precision."""
        return cls.f_alpha(1.0, name="Precision")

    @classmethod
    def recall(cls) -> MetricSpec:
        """Return recall."""
        return cls.f_alpha(0.0, name="Recall")

    @classmethod
    def specificity(cls) -> MetricSpec:
        """Fraction of true negatives predicted negative."""
        return cls("Specificity", ((1.0, 0.0), (0.0, 0.0)), ((1.0, 0.0), (1.0, 0.0)))

    @classmethod
    def custom(
        cls,
        name: str,
        f_table: Sequence[Sequence[float]],
        g_table: Sequence[Sequence[float]],
    ) -> MetricSpec:
        """Build a ratio metric from arbitrary nonnegative tables."""
        return cls(name, _as_table(f_table, "f"), _as_table(g_table, "g"))


_NAMED_METRICS = {
    "accuracy": MetricSpec.accuracy,
    "f1": MetricSpec.f1,
    "precision": MetricSpec.precision,
    "recall": MetricSpec.recall,
    "specificity": MetricSpec.specificity,
}


def metric_from_name(name: str) -> MetricSpec:
    """
    Parse a binary metric name.

    Args:
        name: One of Accuracy, F1, Precision, Recall, Specificity or FAlpha:<alpha>.

    Returns:
        The matching MetricSpec.

    Raises:
        ValidationError: If the name is unknown.

    """
    key = name.strip().lower()
    if key in _NAMED_METRICS:
        return _NAMED_METRICS[key]()
    if key.startswith("falpha:"):
        try:
            alpha = float(key.split(":", 1)[1])
        except ValueError as err:
            msg = f"Bad FAlpha weight in {name!r}"
            raise ValidationError(msg) from err
        return MetricSpec.f_alpha(alpha)
    msg = f"Unknown metric {name!r}"
    raise ValidationError(msg)


def _check_unit(value: float, what: str) -> None:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        msg = f"{what} {value} is outside [0, 1]"
        raise ValidationError(msg)


def predict_class(prob: float, threshold: float) -> int:
    """Return 1 when prob is strictly above threshold, else 0."""
    _check_unit(prob, "Probability")
    _check_unit(threshold, "Threshold")
    return int(prob > threshold)


def blend_posterior(pool: Any, lam: float = DEFAULT_LAMBDA) -> BlendedPosterior:
    """
    Shrink model probabilities towards one half.

    Args:
        pool: Any pool exposing prob_positive (binary or per-class).
        lam: Trust in the model, 1 keeps it and 0 gives 0.5 everywhere.

    Returns:
        The blended posterior.

    """
    _check_unit(lam, "Lambda")
    return BlendedPosterior(lam, lam * pool.prob_positive + (1.0 - lam) * 0.5)


def expected_payoffs(
    pool: PredictionPool, metric: MetricSpec, post: BlendedPosterior
) -> tuple[np.ndarray, np.ndarray]:
    """Return per-point E[f] and E[g] under the blended posterior."""
    pred = pool.pred_class
    p_a = post.p_a
    ef = p_a * metric.f[pred, 1] + (1.0 - p_a) * metric.f[pred, 0]
    eg = p_a * metric.g[pred, 1] + (1.0 - p_a) * metric.g[pred, 0]
    return ef, eg


def predicted_metric(
    pool: PredictionPool, metric: MetricSpec, post: BlendedPosterior
) -> float:
    """
    Predict the metric from the blended posterior alone.

    Returns:
        sum(E[f]) / sum(E[g]).

    Raises:
        DegenerateMetric: If the expected denominator is not positive.

    """
    ef, eg = expected_payoffs(pool, metric, post)
    denominator = float(eg.sum())
    if denominator <= 0.0:
        raise DegenerateMetric(metric.name, "expected denominator is zero")
    value = float(ef.sum()) / denominator
    LOGGER.debug("Predicted %s = %.6f under lambda %.3f", metric.name, value, post.lam)
    return value


def deviations(
    pool: PredictionPool,
    metric: MetricSpec,
    post: BlendedPosterior,
    f_ref: float,
) -> DeviationVector:
    """
    Compute the root expected squared residual of every point.

    Args:
        pool: Prediction pool.
        metric: Metric being planned for.
        post: Blended posterior over true labels.
        f_ref: Metric value the residuals f - f_ref * g are taken against.

    Returns:
        The deviation vector h.

    """
    if not math.isfinite(f_ref):
        msg = f"Reference metric value must be finite, got {f_ref}"
        raise ValidationError(msg)
    pred = pool.pred_class
    residual_pos = metric.f[pred, 1] - f_ref * metric.g[pred, 1]
    residual_neg = metric.f[pred, 0] - f_ref * metric.g[pred, 0]
    h2 = post.p_a * residual_pos**2 + (1.0 - post.p_a) * residual_neg**2
    return DeviationVector(np.sqrt(h2), f_ref)


def exact_metric(
    pool: PredictionPool,
    labels: Mapping[int, int] | Sequence[int] | np.ndarray,
    metric: RatioMetric,
) -> float:
    """
    Evaluate a metric on a fully labelled pool.

    Raises:
        ValidationError: If any point is unlabeled.
        DegenerateMetric: If sum(g) is zero.

    """
    true = labels_array(labels, pool.shape)
    if np.any(true == UNLABELED):
        msg = "Exact evaluation needs a label for every point"
        raise ValidationError(msg)
    f, g = metric.payoffs(pool.pred_class, true)
    denominator = g.sum()
    if denominator <= 0.0:
        raise DegenerateMetric(metric.name)
    return float(f.sum() / denominator)
