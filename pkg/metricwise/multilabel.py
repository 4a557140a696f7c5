"""
Micro and macro F-scores for multilabel pools.

Micro F-scores are ratio metrics whose per-point payoffs sum over classes, so they
run through the binary samplers unchanged. Macro F1 is a nonlinear function of
per-class true positive, false positive and false negative rates; its sampling
error is propagated with the delta method.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .confidence import build_report
from .const import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    DEFAULT_LEVEL,
    FLAG_DEGENERATE_CLASS,
    FLAG_EXACT,
    LOGGER,
)
from .data import (
    BlendedPosterior,
    DeviationVector,
    MultiLabelPool,
    labels_array,
    sampled_labels,
)
from .exceptions import DegenerateEstimate, DegenerateMetric, ValidationError

if TYPE_CHECKING:
    from .data import BernoulliPlan, BSDraw, EstimateReport, ImportancePlan, ISDraw

MACRO_F1 = "MacroF1"
MICRO_F1 = "MicroF1"

__all__ = [
    "MACRO_F1",
    "MICRO_F1",
    "MacroCounts",
    "MicroF1",
    "MultiLabelPool",
    "estimate_macro_bs",
    "estimate_macro_is",
    "exact_macro_f1",
    "expected_macro_counts",
    "expected_macro_error_bs",
    "macro_counts_bs",
    "macro_counts_is",
    "macro_deviation",
    "macro_f1",
    "macro_gradients",
    "macro_moments_bs",
    "macro_moments_is",
    "macro_precision_recall",
    "macro_variance",
    "micro_deviation",
    "micro_fg",
    "micro_predicted_metric",
]


@dataclass(frozen=True)
class MicroF1:
    """Micro-averaged F-alpha: per-point payoffs summed over classes."""

    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        """Validate the weight."""
        if not 0.0 <= self.alpha <= 1.0:
            msg = f"Micro F weight {self.alpha} is outside [0, 1]"
            raise ValidationError(msg)

    @property
    def name(self) -> str:
        """Display name."""
        if self.alpha == DEFAULT_ALPHA:
            return MICRO_F1
        return f"MicroFAlpha:{self.alpha:g}"

    def payoffs(
        self, pred: np.ndarray, true: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Return per-point f and g summed over the last (class) axis."""
        pred = np.asarray(pred, dtype=float)
        true = np.asarray(true, dtype=float)
        f = (pred * true).sum(axis=-1)
        g = (self.alpha * pred + (1.0 - self.alpha) * true).sum(axis=-1)
        return f, g


def micro_fg(
    pool: MultiLabelPool,
    index: int,
    true: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
) -> tuple[float, float]:
    """Return the micro payoffs (f, g) of one point for its true label vector."""
    true = np.asarray(true)
    if true.shape != (pool.n_classes,) or np.any((true != 0) & (true != 1)):
        msg = f"Expected a binary vector of {pool.n_classes} labels"
        raise ValidationError(msg)
    f, g = MicroF1(alpha).payoffs(pool.pred_class[index], true)
    return float(f), float(g)


def _micro_branches(
    pool: MultiLabelPool, f_ref: float, alpha: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class residuals for a positive and a negative true label."""
    v = pool.pred_class.astype(float)
    positive = v - f_ref * (alpha * v + (1.0 - alpha))
    negative = -f_ref * alpha * v
    return positive, negative


def micro_predicted_metric(
    pool: MultiLabelPool, post: BlendedPosterior, alpha: float = DEFAULT_ALPHA
) -> float:
    """Predict micro F-alpha from the blended per-class posteriors."""
    v = pool.pred_class
    expected_f = (v * post.p_a).sum()
    expected_g = (alpha * v + (1.0 - alpha) * post.p_a).sum()
    if expected_g <= 0:
        raise DegenerateMetric(MicroF1(alpha).name, "expected denominator is zero")
    return float(expected_f / expected_g)


def micro_deviation(
    pool: MultiLabelPool,
    post: BlendedPosterior,
    f_ref: float,
    alpha: float = DEFAULT_ALPHA,
) -> DeviationVector:
    """
    Return per-point deviations of micro F-alpha.

    With classes independent, E[(sum_k h_k)**2] is the sum of per-class second
    moments, minus their squared means, plus the square of the summed means.
    """
    positive, negative = _micro_branches(pool, f_ref, alpha)
    p = post.p_a
    second = p * positive**2 + (1.0 - p) * negative**2
    first = p * positive + (1.0 - p) * negative
    h2 = second.sum(axis=1) - (first**2).sum(axis=1) + first.sum(axis=1) ** 2
    return DeviationVector(np.sqrt(np.maximum(h2, 0.0)), f_ref)


@dataclass(frozen=True, eq=False)
class MacroCounts:
    """Per-class true positive (a), false positive (b) and false negative (c) rates."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        """Validate shapes and signs."""
        arrays = [np.array(x, dtype=float) for x in (self.a, self.b, self.c)]
        shapes = {x.shape for x in arrays}
        if len(shapes) != 1 or arrays[0].ndim != 1 or arrays[0].size == 0:
            msg = "Macro counts need three equal-length per-class vectors"
            raise ValidationError(msg)
        if any(np.any(x < 0) for x in arrays):
            msg = "Macro counts must be nonnegative"
            raise ValidationError(msg)
        for name, x in zip(("a", "b", "c"), arrays, strict=True):
            x.setflags(write=False)
            object.__setattr__(self, name, x)

    @property
    def n_classes(self) -> int:
        """Number of classes."""
        return int(self.a.size)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def macro_precision_recall(counts: MacroCounts) -> tuple[float, float, np.ndarray]:
    """
    Return macro precision, macro recall and the degenerate-class mask.

    A class whose precision or recall denominator is zero contributes 0 to the
    corresponding average and is marked degenerate.
    """
    precision_den = counts.a + counts.b
    recall_den = counts.a + counts.c
    degenerate = (precision_den <= 0) | (recall_den <= 0)
    precision = _safe_ratio(counts.a, precision_den).mean()
    recall = _safe_ratio(counts.a, recall_den).mean()
    return float(precision), float(recall), degenerate


def macro_f1(counts: MacroCounts) -> float:
    """
    Return the harmonic mean of macro precision and macro recall.

    Raises:
        DegenerateMetric: If both averages are zero.

    """
    precision, recall, degenerate = macro_precision_recall(counts)
    if precision + recall <= 0:
        raise DegenerateMetric(MACRO_F1, "precision and recall are both zero")
    if degenerate.any():
        LOGGER.debug("Macro F1 has %d degenerate classes", np.count_nonzero(degenerate))
    return 2.0 * precision * recall / (precision + recall)


def macro_gradients(
    counts: MacroCounts,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Return the analytic gradient of macro F1 with respect to a, b and c.

    Args:
        counts: Point at which to differentiate.

    Returns:
        Tuple of per-class partial derivatives (d/da, d/db, d/dc).

    """
    precision, recall, _ = macro_precision_recall(counts)
    total = precision + recall
    if total <= 0:
        raise DegenerateMetric(MACRO_F1, "precision and recall are both zero")
    by_precision = 2.0 * recall**2 / total**2
    by_recall = 2.0 * precision**2 / total**2
    precision_den = (counts.a + counts.b) ** 2
    recall_den = (counts.a + counts.c) ** 2
    classes = counts.n_classes
    da = (
        by_precision * _safe_ratio(counts.b, precision_den)
        + by_recall * _safe_ratio(counts.c, recall_den)
    ) / classes
    db = -by_precision * _safe_ratio(counts.a, precision_den) / classes
    dc = -by_recall * _safe_ratio(counts.a, recall_den) / classes
    return da, db, dc


def expected_macro_counts(pool: MultiLabelPool, post: BlendedPosterior) -> MacroCounts:
    """Return the per-class rates expected under the blended posterior."""
    v = pool.pred_class
    p = post.p_a
    return MacroCounts(
        (v * p).mean(axis=0),
        (v * (1.0 - p)).mean(axis=0),
        ((1 - v) * p).mean(axis=0),
    )


def macro_deviation(pool: MultiLabelPool, post: BlendedPosterior) -> DeviationVector:
    """
    Return per-point deviations of macro F1.

    Gradients are taken at the expected counts; each point contributes the squared
    gradient of every count it can land in, weighted by the posterior.
    """
    counts = expected_macro_counts(pool, post)
    f_ref = macro_f1(counts)
    da, db, dc = macro_gradients(counts)
    v = pool.pred_class
    p = post.p_a
    h2 = (v * p * da**2 + v * (1.0 - p) * db**2 + (1 - v) * p * dc**2).sum(axis=1)
    return DeviationVector(np.sqrt(h2), f_ref)


def _weighted_counts(
    pool: MultiLabelPool, indices: np.ndarray, true: np.ndarray, weights: np.ndarray
) -> MacroCounts:
    v = pool.pred_class[indices]
    w = weights[:, None]
    size = pool.size
    return MacroCounts(
        (w * v * true).sum(axis=0) / size,
        (w * v * (1 - true)).sum(axis=0) / size,
        (w * (1 - v) * true).sum(axis=0) / size,
    )


def _linear_terms(
    pool: MultiLabelPool,
    indices: np.ndarray,
    true: np.ndarray,
    gradients: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> np.ndarray:
    """First-order contribution of each point to macro F1."""
    da, db, dc = gradients
    v = pool.pred_class[indices]
    return (v * true * da + v * (1 - true) * db + (1 - v) * true * dc).sum(axis=1)


def macro_variance(
    u: np.ndarray,
    weights: np.ndarray,
    factor: np.ndarray | float,
    scale: float,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """
    Evaluate the delta-method variance sum(w * (factor * u**2 + eps)) / scale**2.

    Args:
        u: First-order contribution of each labelled point.
        weights: Per-point sampling weights (1 / b, or counts / q**2).
        factor: Per-point variance factor (1 / b - 1, or 1 for draws).
        scale: Normalizer (N, or M * N).
        epsilon: Floor added to every labelled point.

    Returns:
        The variance, never negative.

    """
    spread = (weights * (factor * u**2 + epsilon)).sum()
    return max(float(spread) / scale**2, 0.0)


def _check_sizes(pool: MultiLabelPool, draw_size: int, plan_size: int) -> None:
    if not pool.size == draw_size == plan_size:
        msg = "Pool, plan and draw sizes differ"
        raise ValidationError(msg)


def macro_counts_bs(
    pool: MultiLabelPool,
    draw: BSDraw,
    plan: BernoulliPlan,
    labels: np.ndarray,
) -> MacroCounts:
    """Return the reweighted per-class rates of a Bernoulli selection."""
    _check_sizes(pool, draw.selected.size, plan.size)
    labels = labels_array(labels, pool.shape)
    indices = draw.indices
    true = sampled_labels(labels, indices)
    return _weighted_counts(pool, indices, true, 1.0 / plan.b[indices])


def macro_counts_is(
    pool: MultiLabelPool,
    draw: ISDraw,
    plan: ImportancePlan,
    labels: np.ndarray,
) -> MacroCounts:
    """Return the reweighted per-class rates of an importance draw."""
    _check_sizes(pool, draw.counts.size, plan.size)
    labels = labels_array(labels, pool.shape)
    indices = draw.indices
    true = sampled_labels(labels, indices)
    weights = draw.counts[indices] / (plan.budget * plan.q[indices])
    return _weighted_counts(pool, indices, true, weights)


def _sampled_macro(counts: MacroCounts) -> tuple[float, tuple[str, ...]]:
    try:
        value = macro_f1(counts)
    except DegenerateMetric as err:
        msg = f"Sampled macro F1 is undefined: {err}"
        raise DegenerateEstimate(msg) from err
    _, _, degenerate = macro_precision_recall(counts)
    return value, (FLAG_DEGENERATE_CLASS,) if degenerate.any() else ()


def macro_moments_bs(
    pool: MultiLabelPool,
    draw: BSDraw,
    plan: BernoulliPlan,
    labels: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[float, float, tuple[str, ...]]:
    """
    Estimate macro F1 and its delta-method variance from a Bernoulli selection.

    Returns:
        Tuple of (estimate, variance, flags).

    """
    if draw.distinct == 0:
        msg = "Empty Bernoulli selection"
        raise DegenerateEstimate(msg)
    counts = macro_counts_bs(pool, draw, plan, labels)
    value, flags = _sampled_macro(counts)
    indices = draw.indices
    true = sampled_labels(labels_array(labels, pool.shape), indices)
    u = _linear_terms(pool, indices, true, macro_gradients(counts))
    b = plan.b[indices]
    variance = macro_variance(u, 1.0 / b, 1.0 / b - 1.0, pool.size, epsilon)
    if np.all(plan.b >= 1.0):
        flags = (*flags, FLAG_EXACT)
    return value, variance, flags


def macro_moments_is(
    pool: MultiLabelPool,
    draw: ISDraw,
    plan: ImportancePlan,
    labels: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[float, float, tuple[str, ...]]:
    """
    Estimate macro F1 and its delta-method variance from importance draws.

    The linearized terms sum to zero at the estimate, so the with-replacement
    variance reduces to sum(counts * u**2 / q**2) / (M * N)**2.
    """
    counts = macro_counts_is(pool, draw, plan, labels)
    value, flags = _sampled_macro(counts)
    indices = draw.indices
    true = sampled_labels(labels_array(labels, pool.shape), indices)
    u = _linear_terms(pool, indices, true, macro_gradients(counts))
    weights = draw.counts[indices] / plan.q[indices] ** 2
    scale = plan.budget * pool.size
    return value, macro_variance(u, weights, 1.0, scale, epsilon), flags


def estimate_macro_bs(  # noqa: PLR0913
    pool: MultiLabelPool,
    draw: BSDraw,
    plan: BernoulliPlan,
    labels: np.ndarray,
    level: float = DEFAULT_LEVEL,
    epsilon: float = DEFAULT_EPSILON,
) -> EstimateReport:
    """Estimate macro F1 from a Bernoulli selection with a Beta interval."""
    value, variance, flags = macro_moments_bs(pool, draw, plan, labels, epsilon)
    return build_report(
        value,
        variance,
        metric=MACRO_F1,
        method=plan.method,
        level=level,
        flags=flags,
        n_labeled=draw.distinct,
        n_draws=draw.distinct,
    )


def estimate_macro_is(  # noqa: PLR0913
    pool: MultiLabelPool,
    draw: ISDraw,
    plan: ImportancePlan,
    labels: np.ndarray,
    level: float = DEFAULT_LEVEL,
    epsilon: float = DEFAULT_EPSILON,
) -> EstimateReport:
    """Estimate macro F1 from importance draws with a Beta interval."""
    value, variance, flags = macro_moments_is(pool, draw, plan, labels, epsilon)
    return build_report(
        value,
        variance,
        metric=MACRO_F1,
        method=plan.method,
        level=level,
        flags=flags,
        n_labeled=draw.distinct,
        n_draws=draw.total,
    )


def expected_macro_error_bs(
    pool: MultiLabelPool, labels: np.ndarray, plan: BernoulliPlan
) -> float:
    """Return the delta-method variance of Bernoulli macro F1 for known labels."""
    true = labels_array(labels, pool.shape)
    everything = np.arange(pool.size)
    true = sampled_labels(true, everything)
    counts = _weighted_counts(pool, everything, true, np.ones(pool.size))
    u = _linear_terms(pool, everything, true, macro_gradients(counts))
    return float(((1.0 / plan.b - 1.0) * u**2).sum() / pool.size**2)


def exact_macro_f1(pool: MultiLabelPool, labels: np.ndarray) -> float:
    """
    Evaluate macro F1 on a fully labelled pool.

    Raises:
        MissingLabel: If any point is unlabeled.
        DegenerateMetric: If macro precision and recall are both zero.

    """
    everything = np.arange(pool.size)
    true = sampled_labels(labels_array(labels, pool.shape), everything)
    return macro_f1(_weighted_counts(pool, everything, true, np.ones(pool.size)))
