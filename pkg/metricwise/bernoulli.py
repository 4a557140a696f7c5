"""
Bernoulli (Poisson) sampling.

Each point is labelled independently with its own inclusion probability b and
reweighted by 1 / b. The probabilities minimizing sum(h**2 / b) for a given
expected sample size come from water-filling: the largest deviations saturate
at b = 1 and the rest share the remaining budget in proportion to h.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .const import DEFAULT_B_MIN, DEFAULT_EPSILON, LOGGER
from .data import (
    UNLABELED,
    BSDraw,
    DeviationVector,
    RatioEstimate,
    labels_array,
    sampled_labels,
)
from .exceptions import (
    DegenerateEstimate,
    DegenerateMetric,
    InvalidBudget,
    ValidationError,
)
from .streams import make_generator

if TYPE_CHECKING:
    from .data import BernoulliPlan, Pool
    from .metrics import MetricSpec, RatioMetric


def _water_fill(h: np.ndarray, budget: float) -> np.ndarray:
    """Solve min sum(h**2 / b) s.t. sum(b) = budget, 0 < b <= 1 for positive h."""
    order = np.argsort(-h, kind="stable")
    ranked = h[order]
    tail = np.cumsum(ranked[::-1])[::-1]
    remaining = budget - np.arange(ranked.size)
    # Top k saturate for the smallest k whose largest unsaturated share fits.
    fits = (remaining > 0) & (remaining * ranked <= tail)
    k = int(np.argmax(fits))
    filled = np.ones_like(ranked)
    filled[k:] = remaining[k] * ranked[k:] / tail[k]
    b = np.empty_like(filled)
    b[order] = filled
    return b


def optimal_bernoulli(
    h: DeviationVector | np.ndarray,
    budget: float,
    b_min: float = DEFAULT_B_MIN,
) -> np.ndarray:
    """
    Return inclusion probabilities minimizing sum(h**2 / b).

    No point gets less than the floor b_min. Zero-deviation points start on the
    floor and any point the water-fill leaves below it joins them, so the floor is
    taken out of the budget before the others are filled. Once every other point
    is saturated the floored points share whatever budget is left. The result is
    nondecreasing in h.

    Args:
        h: Deviations.
        budget: Expected number of labelled points M, 1 <= M <= N.
        b_min: Smallest inclusion probability.

    Returns:
        Inclusion probabilities b summing to budget.

    Raises:
        InvalidBudget: If the budget is outside [1, N].

    """
    values = h.h if isinstance(h, DeviationVector) else np.asarray(h, dtype=float)
    size = values.size
    if not 1 <= budget <= size:
        msg = f"Budget {budget:g} is outside [1, {size}]"
        raise InvalidBudget(msg)
    if np.any(values < 0):
        msg = "Deviations must be nonnegative"
        raise ValidationError(msg)
    if values.sum() == 0:
        return np.full(size, budget / size)

    floored = values == 0
    b = np.empty(size)
    while True:
        n_floored = int(np.count_nonzero(floored))
        n_active = size - n_floored
        if budget >= n_active + b_min * n_floored:
            b[~floored] = 1.0
            if n_floored:
                b[floored] = (budget - n_active) / n_floored
            break
        active_budget = budget - b_min * n_floored
        if active_budget <= 0:
            msg = f"Floor {b_min:g} on {n_floored} points exhausts budget {budget:g}"
            raise InvalidBudget(msg)
        b[floored] = b_min
        b[~floored] = _water_fill(values[~floored], active_budget)
        # Points filled below the floor join it and the rest are filled again.
        below = ~floored & (b < b_min)
        if not below.any():
            break
        floored |= below
    LOGGER.debug(
        "Water-filled budget %.2f, %d of %d points saturated",
        budget,
        np.count_nonzero(b >= 1.0),
        size,
    )
    return b


def saturation_onset(h: DeviationVector | np.ndarray) -> float:
    """
    Return the budget fraction at which the first point saturates.

    Saturation starts once M * max(h) exceeds sum(h), that is at
    M / N = mean(h) / max(h).
    """
    values = h.h if isinstance(h, DeviationVector) else np.asarray(h, dtype=float)
    peak = values.max()
    if peak == 0:
        return 1.0
    return float(values.mean() / peak)


def draw_bs(
    plan: BernoulliPlan,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> BSDraw:
    """
    Include every point independently with probability b.

    One uniform variate is drawn per point in index order, so the selection of a
    point does not depend on which other points are selected.
    """
    if rng is None:
        seed = plan.seed if seed is None else seed
        if seed is None:
            msg = "A Bernoulli draw needs a seed"
            raise ValidationError(msg)
        rng = make_generator(seed)
    selected = rng.random(plan.size) < plan.b
    LOGGER.debug("Selected %d of %d points", np.count_nonzero(selected), plan.size)
    return BSDraw(selected, seed)


def _selected_payoffs(
    pool: Pool,
    draw: BSDraw,
    labels: np.ndarray,
    plan: BernoulliPlan,
    metric: RatioMetric,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if draw.selected.size != plan.size or pool.size != plan.size:
        msg = "Pool, plan and draw sizes differ"
        raise ValidationError(msg)
    indices = draw.indices
    if indices.size == 0:
        msg = "Empty Bernoulli selection"
        raise DegenerateEstimate(msg)
    true = sampled_labels(labels, indices)
    f, g = metric.payoffs(pool.pred_class[indices], true)
    return indices, f, g, plan.b[indices]


def estimate_bs(
    pool: Pool,
    draw: BSDraw,
    labels: np.ndarray,
    plan: BernoulliPlan,
    metric: RatioMetric,
) -> RatioEstimate:
    """
    Estimate a ratio metric from a Bernoulli selection.

    Returns:
        The ratio of the reweighted sums with both sample means.

    Raises:
        MissingLabel: If a selected point has no label.
        DegenerateEstimate: If nothing is selected or the denominator is zero.

    """
    _, f, g, b = _selected_payoffs(pool, draw, labels, plan, metric)
    numerator = (f / b).sum()
    denominator = (g / b).sum()
    if denominator == 0:
        msg = f"Sampled denominator of {metric.name} is zero"
        raise DegenerateEstimate(msg)
    return RatioEstimate(
        float(numerator / denominator),
        float(numerator / plan.size),
        float(denominator / plan.size),
    )


def error_bs_post(  # noqa: PLR0913
    pool: Pool,
    draw: BSDraw,
    labels: np.ndarray,
    plan: BernoulliPlan,
    metric: RatioMetric,
    f_hat: float,
    epsilon: float = DEFAULT_EPSILON,
    label_probs: np.ndarray | None = None,
) -> float:
    """
    Estimate the squared error of a Bernoulli estimate from its own selection.

    Args:
        pool: Prediction pool.
        draw: The selection.
        labels: Label array of the pool.
        plan: The Bernoulli plan.
        metric: Metric that was estimated.
        f_hat: The estimate.
        epsilon: Floor added to every selected residual.
        label_probs: Optional per-point probability of a positive true label for
            a stochastic ground truth; needs a table metric.

    Returns:
        The estimated variance.

    """
    indices, f, g, b = _selected_payoffs(pool, draw, labels, plan, metric)
    denominator = (g / b).sum()
    if denominator == 0:
        msg = f"Sampled denominator of {metric.name} is zero"
        raise DegenerateEstimate(msg)
    if label_probs is None:
        spread = (1.0 / b) * ((1.0 / b - 1.0) * (f - f_hat * g) ** 2 + epsilon)
    else:
        table = _table_metric(metric)
        p = np.asarray(label_probs, dtype=float)[indices]
        pred = pool.pred_class[indices]
        r_pos = table.f[pred, 1] - f_hat * table.g[pred, 1]
        r_neg = table.f[pred, 0] - f_hat * table.g[pred, 0]
        second = p * r_pos**2 + (1.0 - p) * r_neg**2
        first = p * r_pos + (1.0 - p) * r_neg
        spread = (1.0 / b) * (second / b - first**2 + epsilon)
    return float(spread.sum() / denominator**2)


def _full_payoffs(
    pool: Pool, labels: np.ndarray, metric: RatioMetric
) -> tuple[np.ndarray, np.ndarray, float]:
    true = labels_array(labels, pool.shape)
    if np.any(true == UNLABELED):
        msg = "Diagnostics need a label for every point"
        raise ValidationError(msg)
    f, g = metric.payoffs(pool.pred_class, true)
    total = g.sum()
    if total <= 0:
        raise DegenerateMetric(metric.name)
    return f, g, float(total)


def bias_bs(
    pool: Pool,
    labels: np.ndarray,
    plan: BernoulliPlan,
    metric: RatioMetric,
) -> float:
    """
    Return the leading-order bias of the Bernoulli ratio estimator.

    Combines the numerator-denominator covariance term sum(f*g*(1/b - 1)) with
    the denominator variance term, both over (N * mu_y)**2.
    """
    f, g, total = _full_payoffs(pool, labels, metric)
    exact = f.sum() / total
    return float(((1.0 / plan.b - 1.0) * g * (exact * g - f)).sum() / total**2)


def expected_error_bs(
    pool: Pool,
    labels: np.ndarray,
    plan: BernoulliPlan,
    metric: RatioMetric,
) -> float:
    """Return the leading-order variance of the estimator for known labels."""
    f, g, total = _full_payoffs(pool, labels, metric)
    exact = f.sum() / total
    return float(((1.0 / plan.b - 1.0) * (f - exact * g) ** 2).sum() / total**2)


def is_exact(plan: BernoulliPlan) -> bool:
    """Return whether the plan labels every point."""
    return bool(np.all(plan.b >= 1.0))


def _table_metric(metric: RatioMetric) -> MetricSpec:
    if not hasattr(metric, "f_table"):
        msg = f"{metric.name} has no payoff tables"
        raise ValidationError(msg)
    return metric
