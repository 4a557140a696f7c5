"""Importance sampling with replacement and its ratio estimator."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import brentq

from .const import DEFAULT_EPSILON, LOGGER
from .data import DeviationVector, ISDraw, RatioEstimate, sampled_labels
from .exceptions import DegenerateEstimate, InvalidBudget, ValidationError
from .streams import make_generator

if TYPE_CHECKING:
    from .data import ImportancePlan, Pool
    from .metrics import RatioMetric

_MAX_DOUBLINGS = 64


def _as_h(h: DeviationVector | np.ndarray) -> np.ndarray:
    values = h.h if isinstance(h, DeviationVector) else np.asarray(h, dtype=float)
    if np.any(values < 0):
        msg = "Deviations must be nonnegative"
        raise ValidationError(msg)
    return values


def uniform_importance(size: int) -> np.ndarray:
    """Return the uniform distribution over size points."""
    return np.full(size, 1.0 / size)


def optimal_importance(h: DeviationVector | np.ndarray) -> np.ndarray:
    """
    Return the distribution minimizing sum(h**2 / q).

    The optimum is q proportional to h. When every deviation is zero any
    distribution is optimal and the uniform one is returned.
    """
    values = _as_h(h)
    total = values.sum()
    if total == 0:
        LOGGER.debug("All deviations are zero, using uniform importance")
        return uniform_importance(values.size)
    return values / total


def draw_is(
    plan: ImportancePlan,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> ISDraw:
    """
    Draw plan.budget indices with replacement from q.

    Args:
        plan: Importance plan.
        seed: Seed of the draw; defaults to the plan seed.
        rng: Generator to use instead of a seeded one.

    Returns:
        Per-index multiplicities.

    """
    if rng is None:
        seed = plan.seed if seed is None else seed
        if seed is None:
            msg = "An importance draw needs a seed"
            raise ValidationError(msg)
        rng = make_generator(seed)
    counts = rng.multinomial(plan.budget, plan.q / plan.q.sum())
    LOGGER.debug(
        "Drew %d samples over %d distinct points",
        plan.budget,
        np.count_nonzero(counts),
    )
    return ISDraw(counts, seed)


def _weighted_payoffs(
    pool: Pool,
    draw: ISDraw,
    labels: np.ndarray,
    plan: ImportancePlan,
    metric: RatioMetric,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if draw.counts.size != plan.size or pool.size != plan.size:
        msg = "Pool, plan and draw sizes differ"
        raise ValidationError(msg)
    indices = draw.indices
    true = sampled_labels(labels, indices)
    f, g = metric.payoffs(pool.pred_class[indices], true)
    weights = draw.counts[indices] / plan.q[indices]
    return indices, f, g, weights


def estimate_is(
    pool: Pool,
    draw: ISDraw,
    labels: np.ndarray,
    plan: ImportancePlan,
    metric: RatioMetric,
) -> RatioEstimate:
    """
    Estimate a ratio metric from importance draws.

    Args:
        pool: Prediction pool the plan was made for.
        draw: The draw.
        labels: Label array of the pool (unlabeled points allowed where not drawn).
        plan: The importance plan.
        metric: Metric to estimate.

    Returns:
        The ratio estimate and its numerator and denominator means.

    Raises:
        MissingLabel: If a drawn point has no label.
        DegenerateEstimate: If the sampled denominator is zero.

    """
    _, f, g, weights = _weighted_payoffs(pool, draw, labels, plan, metric)
    numerator = (weights * f).sum()
    denominator = (weights * g).sum()
    if denominator == 0:
        msg = f"Sampled denominator of {metric.name} is zero"
        raise DegenerateEstimate(msg)
    scale = plan.budget * plan.size
    return RatioEstimate(
        float(numerator / denominator),
        float(numerator / scale),
        float(denominator / scale),
    )


def error_is_post(  # noqa: PLR0913
    pool: Pool,
    draw: ISDraw,
    labels: np.ndarray,
    plan: ImportancePlan,
    metric: RatioMetric,
    f_hat: float,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """
    Estimate the squared error of an importance estimate from its own draws.

    Every draw contributes (r**2 + epsilon) / q**2 with r = f - f_hat * g at the
    observed label, normalized by the squared sampled denominator.
    """
    _, f, g, weights = _weighted_payoffs(pool, draw, labels, plan, metric)
    denominator = (weights * g).sum()
    if denominator == 0:
        msg = f"Sampled denominator of {metric.name} is zero"
        raise DegenerateEstimate(msg)
    indices = draw.indices
    residual = f - f_hat * g
    counts = draw.counts[indices]
    spread = (counts * (residual**2 + epsilon) / plan.q[indices] ** 2).sum()
    return float(spread / denominator**2)


def inclusion_probability(q: np.ndarray, budget: int) -> np.ndarray:
    """Return the probability that each point is drawn at least once."""
    if budget < 1:
        msg = f"Number of draws must be at least 1, got {budget}"
        raise InvalidBudget(msg)
    return 1.0 - (1.0 - np.asarray(q, dtype=float)) ** budget


def equivalent_bs_budget(q: np.ndarray, budget: float) -> float:
    """Return the expected number of distinct points among budget draws from q."""
    q = np.asarray(q, dtype=float)
    return float(q.size - ((1.0 - q) ** budget).sum())


def matching_draws(q: np.ndarray, distinct: float) -> int:
    """
    Find the number of draws whose expected distinct count is distinct.

    Args:
        q: Importance distribution.
        distinct: Target expected number of distinct points.

    Returns:
        The rounded number of draws, at least 1.

    Raises:
        InvalidBudget: If the target is not below the support size.

    """
    q = np.asarray(q, dtype=float)
    support = np.count_nonzero(q)
    if distinct >= support:
        msg = f"Cannot reach {distinct:g} distinct points with support {support}"
        raise InvalidBudget(msg)
    if distinct <= 1:
        return 1

    def gap(draws: float) -> float:
        return equivalent_bs_budget(q, draws) - distinct

    upper = max(2.0, distinct)
    for _ in range(_MAX_DOUBLINGS):
        if gap(upper) >= 0:
            break
        upper *= 2
    else:
        msg = f"No draw count reaches {distinct:g} distinct points"
        raise InvalidBudget(msg)
    draws = max(1, round(brentq(gap, 1.0, upper)))
    LOGGER.debug("Matched %.1f distinct points with %d draws", distinct, draws)
    return draws


def expected_error_is(
    h: DeviationVector | np.ndarray,
    q: np.ndarray,
    budget: int,
    mu_y: float,
) -> float:
    """
    Return the leading-order squared error of importance sampling.

    Args:
        h: Deviations (planning-time, or true-label residual magnitudes).
        q: Importance distribution.
        budget: Number of draws.
        mu_y: Mean denominator payoff.

    Returns:
        sum(h**2 / q) / (budget * N**2 * mu_y**2).

    """
    values = _as_h(h)
    q = np.asarray(q, dtype=float)
    if np.any((q == 0) & (values > 0)):
        return math.inf
    ratio = np.divide(values**2, q, out=np.zeros_like(values), where=q > 0)
    return float(ratio.sum() / (budget * values.size**2 * mu_y**2))
