"""
The plan, draw and estimate pipeline.

Binary pools take the ratio metrics of metrics.py; multilabel pools take MicroF1
(which runs through the same ratio estimators) or MacroF1.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from .bernoulli import (
    draw_bs,
    error_bs_post,
    estimate_bs,
    is_exact,
    optimal_bernoulli,
)
from .confidence import build_report
from .const import (
    DEFAULT_B_MIN,
    DEFAULT_EPSILON,
    DEFAULT_LAMBDA,
    DEFAULT_LEVEL,
    FLAG_EXACT,
    LOGGER,
    METHOD_ALIASES,
    METHOD_BERNOULLI,
    METHOD_UNIFORM,
)
from .data import (
    BernoulliPlan,
    BSDraw,
    DeviationVector,
    ImportancePlan,
    ISDraw,
    MultiLabelPool,
    labels_array,
)
from .exceptions import ValidationError
from .importance import (
    draw_is,
    error_is_post,
    estimate_is,
    matching_draws,
    optimal_importance,
    uniform_importance,
)
from .metrics import (
    blend_posterior,
    deviations,
    exact_metric,
    metric_from_name,
    predicted_metric,
)
from .multilabel import (
    MACRO_F1,
    MicroF1,
    exact_macro_f1,
    macro_deviation,
    macro_moments_bs,
    macro_moments_is,
    micro_deviation,
    micro_predicted_metric,
)

if TYPE_CHECKING:
    from .data import EstimateReport, Pool, RatioEstimate
    from .metrics import RatioMetric

Plan = ImportancePlan | BernoulliPlan
Draw = ISDraw | BSDraw


def canonical_method(method: str) -> str:
    """Map a method name or alias (is, bs) to its canonical name."""
    try:
        return METHOD_ALIASES[method.strip().lower()]
    except KeyError as err:
        msg = f"Unknown sampling method {method!r}"
        raise ValidationError(msg) from err


def is_macro(metric_name: str) -> bool:
    """Return whether the name asks for macro F1."""
    return metric_name.strip().lower() == MACRO_F1.lower()


def resolve_metric(pool: Pool, metric_name: str) -> RatioMetric:
    """
    Return the ratio metric a name denotes for this kind of pool.

    Raises:
        ValidationError: If the metric does not apply to the pool, or is MacroF1
            (which is not a ratio metric).

    """
    key = metric_name.strip().lower()
    if isinstance(pool, MultiLabelPool):
        if key == "microf1":
            return MicroF1()
        if key.startswith("microfalpha:"):
            try:
                return MicroF1(float(key.split(":", 1)[1]))
            except ValueError as err:
                msg = f"Bad micro weight in {metric_name!r}"
                raise ValidationError(msg) from err
        msg = f"{metric_name} is not a multilabel ratio metric"
        raise ValidationError(msg)
    if key.startswith(("micro", "macro")):
        msg = f"{metric_name} needs a multilabel pool"
        raise ValidationError(msg)
    return metric_from_name(metric_name)


def exact_value(pool: Pool, labels: np.ndarray, metric_name: str) -> float:
    """
    Evaluate a metric on a fully labelled binary or multilabel pool.

    Raises:
        ValidationError: If a label is missing or the metric does not fit the pool.
        DegenerateMetric: If the metric is undefined on the pool.

    """
    if is_macro(metric_name):
        if not isinstance(pool, MultiLabelPool):
            msg = "MacroF1 needs a multilabel pool"
            raise ValidationError(msg)
        return exact_macro_f1(pool, labels)
    return exact_metric(pool, labels, resolve_metric(pool, metric_name))


def plan_deviations(
    pool: Pool, metric_name: str, lam: float = DEFAULT_LAMBDA
) -> DeviationVector:
    """
    Compute planning-time deviations from the blended model posterior.

    Args:
        pool: Binary or multilabel pool.
        metric_name: Metric to plan for.
        lam: Posterior blend weight.

    Returns:
        The deviations, with the predicted metric as reference.

    """
    post = blend_posterior(pool, lam)
    if is_macro(metric_name):
        if not isinstance(pool, MultiLabelPool):
            msg = "MacroF1 needs a multilabel pool"
            raise ValidationError(msg)
        return macro_deviation(pool, post)
    metric = resolve_metric(pool, metric_name)
    if isinstance(metric, MicroF1):
        f_ref = micro_predicted_metric(pool, post, metric.alpha)
        return micro_deviation(pool, post, f_ref, metric.alpha)
    f_ref = predicted_metric(pool, metric, post)
    return deviations(pool, metric, post, f_ref)


def make_plan(  # noqa: PLR0913
    pool: Pool,
    metric_name: str,
    method: str,
    budget: float,
    *,
    lam: float = DEFAULT_LAMBDA,
    seed: int | None = None,
    b_min: float = DEFAULT_B_MIN,
    match_distinct: bool = False,
) -> Plan:
    """
    Build a sampling plan.

    Args:
        pool: Pool to sample from.
        metric_name: Metric the plan is optimized for.
        method: uniform, importance (is) or bernoulli (bs).
        budget: Expected labelled points for Bernoulli plans; number of draws
            for importance plans unless match_distinct is set.
        lam: Posterior blend weight.
        seed: Seed stored with the plan.
        b_min: Floor of zero-deviation Bernoulli probabilities.
        match_distinct: Read an importance budget as an expected number of
            distinct points and convert it to draws.

    Returns:
        An ImportancePlan or a BernoulliPlan.

    Raises:
        InvalidBudget: If the budget is infeasible for the method.

    """
    method = canonical_method(method)
    if method == METHOD_UNIFORM:
        q = uniform_importance(pool.size)
        f_prime_a = math.nan
    else:
        h = plan_deviations(pool, metric_name, lam)
        f_prime_a = h.f_ref
        if method == METHOD_BERNOULLI:
            b = optimal_bernoulli(h, budget, b_min)
            LOGGER.debug("Planned Bernoulli sampling of %.1f points", budget)
            return BernoulliPlan(b, budget, lam, metric_name, f_prime_a, seed)
        q = optimal_importance(h)
    draws = matching_draws(q, budget) if match_distinct else budget
    LOGGER.debug("Planned %s sampling with %d draws", method, draws)
    return ImportancePlan(q, draws, lam, metric_name, f_prime_a, seed, method)


def draw_plan(
    plan: Plan,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
) -> Draw:
    """Draw from a plan with the matching sampler."""
    if isinstance(plan, BernoulliPlan):
        return draw_bs(plan, seed, rng=rng)
    return draw_is(plan, seed, rng=rng)


def _check_pair(plan: Plan, draw: Draw) -> None:
    if isinstance(plan, BernoulliPlan) != isinstance(draw, BSDraw):
        msg = "Draw does not come from a plan of this kind"
        raise ValidationError(msg)


def estimate_moments(  # noqa: PLR0913
    pool: Pool,
    plan: Plan,
    draw: Draw,
    labels: np.ndarray,
    metric_name: str | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[RatioEstimate | float, float, tuple[str, ...]]:
    """
    Estimate a metric and its post-sampling variance from labelled draws.

    Args:
        pool: Pool the plan was made for.
        plan: The plan.
        draw: A draw from the plan.
        labels: Labels of (at least) every drawn point.
        metric_name: Metric to estimate; defaults to the planning metric.
        epsilon: Residual floor of the variance.

    Returns:
        Tuple of (estimate, variance, flags). The estimate is a plain float for
        MacroF1 and a RatioEstimate otherwise.

    """
    _check_pair(plan, draw)
    metric_name = metric_name or plan.metric
    labels = labels_array(labels, pool.shape)
    if is_macro(metric_name):
        if not isinstance(pool, MultiLabelPool):
            msg = "MacroF1 needs a multilabel pool"
            raise ValidationError(msg)
        if isinstance(plan, BernoulliPlan):
            return macro_moments_bs(pool, draw, plan, labels, epsilon)
        return macro_moments_is(pool, draw, plan, labels, epsilon)

    metric = resolve_metric(pool, metric_name)
    if isinstance(plan, BernoulliPlan):
        estimate = estimate_bs(pool, draw, labels, plan, metric)
        variance = error_bs_post(
            pool, draw, labels, plan, metric, estimate.value, epsilon
        )
        flags = (FLAG_EXACT,) if is_exact(plan) else ()
        return estimate, variance, flags
    estimate = estimate_is(pool, draw, labels, plan, metric)
    variance = error_is_post(pool, draw, labels, plan, metric, estimate.value, epsilon)
    return estimate, variance, ()


def estimate(  # noqa: PLR0913
    pool: Pool,
    plan: Plan,
    draw: Draw,
    labels: np.ndarray,
    metric_name: str | None = None,
    *,
    level: float = DEFAULT_LEVEL,
    epsilon: float = DEFAULT_EPSILON,
) -> EstimateReport:
    """Estimate a metric from labelled draws and report it with a Beta interval."""
    metric_name = metric_name or plan.metric
    value, variance, flags = estimate_moments(
        pool, plan, draw, labels, metric_name, epsilon
    )
    name = (
        MACRO_F1 if is_macro(metric_name) else resolve_metric(pool, metric_name).name
    )
    report = build_report(
        value,
        variance,
        metric=name,
        method=plan.method,
        level=level,
        flags=flags,
        n_labeled=draw.distinct,
        n_draws=draw.total if isinstance(draw, ISDraw) else draw.distinct,
    )
    LOGGER.info(
        "%s estimate %.6f [%.6f, %.6f] from %d labels",
        report.metric,
        report.estimate,
        report.ci_lo,
        report.ci_hi,
        report.n_labeled,
    )
    return report
