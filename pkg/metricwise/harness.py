"""
Seeded Monte Carlo comparisons of the samplers.

A sweep simulates one pool, builds one plan per (budget, method) and then repeats
draw and estimate with an independent stream per repetition. Results are reduced
in repetition order, so they do not depend on how repetitions were scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd

from .bernoulli import saturation_onset
from .confidence import beta_fit, beta_interval
from .const import (
    DEFAULT_CLASSES,
    LOG_ERROR_FLOOR,
    LOGGER,
    METHOD_BERNOULLI,
    METHODS,
    MULTILABEL_METRICS,
    RESULTS_COLUMNS,
    STREAM_REPETITION,
)
from .data import BernoulliPlan, ImportancePlan
from .exceptions import MetricwiseError, ValidationError
from .importance import inclusion_probability
from .planner import (
    draw_plan,
    estimate_moments,
    exact_value,
    make_plan,
    plan_deviations,
)
from .simulation import simulate_scenario
from .streams import make_generator

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .config import ScenarioConfig
    from .data import Pool
    from .planner import Plan


@dataclass(frozen=True)
class Trial:
    """Outcome of one repetition for one evaluation metric."""

    estimate: float
    variance: float
    distinct: int
    draws: int


@dataclass(frozen=True)
class ResultRow:
    """Aggregates of one (method, budget) cell."""

    method: str
    budget: float
    mean_abs_err: float
    mean_log_sq_err: float
    std: float
    stderr: float
    coverage: float
    mean_distinct: float
    frac_saturated: float
    failures: int
    mean_draws: float

    def as_dict(self) -> dict[str, Any]:
        """Return the row keyed by results column."""
        return asdict(self)


@dataclass(frozen=True)
class ExperimentResult:
    """All cells of one comparison."""

    metric: str
    true_value: float
    level: float
    rows: tuple[ResultRow, ...]

    def row(self, method: str, budget: float) -> ResultRow:
        """Return the cell for a method and budget fraction."""
        for row in self.rows:
            if row.method == method and math.isclose(row.budget, budget):
                return row
        msg = f"No result for {method} at budget {budget}"
        raise KeyError(msg)

    def to_frame(self) -> pd.DataFrame:
        """Return the rows as a frame with the results columns."""
        records = [row.as_dict() for row in self.rows]
        return pd.DataFrame(records, columns=RESULTS_COLUMNS)


def _aggregate(  # noqa: PLR0913
    method: str,
    fraction: float,
    trials: Sequence[Trial | None],
    true_value: float,
    level: float,
    frac_saturated: float,
) -> ResultRow:
    done = [trial for trial in trials if trial is not None]
    failures = len(trials) - len(done)
    if not done:
        nan = math.nan
        return ResultRow(
            method=method,
            budget=fraction,
            mean_abs_err=nan,
            mean_log_sq_err=nan,
            std=nan,
            stderr=nan,
            coverage=nan,
            mean_distinct=nan,
            frac_saturated=frac_saturated,
            failures=failures,
            mean_draws=nan,
        )
    estimates = np.array([trial.estimate for trial in done])
    errors = np.abs(estimates - true_value)
    log_sq = np.log(np.maximum(errors**2, LOG_ERROR_FLOOR))
    std = float(errors.std(ddof=1)) if errors.size > 1 else 0.0
    covered = [
        _covers(trial.estimate, trial.variance, level, true_value) for trial in done
    ]
    return ResultRow(
        method=method,
        budget=fraction,
        mean_abs_err=float(errors.mean()),
        mean_log_sq_err=float(log_sq.mean()),
        std=std,
        stderr=std / math.sqrt(errors.size),
        coverage=float(np.mean(covered)),
        mean_distinct=float(np.mean([trial.distinct for trial in done])),
        frac_saturated=frac_saturated,
        failures=failures,
        mean_draws=float(np.mean([trial.draws for trial in done])),
    )


def _covers(estimate: float, variance: float, level: float, value: float) -> bool:
    lo, hi = beta_interval(beta_fit(estimate, variance), level)
    return lo <= value <= hi


def weights_report(plan: Plan) -> dict[str, Any]:
    """
    Summarize how deterministic a plan is.

    For a Bernoulli plan this is the fraction of points with b = 1 and the
    inclusion probabilities in descending order; for an importance plan the
    same for the inclusion probabilities 1 - (1 - q)**M.
    """
    if isinstance(plan, BernoulliPlan):
        weights = plan.b
    else:
        weights = inclusion_probability(plan.q, plan.budget)
    return {
        "method": plan.method,
        "fraction_saturated": float(np.count_nonzero(weights >= 1.0)) / plan.size,
        "weights": np.sort(weights)[::-1].tolist(),
    }


class ExperimentRunner:
    """Runs the repetitions of a scenario on one simulated or given pool."""

    def __init__(
        self,
        config: ScenarioConfig,
        pool: Pool | None = None,
        labels: np.ndarray | None = None,
        eval_metrics: Sequence[str] | None = None,
    ) -> None:
        """
        Initialize the runner.

        Args:
            config: Scenario to run.
            pool: Pool to use instead of simulating one.
            labels: True labels of the given pool.
            eval_metrics: Metrics to estimate from every draw; defaults to the
                scenario's evaluation metric.

        """
        if pool is None:
            pool, labels = simulate_scenario(config)
        elif labels is None:
            msg = "A given pool needs its labels"
            raise ValidationError(msg)
        self.config = config
        self.pool = pool
        self.labels = np.asarray(labels)
        self.eval_metrics = tuple(eval_metrics or (config.metric_eval,))
        self.true_values = {
            name: exact_value(pool, self.labels, name)
            for name in self.eval_metrics
        }
        self._plans: dict[tuple[int, str], Plan | None] = {}

    def plan(self, budget_index: int, method: str) -> Plan | None:
        """Return the cached plan of a cell, None when it cannot be built."""
        key = (budget_index, method)
        if key not in self._plans:
            budget = self.config.budget_points()[budget_index]
            try:
                self._plans[key] = make_plan(
                    self.pool,
                    self.config.metric_plan,
                    method,
                    budget,
                    lam=self.config.lam,
                    seed=self.config.seed,
                    b_min=self.config.b_min,
                    match_distinct=True,
                )
            except MetricwiseError as err:
                LOGGER.warning("No %s plan at budget %.1f: %s", method, budget, err)
                self._plans[key] = None
        return self._plans[key]

    def trial(
        self, repetition: int, budget_index: int, method: str
    ) -> dict[str, Trial | None]:
        """Run one repetition of a cell for every evaluation metric."""
        plan = self.plan(budget_index, method)
        if plan is None:
            return dict.fromkeys(self.eval_metrics)
        rng = make_generator(
            self.config.seed,
            STREAM_REPETITION,
            repetition,
            budget_index,
            METHODS.index(method),
        )
        draw = draw_plan(plan, rng=rng)
        draws = draw.distinct if isinstance(plan, BernoulliPlan) else draw.total
        outcome: dict[str, Trial | None] = {}
        for name in self.eval_metrics:
            try:
                value, variance, _ = estimate_moments(
                    self.pool, plan, draw, self.labels, name, self.config.epsilon
                )
            except MetricwiseError as err:
                LOGGER.debug("Repetition %d failed: %s", repetition, err)
                outcome[name] = None
                continue
            value = value if isinstance(value, float) else value.value
            outcome[name] = Trial(value, variance, draw.distinct, draws)
        return outcome

    def run_cell(self, budget_index: int, method: str) -> list[dict[str, Trial | None]]:
        """Run every repetition of a cell, in repetition order."""
        repetitions = range(self.config.repetitions)
        self.plan(budget_index, method)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                return list(
                    executor.map(
                        lambda r: self.trial(r, budget_index, method), repetitions
                    )
                )
        return [self.trial(r, budget_index, method) for r in repetitions]

    def frac_saturated(self, budget_index: int, method: str) -> float:
        """Fraction of points the plan of a cell labels with certainty."""
        plan = self.plan(budget_index, method)
        return math.nan if plan is None else weights_report(plan)["fraction_saturated"]

    def run(
        self, levels: Sequence[float] | None = None
    ) -> dict[tuple[str, float], ExperimentResult]:
        """
        Run all cells and aggregate them per evaluation metric and level.

        Returns:
            Results keyed by (evaluation metric, level).

        """
        levels = tuple(levels or (self.config.level,))
        fractions = self.config.budget_fractions()
        rows: dict[tuple[str, float], list[ResultRow]] = {
            (name, level): [] for name in self.eval_metrics for level in levels
        }
        for method in self.config.methods:
            for budget_index, fraction in enumerate(fractions):
                LOGGER.info(
                    "Running %s at budget %.3f (%d repetitions)",
                    method,
                    fraction,
                    self.config.repetitions,
                )
                outcomes = self.run_cell(budget_index, method)
                saturated = self.frac_saturated(budget_index, method)
                plan = self.plan(budget_index, method)
                if isinstance(plan, BernoulliPlan) and saturated >= 1.0:
                    LOGGER.info(
                        "Bernoulli plan at budget %.3f labels every point, "
                        "its intervals collapse to the exact value",
                        fraction,
                    )
                for name in self.eval_metrics:
                    trials = [outcome[name] for outcome in outcomes]
                    failures = sum(trial is None for trial in trials)
                    if failures:
                        LOGGER.warning(
                            "%d of %d repetitions failed for %s at budget %.3f",
                            failures,
                            len(trials),
                            method,
                            fraction,
                        )
                    for level in levels:
                        rows[name, level].append(
                            _aggregate(
                                method,
                                fraction,
                                trials,
                                self.true_values[name],
                                level,
                                saturated,
                            )
                        )
        return {
            (name, level): ExperimentResult(
                name, self.true_values[name], level, tuple(rows[name, level])
            )
            for name in self.eval_metrics
            for level in levels
        }


def run_comparison(
    config: ScenarioConfig,
    pool: Pool | None = None,
    labels: np.ndarray | None = None,
) -> ExperimentResult:
    """
    Compare the configured methods at every budget.

    Importance and uniform plans are matched to the Bernoulli budget by their
    expected number of distinct labelled points.
    """
    runner = ExperimentRunner(config, pool, labels)
    results = runner.run()
    return results[config.metric_eval, config.level]


def calibration_sweep(
    config: ScenarioConfig,
    levels: Sequence[float] = (0.9,),
    pool: Pool | None = None,
    labels: np.ndarray | None = None,
) -> pd.DataFrame:
    """
    Measure interval coverage at several levels over the same draws.

    Returns:
        One row per (level, method, budget) with the results columns.

    """
    runner = ExperimentRunner(config, pool, labels)
    results = runner.run(levels)
    frames = []
    for level in levels:
        frame = results[config.metric_eval, level].to_frame()
        frame.insert(0, "level", level)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def weights_sweep(
    config: ScenarioConfig,
    pool: Pool | None = None,
) -> pd.DataFrame:
    """
    Report plan saturation at every budget without drawing.

    Returns:
        One row per (method, budget) with the fraction of points labelled with
        certainty and the largest and smallest inclusion probability.

    """
    if pool is None:
        pool, _ = simulate_scenario(config)
    onset = saturation_onset(plan_deviations(pool, config.metric_plan, config.lam))
    LOGGER.info("Bernoulli saturation starts at budget fraction %.3f", onset)
    records = []
    for method in config.methods:
        for budget, fraction in zip(
            config.budget_points(), config.budget_fractions(), strict=True
        ):
            try:
                plan = make_plan(
                    pool,
                    config.metric_plan,
                    method,
                    budget,
                    lam=config.lam,
                    b_min=config.b_min,
                    match_distinct=True,
                )
            except MetricwiseError as err:
                LOGGER.warning("No %s plan at budget %.1f: %s", method, budget, err)
                continue
            report = weights_report(plan)
            weights = report["weights"]
            records.append(
                {
                    "method": method,
                    "budget": fraction,
                    "fraction_saturated": report["fraction_saturated"],
                    "max_weight": weights[0],
                    "min_weight": weights[-1],
                    "draws": plan.budget if isinstance(plan, ImportancePlan) else None,
                }
            )
    frame = pd.DataFrame.from_records(
        records,
        columns=[
            "method",
            "budget",
            "fraction_saturated",
            "max_weight",
            "min_weight",
            "draws",
        ],
    )
    frame.attrs["saturation_onset"] = onset
    return frame


def cross_metric_sweep(
    config: ScenarioConfig,
    plan_metrics: Sequence[str],
    eval_metrics: Sequence[str],
    pool: Pool | None = None,
    labels: np.ndarray | None = None,
) -> pd.DataFrame:
    """
    Estimate every evaluation metric from plans made for every planning metric.

    All planning metrics share the pool and the repetition streams, so a single
    pair reproduces the matching run_comparison cell.

    Returns:
        Long-form frame with plan_metric and eval_metric columns in front of the
        results columns.

    """
    if pool is None:
        pool, labels = simulate_scenario(config)
    frames = []
    for plan_metric in plan_metrics:
        runner = ExperimentRunner(
            config.with_changes(metric_plan=plan_metric), pool, labels, eval_metrics
        )
        results = runner.run()
        for eval_metric in eval_metrics:
            frame = results[eval_metric, config.level].to_frame()
            frame.insert(0, "eval_metric", eval_metric)
            frame.insert(0, "plan_metric", plan_metric)
            frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def multilabel_sweep(
    config: ScenarioConfig,
    metrics: Sequence[str] | None = None,
    pool: Pool | None = None,
    labels: np.ndarray | None = None,
) -> pd.DataFrame:
    """
    Compare the samplers on micro and macro F1 of a multilabel pool.

    Every metric is planned for and estimated on the same pool with the same
    repetition streams. A binary scenario is switched to DEFAULT_CLASSES classes.

    Args:
        config: Scenario to run.
        metrics: Multilabel metrics; defaults to MicroF1 and MacroF1.
        pool: Multilabel pool to use instead of simulating one.
        labels: True labels of the given pool.

    Returns:
        Long-form frame with metric and true_value columns in front of the
        results columns.

    """
    metrics = list(metrics or MULTILABEL_METRICS)
    if not config.multilabel:
        LOGGER.info("Scenario is binary, simulating %d classes", DEFAULT_CLASSES)
        config = config.with_changes(
            n_classes=DEFAULT_CLASSES, metric_plan=metrics[0], metric_eval=metrics[0]
        )
    if pool is None:
        pool, labels = simulate_scenario(config)
    frames = []
    for metric in metrics:
        runner = ExperimentRunner(
            config.with_changes(metric_plan=metric, metric_eval=metric), pool, labels
        )
        result = runner.run()[metric, config.level]
        LOGGER.info("True %s is %.6f", metric, result.true_value)
        frame = result.to_frame()
        frame.insert(0, "true_value", result.true_value)
        frame.insert(0, "metric", metric)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def error_matrix(
    frame: pd.DataFrame, method: str = METHOD_BERNOULLI, budget: float | None = None
) -> pd.DataFrame:
    """
    Pivot a cross-metric frame into a plan-by-eval matrix of mean absolute errors.

    Args:
        frame: Output of cross_metric_sweep.
        method: Method to select.
        budget: Budget fraction to select; by default errors are averaged over
            all budgets.

    """
    selected = frame[frame["method"] == method]
    if budget is not None:
        selected = selected[np.isclose(selected["budget"], budget)]
    matrix = selected.pivot_table(
        index="plan_metric",
        columns="eval_metric",
        values="mean_abs_err",
        aggfunc="mean",
        sort=False,
    )
    return matrix.rename_axis(index=None, columns=None)
