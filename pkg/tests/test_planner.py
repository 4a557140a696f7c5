"""Tests for the plan, draw and estimate pipeline."""

from __future__ import annotations

import math

import numpy as np
import pytest

from metricwise.data import BernoulliPlan, ImportancePlan
from metricwise.exceptions import MissingLabel, ValidationError
from metricwise.importance import equivalent_bs_budget
from metricwise.metrics import MetricSpec, exact_metric
from metricwise.multilabel import MicroF1
from metricwise.planner import (
    canonical_method,
    draw_plan,
    estimate,
    estimate_moments,
    exact_value,
    make_plan,
    plan_deviations,
    resolve_metric,
)
from metricwise.simulation import simulate_multilabel_pool, simulate_pool


@pytest.fixture
def simulated(scenario):
    return simulate_pool(scenario)


class TestNames:
    @pytest.mark.parametrize(
        ("name", "expected"),
        [("IS", "importance"), ("bs", "bernoulli"), (" Uniform ", "uniform")],
    )
    def test_aliases(self, name, expected):
        assert canonical_method(name) == expected

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            canonical_method("stratified")

    def test_micro_names(self, scenario):
        pool, _ = simulate_multilabel_pool(scenario, 3)
        assert resolve_metric(pool, "MicroF1") == MicroF1()
        assert resolve_metric(pool, "microfalpha:0.3") == MicroF1(0.3)

    @pytest.mark.parametrize("name", ["MicroF1", "MacroF1"])
    def test_multilabel_names_need_multilabel_pool(self, simulated, name):
        pool, _ = simulated
        with pytest.raises(ValidationError):
            resolve_metric(pool, name)

    def test_binary_names_need_binary_pool(self, scenario):
        pool, _ = simulate_multilabel_pool(scenario, 2)
        with pytest.raises(ValidationError):
            resolve_metric(pool, "F1")


class TestMakePlan:
    def test_uniform(self, simulated):
        pool, _ = simulated
        plan = make_plan(pool, "F1", "uniform", 30)
        assert isinstance(plan, ImportancePlan)
        assert plan.budget == 30
        assert math.isnan(plan.f_prime_a)
        assert np.allclose(plan.q, 1 / pool.size)

    def test_bernoulli(self, simulated):
        pool, _ = simulated
        plan = make_plan(pool, "F1", "bs", 60.0, seed=5)
        assert isinstance(plan, BernoulliPlan)
        assert plan.b.sum() == pytest.approx(60.0)
        assert plan.metric == "F1"
        assert plan.seed == 5
        assert plan.f_prime_a == pytest.approx(plan_deviations(pool, "F1").f_ref)

    def test_importance_matched(self, simulated):
        pool, _ = simulated
        plan = make_plan(pool, "F1", "is", 60.0, match_distinct=True)
        assert equivalent_bs_budget(plan.q, plan.budget) == pytest.approx(60, abs=1.5)

    def test_macro_plan(self, scenario):
        pool, _ = simulate_multilabel_pool(scenario, 3)
        plan = make_plan(pool, "MacroF1", "bernoulli", 50.0)
        assert plan.b.sum() == pytest.approx(50.0)

    def test_macro_needs_multilabel_pool(self, simulated):
        pool, _ = simulated
        with pytest.raises(ValidationError):
            make_plan(pool, "MacroF1", "bernoulli", 50.0)


class TestExactValue:
    def test_binary(self, simulated):
        pool, labels = simulated
        assert exact_value(pool, labels, "F1") == exact_metric(
            pool, labels, MetricSpec.f1()
        )

    def test_micro_pools_every_class(self, scenario):
        pool, labels = simulate_multilabel_pool(scenario, 3)
        v = pool.pred_class
        expected = 2 * (v * labels).sum() / (v.sum() + labels.sum())
        assert exact_value(pool, labels, "MicroF1") == pytest.approx(expected)

    def test_macro_averages_classes(self, scenario):
        pool, labels = simulate_multilabel_pool(scenario, 3)
        v = pool.pred_class
        tp = (v * labels).sum(axis=0)
        precision = (tp / v.sum(axis=0)).mean()
        recall = (tp / labels.sum(axis=0)).mean()
        expected = 2 * precision * recall / (precision + recall)
        assert exact_value(pool, labels, "MacroF1") == pytest.approx(expected)

    def test_macro_needs_multilabel_pool(self, simulated):
        pool, labels = simulated
        with pytest.raises(ValidationError):
            exact_value(pool, labels, "MacroF1")

    def test_needs_every_label(self, scenario):
        pool, labels = simulate_multilabel_pool(scenario, 2)
        labels = labels.copy()
        labels[0] = -1
        with pytest.raises(ValidationError):
            exact_value(pool, labels, "MacroF1")


class TestPipeline:
    def test_round_trip(self, simulated):
        pool, labels = simulated
        plan = make_plan(pool, "F1", "bernoulli", 100.0, seed=3)
        draw = draw_plan(plan)
        report = estimate(pool, plan, draw, labels)
        assert report.metric == "F1"
        assert report.method == "bernoulli"
        assert report.n_labeled == draw.distinct
        assert report.ci_lo <= report.estimate <= report.ci_hi

    def test_deterministic(self, simulated):
        pool, labels = simulated
        reports = []
        for _ in range(2):
            plan = make_plan(pool, "F1", "importance", 80, seed=8)
            reports.append(estimate(pool, plan, draw_plan(plan), labels).as_dict())
        assert reports[0] == reports[1]

    def test_other_evaluation_metric(self, simulated):
        pool, labels = simulated
        plan = make_plan(pool, "F1", "bernoulli", 100.0, seed=3)
        report = estimate(pool, plan, draw_plan(plan), labels, "Accuracy")
        assert report.metric == "Accuracy"

    def test_full_budget_is_exact(self, simulated):
        pool, labels = simulated
        plan = make_plan(pool, "F1", "bernoulli", float(pool.size), seed=1)
        report = estimate(pool, plan, draw_plan(plan), labels)
        assert "exact" in report.flags
        assert report.estimate == pytest.approx(
            exact_metric(pool, labels, MetricSpec.f1()), abs=1e-12
        )

    def test_only_drawn_labels_needed(self, simulated):
        pool, labels = simulated
        plan = make_plan(pool, "F1", "importance", 40, seed=4)
        draw = draw_plan(plan)
        known = {int(n): int(labels[n]) for n in draw.indices}
        value, _, _ = estimate_moments(pool, plan, draw, known)
        assert value.value == pytest.approx(
            estimate_moments(pool, plan, draw, labels)[0].value
        )

    def test_missing_label(self, simulated):
        pool, labels = simulated
        plan = make_plan(pool, "F1", "bernoulli", 100.0, seed=3)
        draw = draw_plan(plan)
        known = {int(n): int(labels[n]) for n in draw.indices[1:]}
        with pytest.raises(MissingLabel):
            estimate(pool, plan, draw, known)

    def test_mismatched_draw(self, simulated):
        pool, labels = simulated
        bernoulli = make_plan(pool, "F1", "bernoulli", 100.0, seed=3)
        importance = make_plan(pool, "F1", "importance", 100, seed=3)
        with pytest.raises(ValidationError):
            estimate(pool, bernoulli, draw_plan(importance), labels)

    def test_macro(self, scenario):
        pool, labels = simulate_multilabel_pool(scenario, 3)
        plan = make_plan(pool, "MacroF1", "bernoulli", 150.0, seed=2)
        report = estimate(pool, plan, draw_plan(plan), labels)
        assert report.metric == "MacroF1"
        assert 0.0 <= report.estimate <= 1.0

    def test_micro(self, scenario):
        pool, labels = simulate_multilabel_pool(scenario, 3)
        plan = make_plan(pool, "MicroF1", "importance", 150, seed=2)
        report = estimate(pool, plan, draw_plan(plan), labels)
        assert report.metric == "MicroF1"
        assert report.n_draws == 150
