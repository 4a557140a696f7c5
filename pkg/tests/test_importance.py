"""Tests for importance sampling."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import random_pool
from numpy.testing import assert_allclose

from metricwise.data import UNLABELED, ImportancePlan, ISDraw, PredictionPool
from metricwise.exceptions import (
    DegenerateEstimate,
    InvalidBudget,
    MissingLabel,
    ValidationError,
)
from metricwise.importance import (
    draw_is,
    equivalent_bs_budget,
    error_is_post,
    estimate_is,
    expected_error_is,
    inclusion_probability,
    matching_draws,
    optimal_importance,
    uniform_importance,
)
from metricwise.metrics import MetricSpec, exact_metric


@pytest.fixture
def hand_case():
    pool = PredictionPool(np.array([0.9, 0.2, 0.7]))
    labels = np.array([1, 0, 0])
    plan = ImportancePlan(np.array([0.5, 0.25, 0.25]), 4, metric="F1")
    draw = ISDraw(np.array([2, 1, 1]))
    return pool, labels, plan, draw


class TestOptimalImportance:
    def test_proportional_to_deviations(self):
        assert_allclose(optimal_importance(np.array([1.0, 3.0, 0.0])), [0.25, 0.75, 0])

    def test_all_zero_is_uniform(self):
        assert_allclose(optimal_importance(np.zeros(4)), np.full(4, 0.25))

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            optimal_importance(np.array([0.5, -0.1]))

    def test_minimizes_objective(self, rng):
        h = rng.random(40)
        best = (h**2 / optimal_importance(h)).sum()
        assert best == pytest.approx(h.sum() ** 2)
        for _ in range(50):
            q = rng.dirichlet(np.ones(h.size))
            assert best <= (h**2 / q).sum()

    def test_uniform(self):
        q = uniform_importance(7)
        assert q.sum() == pytest.approx(1.0)
        assert np.all(q == q[0])


class TestImportancePlan:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            ImportancePlan(np.array([0.5, 0.6]), 3)

    @pytest.mark.parametrize("budget", [0, 2.5])
    def test_rejects_budget(self, budget):
        with pytest.raises(InvalidBudget):
            ImportancePlan(np.array([0.5, 0.5]), budget)

    def test_allows_zero_mass(self):
        plan = ImportancePlan(np.array([0.0, 1.0]), 3)
        assert plan.size == 2


class TestDrawIS:
    def test_total_and_support(self):
        plan = ImportancePlan(np.array([0.0, 0.2, 0.8]), 50, seed=3)
        draw = draw_is(plan)
        assert draw.total == 50
        assert draw.counts[0] == 0
        assert draw.seed == 3

    def test_deterministic(self):
        plan = ImportancePlan(uniform_importance(30), 10)
        first = draw_is(plan, 11)
        second = draw_is(plan, 11)
        assert first.counts.tolist() == second.counts.tolist()

    def test_uniform_counts_are_multinomial(self):
        draws, size = 100_000, 4
        plan = ImportancePlan(uniform_importance(size), draws)
        sigma = np.sqrt(draws * (1 / size) * (1 - 1 / size))
        for seed in range(5):
            counts = draw_is(plan, seed).counts
            assert counts.sum() == draws
            assert np.all(np.abs(counts - draws / size) < 5 * sigma)

    def test_needs_a_seed(self):
        with pytest.raises(ValidationError):
            draw_is(ImportancePlan(uniform_importance(3), 2))

    def test_explicit_generator(self, rng):
        draw = draw_is(ImportancePlan(uniform_importance(5), 8), rng=rng)
        assert draw.total == 8


class TestEstimateIS:
    def test_hand_evaluated(self, hand_case):
        pool, labels, plan, draw = hand_case
        estimate = estimate_is(pool, draw, labels, plan, MetricSpec.f1())
        assert estimate.value == pytest.approx(2 / 3)
        assert estimate.x_hat == pytest.approx(1 / 3)
        assert estimate.y_hat == pytest.approx(0.5)

    def test_post_sampling_error(self, hand_case):
        pool, labels, plan, draw = hand_case
        metric = MetricSpec.f1()
        value = estimate_is(pool, draw, labels, plan, metric).value
        error = error_is_post(pool, draw, labels, plan, metric, value, 0.0)
        assert error == pytest.approx(2 / 27)

    def test_epsilon_floor(self, hand_case):
        pool, labels, plan, draw = hand_case
        metric = MetricSpec.f1()
        plain = error_is_post(pool, draw, labels, plan, metric, 2 / 3, 0.0)
        floored = error_is_post(pool, draw, labels, plan, metric, 2 / 3, 1e-3)
        assert floored > plain

    def test_only_drawn_labels_needed(self, hand_case):
        pool, labels, plan, _ = hand_case
        draw = ISDraw(np.array([4, 0, 0]))
        partial = np.array([1, UNLABELED, UNLABELED])
        estimate = estimate_is(pool, draw, partial, plan, MetricSpec.f1())
        assert estimate.value == 1.0

    def test_missing_label(self, hand_case):
        pool, _, plan, draw = hand_case
        with pytest.raises(MissingLabel) as err:
            estimate_is(pool, draw, np.array([1, UNLABELED, 0]), plan, MetricSpec.f1())
        assert err.value.index == 1

    def test_degenerate_denominator(self, hand_case):
        pool, labels, plan, _ = hand_case
        draw = ISDraw(np.array([0, 4, 0]))
        with pytest.raises(DegenerateEstimate):
            estimate_is(pool, draw, labels, plan, MetricSpec.precision())

    def test_size_mismatch(self, hand_case):
        pool, labels, plan, _ = hand_case
        with pytest.raises(ValidationError):
            estimate_is(pool, ISDraw(np.array([1, 1])), labels, plan, MetricSpec.f1())

    def test_numerator_is_unbiased(self, rng):
        pool, labels = random_pool(rng, 60)
        metric = MetricSpec.f1()
        q = 0.5 * uniform_importance(60) + 0.5 * rng.dirichlet(np.ones(60))
        plan = ImportancePlan(q / q.sum(), 20)
        f, _ = metric.payoffs(pool.pred_class, labels)
        x_hats = [
            estimate_is(pool, draw_is(plan, rng=rng), labels, plan, metric).x_hat
            for _ in range(3000)
        ]
        spread = np.std(x_hats) / np.sqrt(len(x_hats))
        assert abs(np.mean(x_hats) - f.mean()) < 4 * spread

    def test_error_matches_monte_carlo(self, rng):
        pool, labels = random_pool(rng, 50)
        metric = MetricSpec.f1()
        q = 0.5 * uniform_importance(50) + 0.5 * rng.dirichlet(np.ones(50))
        q /= q.sum()
        draws = 2000
        f, g = metric.payoffs(pool.pred_class, labels)
        counts = rng.multinomial(draws, q, size=20_000)
        estimates = (counts @ (f / q)) / (counts @ (g / q))
        truth = exact_metric(pool, labels, metric)
        h = np.abs(f - truth * g)
        predicted = expected_error_is(h, q, draws, g.mean())
        assert np.mean((estimates - truth) ** 2) == pytest.approx(predicted, rel=0.15)


class TestDrawCounts:
    def test_inclusion_probability(self):
        q = np.array([0.5, 0.5, 0.0])
        assert_allclose(inclusion_probability(q, 2), [0.75, 0.75, 0.0])

    def test_inclusion_needs_draws(self):
        with pytest.raises(InvalidBudget):
            inclusion_probability(np.array([1.0]), 0)

    def test_equivalent_budget_uniform(self):
        q = uniform_importance(10)
        assert equivalent_bs_budget(q, 5) == pytest.approx(10 * (1 - 0.9**5))

    def test_matching_draws(self, rng):
        q = rng.dirichlet(np.ones(100))
        draws = matching_draws(q, 40.0)
        assert equivalent_bs_budget(q, draws - 1) <= 40.0
        assert equivalent_bs_budget(q, draws + 1) >= 40.0

    def test_matching_small_target(self):
        assert matching_draws(uniform_importance(10), 0.5) == 1

    def test_matching_unreachable(self):
        with pytest.raises(InvalidBudget):
            matching_draws(np.array([0.5, 0.5, 0.0]), 2.0)


class TestExpectedError:
    def test_formula(self):
        h = np.array([1.0, 2.0])
        q = np.array([0.25, 0.75])
        expected = (1 / 0.25 + 4 / 0.75) / (3 * 4 * 0.5**2)
        assert expected_error_is(h, q, 3, 0.5) == pytest.approx(expected)

    def test_unreachable_mass(self):
        h = np.array([1.0, 1.0])
        assert expected_error_is(h, np.array([1.0, 0.0]), 5, 1.0) == np.inf

    def test_optimal_beats_uniform(self, rng):
        h = rng.random(50) ** 3
        optimal = expected_error_is(h, optimal_importance(h), 10, 0.5)
        uniform = expected_error_is(h, uniform_importance(50), 10, 0.5)
        assert optimal <= uniform
