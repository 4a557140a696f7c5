"""Label-efficient estimation of classifier metrics."""

from __future__ import annotations

from .bernoulli import draw_bs, estimate_bs, optimal_bernoulli
from .confidence import beta_fit, beta_interval, build_report
from .config import ScenarioConfig, load_scenario
from .data import (
    BernoulliPlan,
    BSDraw,
    EstimateReport,
    ImportancePlan,
    ISDraw,
    MultiLabelPool,
    PredictionPool,
)
from .exceptions import (
    DegenerateEstimate,
    DegenerateMetric,
    InvalidBudget,
    MetricwiseError,
    ValidationError,
)
from .importance import draw_is, estimate_is, optimal_importance
from .metrics import MetricSpec, exact_metric, metric_from_name
from .planner import draw_plan, estimate, make_plan

__all__ = [
    "BSDraw",
    "BernoulliPlan",
    "DegenerateEstimate",
    "DegenerateMetric",
    "EstimateReport",
    "ISDraw",
    "ImportancePlan",
    "InvalidBudget",
    "MetricSpec",
    "MetricwiseError",
    "MultiLabelPool",
    "PredictionPool",
    "ScenarioConfig",
    "ValidationError",
    "beta_fit",
    "beta_interval",
    "build_report",
    "draw_bs",
    "draw_is",
    "draw_plan",
    "estimate",
    "estimate_bs",
    "estimate_is",
    "exact_metric",
    "load_scenario",
    "make_plan",
    "metric_from_name",
    "optimal_bernoulli",
    "optimal_importance",
]
