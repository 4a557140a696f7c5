"""Exceptions raised by metricwise."""

from __future__ import annotations


class MetricwiseError(Exception):
    """Base class for all metricwise errors."""


class ValidationError(MetricwiseError):
    """Input that violates a documented precondition."""


class InvalidBudget(ValidationError):  # noqa: N818
    """Sampling budget outside the feasible range."""


class InvalidWeights(ValidationError):  # noqa: N818
    """Online round weights that break the support contract."""


class MissingLabel(ValidationError):  # noqa: N818
    """A sampled index without a true label."""

    def __init__(self, index: int) -> None:
        """Initialize with the offending pool index."""
        self.index = index
        super().__init__(f"No label for sampled index {index}")


class DegenerateMetric(MetricwiseError):  # noqa: N818
    """A metric whose denominator vanishes."""

    def __init__(self, metric: str, detail: str = "zero denominator") -> None:
        """Initialize with the metric name."""
        self.metric = metric
        super().__init__(f"Metric {metric} is degenerate: {detail}")


class DegenerateEstimate(MetricwiseError):  # noqa: N818
    """An estimate whose sampled denominator vanishes."""


class InfeasibleVariance(MetricwiseError):  # noqa: N818
    """A variance that no Beta distribution with the given mean can have."""

    def __init__(self, mean: float, variance: float) -> None:
        """Initialize with the requested moments."""
        self.mean = mean
        self.variance = variance
        super().__init__(
            f"Variance {variance:g} is not below mean*(1-mean) for mean {mean:g}"
        )
