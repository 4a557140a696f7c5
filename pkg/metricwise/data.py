"""Custom types for metricwise."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .const import (
    BUDGET_SUM_TOLERANCE,
    DEFAULT_LAMBDA,
    DEFAULT_THRESHOLD,
    METHOD_BERNOULLI,
    METHOD_IMPORTANCE,
    METHOD_UNIFORM,
    PROBABILITY_SUM_TOLERANCE,
)
from .exceptions import InvalidBudget, MissingLabel, ValidationError

UNLABELED = -1


def _frozen(values: Any, dtype: Any = float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= 1.0:
        msg = f"Threshold {threshold} is outside [0, 1]"
        raise ValidationError(msg)


def _check_ids(ids: tuple[str, ...] | None, size: int) -> None:
    if ids is None:
        return
    if len(ids) != size:
        msg = f"Got {len(ids)} ids for {size} points"
        raise ValidationError(msg)
    if len(set(ids)) != len(ids):
        msg = "Point ids must be unique"
        raise ValidationError(msg)


@dataclass(frozen=True, eq=False)
class PredictionPool:
    """
    The unlabelled test set of a binary classifier.

    Attributes:
        prob_positive: Model probability of the positive class per point.
        threshold: Decision threshold; a point is predicted positive when its
            probability is strictly above it.
        ids: Optional unique external ids, in pool order.
        pred_class: Derived predicted class per point.

    """

    prob_positive: np.ndarray
    threshold: float = DEFAULT_THRESHOLD
    ids: tuple[str, ...] | None = None
    pred_class: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Validate probabilities and derive predicted classes."""
        prob = _frozen(self.prob_positive)
        if prob.ndim != 1 or prob.size == 0:
            msg = "A prediction pool needs a nonempty vector of probabilities"
            raise ValidationError(msg)
        if not np.all((prob >= 0.0) & (prob <= 1.0)):
            msg = "Every prob_positive must lie in [0, 1]"
            raise ValidationError(msg)
        _check_threshold(self.threshold)
        ids = None if self.ids is None else tuple(str(i) for i in self.ids)
        _check_ids(ids, prob.size)
        object.__setattr__(self, "prob_positive", prob)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(
            self, "pred_class", _frozen(prob > self.threshold, dtype=np.int64)
        )

    @property
    def size(self) -> int:
        """Number of points N."""
        return int(self.prob_positive.size)

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of one label vector for this pool."""
        return (self.size,)


@dataclass(frozen=True, eq=False)
class MultiLabelPool:
    """
    The unlabelled test set of C independent binary classifiers.

    Attributes:
        prob_positive: N x C matrix of per-class positive probabilities.
        threshold: Decision threshold shared by all classes.
        ids: Optional unique external ids.
        pred_class: Derived N x C predicted labels.

    """

    prob_positive: np.ndarray
    threshold: float = DEFAULT_THRESHOLD
    ids: tuple[str, ...] | None = None
    pred_class: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Validate probabilities and derive predicted labels."""
        prob = _frozen(self.prob_positive)
        if prob.ndim != 2 or 0 in prob.shape:  # noqa: PLR2004
            msg = "A multilabel pool needs a nonempty N x C probability matrix"
            raise ValidationError(msg)
        if not np.all((prob >= 0.0) & (prob <= 1.0)):
            msg = "Every class probability must lie in [0, 1]"
            raise ValidationError(msg)
        _check_threshold(self.threshold)
        ids = None if self.ids is None else tuple(str(i) for i in self.ids)
        _check_ids(ids, prob.shape[0])
        object.__setattr__(self, "prob_positive", prob)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(
            self, "pred_class", _frozen(prob > self.threshold, dtype=np.int64)
        )

    @property
    def size(self) -> int:
        """Number of points N."""
        return int(self.prob_positive.shape[0])

    @property
    def n_classes(self) -> int:
        """Number of classes C."""
        return int(self.prob_positive.shape[1])

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the label matrix for this pool."""
        return (self.size, self.n_classes)


Pool = PredictionPool | MultiLabelPool


@dataclass(frozen=True, eq=False)
class BlendedPosterior:
    """Approximate label posterior p_a = lam * p + (1 - lam) / 2."""

    lam: float
    p_a: np.ndarray

    def __post_init__(self) -> None:
        """Freeze the probabilities."""
        object.__setattr__(self, "p_a", _frozen(self.p_a))


@dataclass(frozen=True, eq=False)
class DeviationVector:
    """Per-point deviations h and the reference metric value used to build them."""

    h: np.ndarray
    f_ref: float

    def __post_init__(self) -> None:
        """Validate nonnegativity."""
        h = _frozen(self.h)
        if np.any(h < 0) or not np.all(np.isfinite(h)):
            msg = "Deviations must be finite and nonnegative"
            raise ValidationError(msg)
        object.__setattr__(self, "h", h)

    @property
    def size(self) -> int:
        """Number of points."""
        return int(self.h.size)


@dataclass(frozen=True, eq=False)
class ImportancePlan:
    """
    An importance distribution and the number of with-replacement draws.

    Points with zero mass are allowed; they are simply never drawn.
    """

    q: np.ndarray
    budget: int
    lam: float = DEFAULT_LAMBDA
    metric: str = ""
    f_prime_a: float = math.nan
    seed: int | None = None
    method: str = METHOD_IMPORTANCE

    def __post_init__(self) -> None:
        """Validate the distribution and draw count."""
        q = _frozen(self.q)
        if q.ndim != 1 or q.size == 0 or np.any(q < 0):
            msg = "q must be a nonempty vector of nonnegative masses"
            raise ValidationError(msg)
        if abs(float(q.sum()) - 1.0) > PROBABILITY_SUM_TOLERANCE * max(1, q.size):
            msg = f"q sums to {q.sum()!r}, expected 1"
            raise ValidationError(msg)
        if int(self.budget) != self.budget or self.budget < 1:
            msg = f"Importance budget must be a positive integer, got {self.budget}"
            raise InvalidBudget(msg)
        if self.method not in (METHOD_IMPORTANCE, METHOD_UNIFORM):
            msg = f"Not an importance method: {self.method}"
            raise ValidationError(msg)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "budget", int(self.budget))

    @property
    def size(self) -> int:
        """Number of points."""
        return int(self.q.size)


@dataclass(frozen=True, eq=False)
class BernoulliPlan:
    """Independent inclusion probabilities b with expected sample size budget."""

    b: np.ndarray
    budget: float
    lam: float = DEFAULT_LAMBDA
    metric: str = ""
    f_prime_a: float = math.nan
    seed: int | None = None
    method: str = METHOD_BERNOULLI

    def __post_init__(self) -> None:
        """Validate the inclusion probabilities."""
        b = _frozen(self.b)
        if b.ndim != 1 or b.size == 0 or np.any(b <= 0) or np.any(b > 1):
            msg = "Inclusion probabilities must lie in (0, 1]"
            raise ValidationError(msg)
        slack = BUDGET_SUM_TOLERANCE * max(1.0, self.budget)
        if abs(float(b.sum()) - self.budget) > slack:
            msg = f"Inclusion probabilities sum to {b.sum()!r}, budget is {self.budget}"
            raise ValidationError(msg)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def size(self) -> int:
        """Number of points."""
        return int(self.b.size)

    @property
    def fraction_saturated(self) -> float:
        """Fraction of points included with certainty."""
        return float(np.count_nonzero(self.b >= 1.0)) / self.size


@dataclass(frozen=True, eq=False)
class ISDraw:
    """Multiplicity of every pool index among the importance draws."""

    counts: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        """Freeze counts."""
        counts = _frozen(self.counts, dtype=np.int64)
        if np.any(counts < 0):
            msg = "Draw counts must be nonnegative"
            raise ValidationError(msg)
        object.__setattr__(self, "counts", counts)

    @property
    def indices(self) -> np.ndarray:
        """Distinct drawn indices in ascending order."""
        return np.flatnonzero(self.counts)

    @property
    def distinct(self) -> int:
        """Number of distinct points that need a label."""
        return int(np.count_nonzero(self.counts))

    @property
    def total(self) -> int:
        """Number of draws M."""
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class BSDraw:
    """Inclusion indicators of a Bernoulli draw."""

    selected: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        """Freeze indicators."""
        object.__setattr__(self, "selected", _frozen(self.selected, dtype=bool))

    @property
    def indices(self) -> np.ndarray:
        """Selected indices in ascending order."""
        return np.flatnonzero(self.selected)

    @property
    def distinct(self) -> int:
        """Number of selected points."""
        return int(np.count_nonzero(self.selected))


@dataclass(frozen=True)
class RatioEstimate:
    """Point estimate of a ratio metric and its two sample means."""

    value: float
    x_hat: float
    y_hat: float


@dataclass(frozen=True)
class EstimateReport:
    """Everything reported for one estimation run."""

    metric: str
    method: str
    estimate: float
    variance: float
    ci_level: float
    ci_lo: float
    ci_hi: float
    beta_alpha: float
    beta_beta: float
    flags: tuple[str, ...] = ()
    n_labeled: int = 0
    n_draws: int = 0
    x_hat: float = math.nan
    y_hat: float = math.nan

    def covers(self, value: float) -> bool:
        """Return whether the interval contains value."""
        return self.ci_lo <= value <= self.ci_hi

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-ready mapping."""
        return {
            "metric": self.metric,
            "method": self.method,
            "estimate": self.estimate,
            "variance": self.variance,
            "ci_level": self.ci_level,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "beta_alpha": _json_float(self.beta_alpha),
            "beta_beta": _json_float(self.beta_beta),
            "flags": list(self.flags),
            "n_labeled": self.n_labeled,
            "n_draws": self.n_draws,
            "x_hat": _json_float(self.x_hat),
            "y_hat": _json_float(self.y_hat),
        }


def _json_float(value: float) -> float | str | None:
    if math.isnan(value):
        return None
    return "inf" if math.isinf(value) else value


def labels_array(
    labels: Mapping[int, Any] | Sequence[Any] | np.ndarray,
    shape: tuple[int, ...],
) -> np.ndarray:
    """
    Normalize true labels to an integer array with UNLABELED holes.

    Args:
        labels: Either a full array (UNLABELED marks unknown points) or a mapping
            from pool index to a label (a class vector for multilabel pools).
        shape: Label shape of the pool, (N,) or (N, C).

    Returns:
        Integer array of the pool's label shape.

    """
    if isinstance(labels, Mapping):
        out = np.full(shape, UNLABELED, dtype=np.int64)
        for index, value in labels.items():
            if not 0 <= int(index) < shape[0]:
                msg = f"Label index {index} is outside the pool"
                raise ValidationError(msg)
            _check_label_values(np.asarray(value))
            out[int(index)] = value
    else:
        raw = np.asarray(labels)
        if raw.shape != shape:
            msg = f"Labels have shape {raw.shape}, expected {shape}"
            raise ValidationError(msg)
        _check_label_values(raw, allow_unlabeled=True)
        out = raw.astype(np.int64)
    return out


def _check_label_values(values: np.ndarray, *, allow_unlabeled: bool = False) -> None:
    allowed = (0, 1, UNLABELED) if allow_unlabeled else (0, 1)
    if values.dtype.kind not in "biuf" or not np.all(np.isin(values, allowed)):
        msg = "Labels must be 0, 1 or unlabeled"
        raise ValidationError(msg)


def sampled_labels(labels: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Return the labels at indices, raising MissingLabel on the first hole."""
    picked = labels[indices]
    missing = picked == UNLABELED
    if picked.ndim > 1:
        missing = missing.any(axis=1)
    if np.any(missing):
        raise MissingLabel(int(indices[np.argmax(missing)]))
    return picked
