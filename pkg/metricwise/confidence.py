"""Beta moment fits and central confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from scipy.optimize import bisect
from scipy.special import betainc

from .const import (
    BETA_CLAMP,
    DEFAULT_LEVEL,
    FLAG_CLAMPED,
    FLAG_DEGENERATE,
    FLAG_POINT_MASS,
    LOGGER,
    QUANTILE_TOLERANCE,
)
from .data import EstimateReport
from .exceptions import InfeasibleVariance, ValidationError

if TYPE_CHECKING:
    from .data import RatioEstimate


@dataclass(frozen=True)
class BetaFit:
    """
    A Beta distribution matched to a mean and variance.

    Attributes:
        alpha: First shape parameter (infinite for a point mass).
        beta: Second shape parameter (infinite for a point mass).
        mean: Mean the fit was made for, after clamping.
        variance: Variance the fit was made for.
        flags: Diagnostics raised while fitting.

    """

    alpha: float
    beta: float
    mean: float
    variance: float
    flags: tuple[str, ...] = ()

    @property
    def moments(self) -> tuple[float, float]:
        """Mean and variance implied by the shape parameters."""
        total = self.alpha + self.beta
        return (
            self.alpha / total,
            self.alpha * self.beta / (total**2 * (total + 1.0)),
        )


def beta_fit(mean: float, variance: float, *, strict: bool = False) -> BetaFit:
    """
    Fit a Beta distribution by the method of moments.

    A mean outside (0, 1) is clamped into [1e-6, 1 - 1e-6]. A variance at or
    above mean * (1 - mean) has no Beta fit; the uniform Beta(1, 1) is returned
    instead, or InfeasibleVariance raised when strict. A nonpositive variance is
    a point mass at the mean.

    Args:
        mean: Target mean.
        variance: Target variance.
        strict: Raise instead of falling back on infeasible variances.

    Returns:
        The fit.

    """
    if not (math.isfinite(mean) and math.isfinite(variance)):
        msg = f"Cannot fit a Beta to mean {mean} and variance {variance}"
        raise ValidationError(msg)
    flags: list[str] = []
    if not 0.0 < mean < 1.0:
        LOGGER.warning("Clamping Beta mean %.6g into the open unit interval", mean)
        mean = min(max(mean, BETA_CLAMP), 1.0 - BETA_CLAMP)
        flags.append(FLAG_CLAMPED)
    if variance <= 0.0:
        flags.append(FLAG_POINT_MASS)
        return BetaFit(math.inf, math.inf, mean, 0.0, tuple(flags))
    spread = mean * (1.0 - mean)
    if variance >= spread:
        if strict:
            raise InfeasibleVariance(mean, variance)
        LOGGER.warning(
            "Variance %.6g is infeasible for mean %.6g, using Beta(1, 1)",
            variance,
            mean,
        )
        flags.append(FLAG_DEGENERATE)
        return BetaFit(1.0, 1.0, mean, variance, tuple(flags))
    nu = spread / variance - 1.0
    return BetaFit(mean * nu, (1.0 - mean) * nu, mean, variance, tuple(flags))


def beta_cdf(fit: BetaFit, x: float) -> float:
    """Return the regularized incomplete beta function at x."""
    if math.isinf(fit.alpha):
        return float(x >= fit.mean)
    return float(betainc(fit.alpha, fit.beta, x))


def beta_quantile(fit: BetaFit, p: float) -> float:
    """Invert the Beta CDF by bisection to within 1e-8."""
    if not 0.0 < p < 1.0:
        msg = f"Quantile level {p} is outside (0, 1)"
        raise ValidationError(msg)
    if math.isinf(fit.alpha):
        return fit.mean
    return float(
        bisect(
            lambda x: betainc(fit.alpha, fit.beta, x) - p,
            0.0,
            1.0,
            xtol=QUANTILE_TOLERANCE,
        )
    )


def beta_interval(fit: BetaFit, level: float = DEFAULT_LEVEL) -> tuple[float, float]:
    """
    Return the equal-tail interval holding level of the probability mass.

    Args:
        fit: Beta fit.
        level: Coverage level in (0, 1).

    Returns:
        Tuple of (lo, hi).

    """
    if not 0.0 < level < 1.0:
        msg = f"Confidence level {level} is outside (0, 1)"
        raise ValidationError(msg)
    tail = (1.0 - level) / 2.0
    return beta_quantile(fit, tail), beta_quantile(fit, 1.0 - tail)


def build_report(  # noqa: PLR0913
    estimate: RatioEstimate | float,
    variance: float,
    *,
    metric: str,
    method: str,
    level: float = DEFAULT_LEVEL,
    flags: tuple[str, ...] = (),
    n_labeled: int = 0,
    n_draws: int = 0,
) -> EstimateReport:
    """Attach a Beta interval to an estimate and its variance."""
    value = estimate if isinstance(estimate, float) else estimate.value
    fit = beta_fit(value, variance)
    lo, hi = beta_interval(fit, level)
    return EstimateReport(
        metric=metric,
        method=method,
        estimate=value,
        variance=variance,
        ci_level=level,
        ci_lo=lo,
        ci_hi=hi,
        beta_alpha=fit.alpha,
        beta_beta=fit.beta,
        flags=tuple(dict.fromkeys((*flags, *fit.flags))),
        n_labeled=n_labeled,
        n_draws=n_draws,
        x_hat=math.nan if isinstance(estimate, float) else estimate.x_hat,
        y_hat=math.nan if isinstance(estimate, float) else estimate.y_hat,
    )
