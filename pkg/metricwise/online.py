"""
Online Bernoulli rounds for sum metrics.

Each round labels a Bernoulli sample of the points no earlier round has touched.
Round r estimates the still-unlabelled part of sum(f) by reweighting, and adds the
exactly known sum of everything labelled before it; the average of these round
estimates stays unbiased even when a round's weights depend on earlier labels.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import LOGGER, STREAM_ONLINE
from .exceptions import InvalidWeights, ValidationError
from .streams import make_generator

if TYPE_CHECKING:
    from collections.abc import Callable


@dataclass(frozen=True)
class OnlineRound:
    """What one round drew and estimated."""

    round: int
    drawn: tuple[int, ...]
    weights_digest: str
    partial_estimate: float
    prior_sum: float

    @property
    def estimate(self) -> float:
        """Sum estimate of this round alone."""
        return self.prior_sum + self.partial_estimate

    def as_dict(self) -> dict[str, Any]:
        """Return the round-log entry."""
        return {
            "round": self.round,
            "drawn": list(self.drawn),
            "weights_digest": self.weights_digest,
            "partial_estimate": self.partial_estimate,
        }


@dataclass
class OnlineState:
    """
    Labelling state across online rounds.

    Attributes:
        size: Number of points N.
        sampled: Mask of points labelled in any earlier round.
        f_values: Observed f per labelled point.
        rounds: Completed rounds in order.

    """

    size: int
    sampled: np.ndarray
    f_values: dict[int, float] = field(default_factory=dict)
    rounds: list[OnlineRound] = field(default_factory=list)

    @classmethod
    def start(cls, size: int) -> OnlineState:
        """Return the state before any round, nothing labelled."""
        if size < 1:
            msg = f"Online sampling needs at least one point, got {size}"
            raise ValidationError(msg)
        return cls(size, np.zeros(size, dtype=bool))

    @property
    def remaining(self) -> np.ndarray:
        """Indices not yet labelled."""
        return np.flatnonzero(~self.sampled)

    @property
    def labeled_sum(self) -> float:
        """Sum of f over everything labelled so far."""
        return math.fsum(self.f_values[n] for n in sorted(self.f_values))

    def round_log(self) -> list[dict[str, Any]]:
        """Return the JSON-ready log of all rounds."""
        return [entry.as_dict() for entry in self.rounds]


def _round_weights(
    state: OnlineState, weights: Mapping[int, float] | np.ndarray
) -> np.ndarray:
    """Expand round weights to length N with NaN on sampled points."""
    full = np.full(state.size, np.nan)
    if isinstance(weights, Mapping):
        for index, value in weights.items():
            if not 0 <= int(index) < state.size:
                msg = f"Weight index {index} is outside the pool"
                raise InvalidWeights(msg)
            full[int(index)] = float(value)
    else:
        given = np.asarray(weights, dtype=float)
        if given.shape != (state.size,):
            msg = f"Round weights have shape {given.shape}, expected ({state.size},)"
            raise InvalidWeights(msg)
        full[:] = given
        # Zero on a sampled point means no weight.
        full[state.sampled & (full == 0)] = np.nan

    stale = state.sampled & ~np.isnan(full)
    if stale.any():
        msg = f"Weight on already sampled index {int(np.argmax(stale))}"
        raise InvalidWeights(msg)
    open_weights = full[~state.sampled]
    if np.any(np.isnan(open_weights)):
        missing = state.remaining[np.isnan(open_weights)][0]
        msg = f"No weight for unsampled index {int(missing)}"
        raise InvalidWeights(msg)
    if np.any((open_weights <= 0) | (open_weights > 1)):
        msg = "Round weights must lie in (0, 1]"
        raise InvalidWeights(msg)
    return full


def _digest(indices: np.ndarray, weights: np.ndarray) -> str:
    payload = indices.astype("<i8").tobytes() + weights.astype("<f8").tobytes()
    return hashlib.sha256(payload).hexdigest()


def online_round(
    state: OnlineState,
    weights: Mapping[int, float] | np.ndarray,
    seed: int | None = None,
    *,
    rng: np.random.Generator | None = None,
    oracle: Callable[[int], float],
) -> OnlineState:
    """
    Run one Bernoulli round over the unlabelled points.

    Args:
        state: State to advance in place.
        weights: Inclusion probability of every unlabelled point, either as a
            mapping from index or as a length-N array with NaN (or 0) on points
            labelled in earlier rounds.
        seed: Base seed; the round uses its own substream of it.
        rng: Generator to use instead of a seeded one.
        oracle: Returns f for a newly labelled index.

    Returns:
        The same state, advanced by one round.

    Raises:
        InvalidWeights: If the weights do not cover exactly the unlabelled points
            with values in (0, 1].

    """
    remaining = state.remaining
    if remaining.size == 0:
        LOGGER.debug("Online round skipped, every point is labelled")
        return state
    b = _round_weights(state, weights)
    round_index = len(state.rounds) + 1
    if rng is None:
        if seed is None:
            msg = "An online round needs a seed"
            raise ValidationError(msg)
        rng = make_generator(seed, STREAM_ONLINE, round_index)

    u = rng.random(state.size)
    drawn = remaining[u[remaining] < b[remaining]]
    prior_sum = state.labeled_sum
    observed = {int(n): float(oracle(int(n))) for n in drawn}
    partial = math.fsum(observed[int(n)] / b[n] for n in drawn)

    state.f_values.update(observed)
    state.sampled[drawn] = True
    state.rounds.append(
        OnlineRound(
            round=round_index,
            drawn=tuple(int(n) for n in drawn),
            weights_digest=_digest(remaining, b[remaining]),
            partial_estimate=partial,
            prior_sum=prior_sum,
        )
    )
    LOGGER.debug(
        "Online round %d labelled %d of %d remaining points",
        round_index,
        drawn.size,
        remaining.size,
    )
    return state


def online_estimate(state: OnlineState) -> float:
    """
    Return the multi-round estimate of sum(f).

    The mean over rounds of the labelled-before sum plus that round's reweighted
    estimate of the rest.

    Raises:
        ValidationError: If no round has been run.

    """
    if not state.rounds:
        msg = "The online estimate needs at least one round"
        raise ValidationError(msg)
    return math.fsum(entry.estimate for entry in state.rounds) / len(state.rounds)
