"""
File formats.

Predictions and labels are CSV (or JSON) keyed by point id. Plans embed the pool
they were made for so that draw and estimate need no other input, and every
document is written deterministically: sorted keys, fixed float format, LF line
endings.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
import voluptuous as vol

from .const import DEFAULT_THRESHOLD, FLOAT_FORMAT, LOGGER, METHOD_BERNOULLI, METHODS
from .data import (
    UNLABELED,
    BernoulliPlan,
    BSDraw,
    ImportancePlan,
    ISDraw,
    MultiLabelPool,
    PredictionPool,
)
from .exceptions import ValidationError

if TYPE_CHECKING:
    from .data import Pool
    from .planner import Draw, Plan

_number = vol.Any(None, vol.Coerce(float))

POOL_SCHEMA = vol.Schema(
    {
        vol.Required("threshold"): vol.Coerce(float),
        vol.Required("prob_positive"): list,
        vol.Optional("ids", default=None): vol.Any(None, [str]),
    }
)

PLAN_SCHEMA = vol.Schema(
    {
        vol.Required("method"): vol.In(METHODS),
        vol.Required("metric"): str,
        vol.Required("M"): vol.Coerce(float),
        vol.Exclusive("q", "weights"): [vol.Coerce(float)],
        vol.Exclusive("b", "weights"): [vol.Coerce(float)],
        vol.Optional("lambda", default=0.9): vol.Coerce(float),
        vol.Optional("f_prime_a", default=None): _number,
        vol.Optional("seed", default=None): vol.Any(None, int),
        vol.Required("pool"): POOL_SCHEMA,
    }
)

DRAW_SCHEMA = vol.Schema(
    {
        vol.Required("method"): vol.In(METHODS),
        vol.Required("size"): vol.All(int, vol.Range(min=1)),
        vol.Optional("seed", default=None): vol.Any(None, int),
        vol.Inclusive("indices", "multiset"): [int],
        vol.Inclusive("counts", "multiset"): [vol.All(int, vol.Range(min=1))],
        vol.Optional("selected"): [int],
        vol.Optional("to_label"): [str],
    }
)


def _validated(schema: vol.Schema, data: Any, what: str) -> dict[str, Any]:
    try:
        return schema(data)
    except vol.Invalid as err:
        msg = f"Invalid {what}: {err}"
        raise ValidationError(msg) from err


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


def point_ids(pool: Pool) -> list[str]:
    """Return the pool ids, or the decimal indices when the pool has none."""
    if pool.ids is None:
        return [str(n) for n in range(pool.size)]
    return list(pool.ids)


def read_json(path: str | Path) -> Any:
    """Read a JSON document, wrapping read and parse errors."""
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        msg = f"Cannot read {path}: {err}"
        raise ValidationError(msg) from err


def write_json(path: str | Path, data: Any) -> None:
    """Write a JSON document with sorted keys and a trailing newline."""
    text = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
    LOGGER.info("Wrote %s", path)


def write_frame(path: str | Path, frame: pd.DataFrame) -> None:
    """Write a frame as CSV with a fixed float format."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    LOGGER.info("Wrote %d rows to %s", len(frame), path)


def _read_frame(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype={"id": str})
    except (OSError, ValueError, pd.errors.ParserError) as err:
        msg = f"Cannot read {path}: {err}"
        raise ValidationError(msg) from err


def _class_columns(frame: pd.DataFrame, prefix: str) -> list[str]:
    columns = [c for c in frame.columns if c.startswith(prefix)]
    return sorted(columns, key=lambda c: int(c.removeprefix(prefix)))


def pool_from_dict(data: dict[str, Any]) -> Pool:
    """Build a pool from its JSON form."""
    data = _validated(POOL_SCHEMA, data, "pool")
    prob = np.asarray(data["prob_positive"], dtype=float)
    ids = tuple(data["ids"]) if data["ids"] is not None else None
    if prob.ndim == 2:  # noqa: PLR2004
        return MultiLabelPool(prob, data["threshold"], ids)
    return PredictionPool(prob, data["threshold"], ids)


def pool_to_dict(pool: Pool) -> dict[str, Any]:
    """Return the JSON form of a pool."""
    return {
        "threshold": pool.threshold,
        "prob_positive": pool.prob_positive.tolist(),
        "ids": list(pool.ids) if pool.ids is not None else None,
    }


def read_predictions(path: str | Path, threshold: float = DEFAULT_THRESHOLD) -> Pool:
    """
    Read a prediction pool.

    CSV files hold either id,prob_positive (binary) or id,prob_class_1,...,
    prob_class_C (multilabel). JSON files hold the pool form written into plans,
    or a bare list of probabilities.

    Args:
        path: CSV or JSON file.
        threshold: Decision threshold, unless the file carries one.

    Returns:
        A PredictionPool or a MultiLabelPool.

    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = read_json(path)
        if isinstance(data, list):
            data = {"prob_positive": data}
        if not isinstance(data, dict):
            msg = f"{path} must hold a pool object or a probability list"
            raise ValidationError(msg)
        return pool_from_dict({"threshold": threshold, **data})

    frame = _read_frame(path)
    ids = tuple(frame["id"]) if "id" in frame.columns else None
    if "prob_positive" in frame.columns:
        pool = PredictionPool(frame["prob_positive"].to_numpy(float), threshold, ids)
    else:
        columns = _class_columns(frame, "prob_class_")
        if not columns:
            msg = f"{path} has neither prob_positive nor prob_class_* columns"
            raise ValidationError(msg)
        pool = MultiLabelPool(frame[columns].to_numpy(float), threshold, ids)
    LOGGER.debug("Read %d predictions from %s", pool.size, path)
    return pool


def read_labels(path: str | Path, pool: Pool) -> np.ndarray:
    """
    Read true labels and align them with the pool by id.

    Points missing from the file stay UNLABELED. CSV files hold id,label or
    id,label_1,...,label_C; JSON files map ids to labels.

    Raises:
        ValidationError: If an id is not in the pool or a label is not 0 or 1.

    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = read_json(path)
        if not isinstance(data, dict):
            msg = f"{path} must map point ids to labels"
            raise ValidationError(msg)
        keys = [str(k) for k in data]
        try:
            values = np.asarray(list(data.values()))
        except ValueError as err:
            msg = f"{path} holds label rows of different lengths"
            raise ValidationError(msg) from err
    else:
        frame = _read_frame(path).dropna()
        if "id" not in frame.columns:
            msg = f"{path} has no id column"
            raise ValidationError(msg)
        keys = list(frame["id"])
        if "label" in frame.columns:
            values = frame["label"].to_numpy()
        else:
            columns = _class_columns(frame, "label_")
            if not columns:
                msg = f"{path} has neither label nor label_* columns"
                raise ValidationError(msg)
            values = frame[columns].to_numpy()

    if values.size and (
        values.dtype.kind not in "biuf" or not np.all(np.isin(values, (0, 1)))
    ):
        msg = f"Labels in {path} must be 0 or 1"
        raise ValidationError(msg)
    if keys and values.shape[1:] != pool.shape[1:]:
        msg = f"Labels in {path} have the wrong number of classes"
        raise ValidationError(msg)
    position = {point: n for n, point in enumerate(point_ids(pool))}
    labels = np.full(pool.shape, UNLABELED, dtype=np.int64)
    for key, value in zip(keys, values, strict=True):
        if key not in position:
            msg = f"Label for unknown point id {key!r}"
            raise ValidationError(msg)
        labels[position[key]] = value
    LOGGER.debug("Read %d labels from %s", len(keys), path)
    return labels


def write_pool(path: str | Path, pool: Pool, labels: np.ndarray) -> None:
    """
    Write a simulated pool with its labels.

    Binary pools become id,prob_positive,label and multilabel pools
    id,prob_class_1,...,prob_class_C,label_1,...,label_C, the layouts
    read_predictions and read_labels accept.
    """
    columns: dict[str, Any] = {"id": point_ids(pool)}
    if isinstance(pool, MultiLabelPool):
        for k in range(pool.n_classes):
            columns[f"prob_class_{k + 1}"] = pool.prob_positive[:, k]
        for k in range(pool.n_classes):
            columns[f"label_{k + 1}"] = labels[:, k]
    else:
        columns["prob_positive"] = pool.prob_positive
        columns["label"] = labels
    write_frame(path, pd.DataFrame(columns))


def plan_to_dict(plan: Plan, pool: Pool) -> dict[str, Any]:
    """
    Return the JSON form of a plan, with its pool.

    Bernoulli plans carry their inclusion probabilities under b, importance and
    uniform plans their proposal under q. M is the draw count or, for Bernoulli
    plans, the expected number of labels.
    """
    data: dict[str, Any] = {
        "method": plan.method,
        "metric": plan.metric,
        "M": plan.budget,
        "lambda": plan.lam,
        "f_prime_a": _finite_or_none(plan.f_prime_a),
        "seed": plan.seed,
        "pool": pool_to_dict(pool),
    }
    if isinstance(plan, BernoulliPlan):
        data["b"] = plan.b.tolist()
    else:
        data["q"] = plan.q.tolist()
    return data


def plan_from_dict(data: Any) -> tuple[Plan, Pool]:
    """
    Rebuild a plan and its pool from JSON.

    Raises:
        ValidationError: If the document or the plan is invalid.

    """
    data = _validated(PLAN_SCHEMA, data, "plan")
    key = "b" if data["method"] == METHOD_BERNOULLI else "q"
    if key not in data:
        msg = f"A {data['method']} plan needs its weights under {key}"
        raise ValidationError(msg)
    pool = pool_from_dict(data["pool"])
    weights = np.asarray(data[key])
    if weights.size != pool.size:
        msg = f"Plan has {weights.size} weights for {pool.size} points"
        raise ValidationError(msg)
    f_prime_a = math.nan if data["f_prime_a"] is None else data["f_prime_a"]
    common = {
        "lam": data["lambda"],
        "metric": data["metric"],
        "f_prime_a": f_prime_a,
        "seed": data["seed"],
    }
    if data["method"] == METHOD_BERNOULLI:
        return BernoulliPlan(weights, data["M"], **common), pool
    plan = ImportancePlan(weights, data["M"], method=data["method"], **common)
    return plan, pool


def draw_to_dict(draw: Draw, plan: Plan, pool: Pool) -> dict[str, Any]:
    """Return the JSON form of a draw, listing the ids that need labels."""
    ids = point_ids(pool)
    data: dict[str, Any] = {
        "method": plan.method,
        "size": plan.size,
        "seed": draw.seed,
        "to_label": [ids[n] for n in draw.indices],
    }
    if isinstance(draw, ISDraw):
        data["indices"] = draw.indices.tolist()
        data["counts"] = draw.counts[draw.indices].tolist()
    else:
        data["selected"] = draw.indices.tolist()
    return data


def _checked_indices(indices: list[int], size: int) -> np.ndarray:
    array = np.asarray(indices, dtype=np.int64)
    if np.any((array < 0) | (array >= size)):
        msg = "Draw index outside the pool"
        raise ValidationError(msg)
    if np.unique(array).size != array.size:
        msg = "Draw indices must be distinct"
        raise ValidationError(msg)
    return array


def draw_from_dict(data: Any) -> Draw:
    """Rebuild a draw from JSON."""
    data = _validated(DRAW_SCHEMA, data, "draw")
    size = data["size"]
    if "counts" in data:
        indices = _checked_indices(data["indices"], size)
        if indices.size != len(data["counts"]):
            msg = "A draw needs one count per index"
            raise ValidationError(msg)
        counts = np.zeros(size, dtype=np.int64)
        counts[indices] = data["counts"]
        return ISDraw(counts, data["seed"])
    if "selected" in data:
        selected = np.zeros(size, dtype=bool)
        selected[_checked_indices(data["selected"], size)] = True
        return BSDraw(selected, data["seed"])
    msg = "A draw needs either indices with counts or selected"
    raise ValidationError(msg)
