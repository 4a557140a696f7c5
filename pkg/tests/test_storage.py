"""Tests for file formats."""

from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from metricwise.data import UNLABELED, BernoulliPlan, MultiLabelPool, PredictionPool
from metricwise.exceptions import ValidationError
from metricwise.planner import draw_plan, make_plan
from metricwise.storage import (
    draw_from_dict,
    draw_to_dict,
    plan_from_dict,
    plan_to_dict,
    point_ids,
    read_json,
    read_labels,
    read_predictions,
    write_frame,
    write_json,
    write_pool,
)


@pytest.fixture
def predictions_csv(tmp_path):
    path = tmp_path / "predictions.csv"
    path.write_text("id,prob_positive\na,0.9\nb,0.2\nc,0.7\n")
    return path


class TestPredictions:
    def test_binary_csv(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        assert isinstance(pool, PredictionPool)
        assert pool.ids == ("a", "b", "c")
        assert pool.pred_class.tolist() == [1, 0, 1]

    def test_numeric_ids_stay_strings(self, tmp_path):
        path = tmp_path / "predictions.csv"
        path.write_text("id,prob_positive\n007,0.9\n008,0.2\n")
        assert read_predictions(path).ids == ("007", "008")

    def test_multilabel_csv(self, tmp_path):
        path = tmp_path / "predictions.csv"
        path.write_text("id,prob_class_2,prob_class_1\nx,0.1,0.9\ny,0.8,0.3\n")
        pool = read_predictions(path)
        assert isinstance(pool, MultiLabelPool)
        assert_allclose(pool.prob_positive, [[0.9, 0.1], [0.3, 0.8]])

    def test_json_list(self, tmp_path):
        path = tmp_path / "predictions.json"
        path.write_text("[0.1, 0.6]")
        pool = read_predictions(path, threshold=0.7)
        assert pool.threshold == 0.7
        assert pool.pred_class.tolist() == [0, 0]

    def test_without_probabilities(self, tmp_path):
        path = tmp_path / "predictions.csv"
        path.write_text("id,score\na,0.1\n")
        with pytest.raises(ValidationError):
            read_predictions(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            read_predictions(tmp_path / "absent.csv")

    def test_default_ids(self):
        assert point_ids(PredictionPool(np.array([0.1, 0.2]))) == ["0", "1"]


class TestLabels:
    def test_csv_aligns_by_id(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.csv"
        path.write_text("id,label\nc,0\na,1\n")
        assert read_labels(path, pool).tolist() == [1, UNLABELED, 0]

    def test_json(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.json"
        path.write_text(json.dumps({"b": 1}))
        assert read_labels(path, pool).tolist() == [UNLABELED, 1, UNLABELED]

    def test_multilabel_csv(self, tmp_path):
        pool = MultiLabelPool(np.array([[0.9, 0.1], [0.3, 0.8]]), ids=("x", "y"))
        path = tmp_path / "labels.csv"
        path.write_text("id,label_1,label_2\ny,0,1\n")
        assert read_labels(path, pool).tolist() == [[UNLABELED] * 2, [0, 1]]

    def test_unknown_id(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.csv"
        path.write_text("id,label\nz,1\n")
        with pytest.raises(ValidationError):
            read_labels(path, pool)

    def test_non_binary_label(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.csv"
        path.write_text("id,label\na,2\n")
        with pytest.raises(ValidationError):
            read_labels(path, pool)

    @pytest.mark.parametrize(
        ("name", "text"),
        [
            ("labels.csv", "id,label\na,0.7\n"),
            ("labels.csv", "id,label\na,1\nb,0.5\n"),
            ("labels.json", '{"a": 0.7}'),
            ("labels.json", '{"a": "1"}'),
        ],
    )
    def test_fractional_label(self, predictions_csv, tmp_path, name, text):
        pool = read_predictions(predictions_csv)
        path = tmp_path / name
        path.write_text(text)
        with pytest.raises(ValidationError, match="must be 0 or 1"):
            read_labels(path, pool)

    def test_missing_label_columns(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.csv"
        path.write_text("id,truth\na,1\n")
        with pytest.raises(ValidationError, match="label"):
            read_labels(path, pool)

    def test_class_count_mismatch(self, predictions_csv, tmp_path):
        pool = read_predictions(predictions_csv)
        path = tmp_path / "labels.csv"
        path.write_text("id,label_1,label_2\na,0,1\n")
        with pytest.raises(ValidationError):
            read_labels(path, pool)


class TestPlanDocuments:
    def test_bernoulli_round_trip(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        plan = make_plan(pool, "F1", "bernoulli", 2.0, seed=6)
        document = json.loads(json.dumps(plan_to_dict(plan, pool)))
        restored, restored_pool = plan_from_dict(document)
        assert isinstance(restored, BernoulliPlan)
        assert_allclose(restored.b, plan.b)
        assert restored.seed == 6
        assert restored_pool.ids == pool.ids
        assert restored.f_prime_a == pytest.approx(plan.f_prime_a)

    def test_uniform_has_no_reference(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        plan = make_plan(pool, "F1", "uniform", 4)
        document = plan_to_dict(plan, pool)
        assert document["f_prime_a"] is None
        restored, _ = plan_from_dict(document)
        assert restored.method == "uniform"

    def test_weight_count_mismatch(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        document = plan_to_dict(make_plan(pool, "F1", "uniform", 4), pool)
        document["q"] = [0.5, 0.5]
        with pytest.raises(ValidationError):
            plan_from_dict(document)

    def test_document_keys(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        bernoulli = plan_to_dict(make_plan(pool, "F1", "bernoulli", 2.0), pool)
        importance = plan_to_dict(make_plan(pool, "F1", "importance", 4), pool)
        common = {"method", "metric", "M", "lambda", "f_prime_a", "seed", "pool"}
        assert set(bernoulli) == common | {"b"}
        assert set(importance) == common | {"q"}
        assert importance["M"] == 4

    def test_reads_literal_importance_plan(self):
        document = {
            "method": "importance",
            "q": [0.5, 0.25, 0.25],
            "M": 6,
            "lambda": 0.9,
            "metric": "F1",
            "f_prime_a": 0.6,
            "seed": 42,
            "pool": {"threshold": 0.5, "prob_positive": [0.9, 0.2, 0.7]},
        }
        plan, pool = plan_from_dict(document)
        assert plan.method == "importance"
        assert plan.budget == 6
        assert_allclose(plan.q, [0.5, 0.25, 0.25])
        assert plan.seed == 42
        assert pool.size == 3
        assert plan_to_dict(plan, pool)["q"] == document["q"]

    def test_reads_literal_bernoulli_plan(self):
        document = {
            "method": "bernoulli",
            "b": [1.0, 0.5, 0.5],
            "M": 2.0,
            "lambda": 0.9,
            "metric": "F1",
            "f_prime_a": None,
            "seed": 3,
            "pool": {"threshold": 0.5, "prob_positive": [0.9, 0.2, 0.7]},
        }
        plan, _ = plan_from_dict(document)
        assert isinstance(plan, BernoulliPlan)
        assert_allclose(plan.b, [1.0, 0.5, 0.5])
        assert plan.budget == 2.0

    def test_weights_under_the_wrong_key(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        document = plan_to_dict(make_plan(pool, "F1", "bernoulli", 2.0), pool)
        document["q"] = document.pop("b")
        with pytest.raises(ValidationError, match="under b"):
            plan_from_dict(document)

    def test_both_weight_keys(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        document = plan_to_dict(make_plan(pool, "F1", "uniform", 4), pool)
        document["b"] = document["q"]
        with pytest.raises(ValidationError):
            plan_from_dict(document)

    def test_unknown_method(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        document = plan_to_dict(make_plan(pool, "F1", "uniform", 4), pool)
        document["method"] = "stratified"
        with pytest.raises(ValidationError):
            plan_from_dict(document)


class TestDrawDocuments:
    def test_importance_lists_ids(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        plan = make_plan(pool, "F1", "importance", 5, seed=1)
        draw = draw_plan(plan)
        document = draw_to_dict(draw, plan, pool)
        assert document["to_label"] == [pool.ids[n] for n in draw.indices]
        restored = draw_from_dict(json.loads(json.dumps(document)))
        assert restored.counts.tolist() == draw.counts.tolist()

    def test_bernoulli_selection(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        plan = make_plan(pool, "F1", "bernoulli", 2.0, seed=1)
        draw = draw_plan(plan)
        restored = draw_from_dict(draw_to_dict(draw, plan, pool))
        assert restored.selected.tolist() == draw.selected.tolist()

    def test_importance_multiset_shape(self, predictions_csv):
        pool = read_predictions(predictions_csv)
        plan = make_plan(pool, "F1", "importance", 5, seed=1)
        draw = draw_plan(plan)
        document = draw_to_dict(draw, plan, pool)
        assert document["indices"] == draw.indices.tolist()
        assert document["counts"] == draw.counts[draw.indices].tolist()
        assert sum(document["counts"]) == 5
        assert "selected" not in document

    def test_reads_literal_multiset(self):
        document = {
            "method": "importance",
            "size": 4,
            "seed": 9,
            "indices": [0, 3],
            "counts": [2, 1],
        }
        draw = draw_from_dict(document)
        assert draw.counts.tolist() == [2, 0, 0, 1]
        assert draw.indices.tolist() == [0, 3]
        assert draw.seed == 9

    @pytest.mark.parametrize(
        "multiset",
        [
            {"indices": [0, 1], "counts": [1]},
            {"indices": [0, 0], "counts": [1, 1]},
            {"indices": [0]},
            {"indices": [0], "counts": [0]},
        ],
    )
    def test_malformed_multiset(self, multiset):
        with pytest.raises(ValidationError):
            draw_from_dict({"method": "importance", "size": 2, **multiset})

    def test_index_outside_pool(self):
        with pytest.raises(ValidationError):
            draw_from_dict({"method": "bernoulli", "size": 2, "selected": [3]})
        with pytest.raises(ValidationError):
            draw_from_dict(
                {"method": "importance", "size": 2, "indices": [2], "counts": [1]}
            )

    def test_needs_counts_or_selection(self):
        with pytest.raises(ValidationError):
            draw_from_dict({"method": "importance", "size": 2})


class TestWriting:
    def test_json_is_stable(self, tmp_path):
        path = tmp_path / "out.json"
        write_json(path, {"b": 1, "a": [1.5, 2]})
        assert path.read_bytes() == b'{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'
        assert read_json(path) == {"a": [1.5, 2], "b": 1}

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        with pytest.raises(ValidationError):
            read_json(path)

    def test_frame_format(self, tmp_path):
        path = tmp_path / "out.csv"
        write_frame(path, pd.DataFrame({"x": [1 / 3], "y": ["a"]}))
        assert path.read_bytes() == b"x,y\n0.3333333333,a\n"

    def test_pool_file_reads_back(self, tmp_path):
        path = tmp_path / "pool.csv"
        pool = PredictionPool(np.array([0.25, 0.75]))
        write_pool(path, pool, np.array([0, 1]))
        assert read_predictions(path).prob_positive.tolist() == [0.25, 0.75]
        assert read_labels(path, read_predictions(path)).tolist() == [0, 1]

    def test_multilabel_pool_file_reads_back(self, tmp_path):
        path = tmp_path / "pool.csv"
        prob = np.array([[0.25, 0.5], [0.75, 0.125]])
        labels = np.array([[0, 1], [1, 0]])
        write_pool(path, MultiLabelPool(prob), labels)
        header = path.read_text().splitlines()[0]
        assert header == "id,prob_class_1,prob_class_2,label_1,label_2"
        pool = read_predictions(path)
        assert isinstance(pool, MultiLabelPool)
        assert_allclose(pool.prob_positive, prob)
        assert read_labels(path, pool).tolist() == labels.tolist()
