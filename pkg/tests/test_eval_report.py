"""Tests for confusion-matrix construction and rendering."""

import json

import numpy as np
import pytest

from inkrec.report import ConfusionMatrix, confusion_matrix, render_json, render_text


class TestConfusionMatrix:
    def test_identity_predictions(self):
        cm = confusion_matrix(["a", "b", "a"], ["a", "b", "a"])
        assert cm.labels == ["a", "b"]
        np.testing.assert_array_equal(cm.counts, [[2, 0], [0, 1]])
        assert cm.accuracy() == 100.0
        assert cm.empty_rows() == []

    def test_two_class_half_right(self):
        cm = confusion_matrix(["a", "a", "b", "b"], ["a", "b", "b", "a"])
        assert cm.rate("a", "a") == 50.0
        assert cm.rate("a", "b") == 50.0
        assert cm.rate("b", "b") == 50.0
        assert cm.accuracy() == 50.0

    def test_rows_normalize_to_100(self):
        rng = np.random.default_rng(42)
        labels = [f"c{i}" for i in range(6)]
        truths = [labels[i] for i in rng.integers(0, 6, 500)]
        preds = [labels[i] for i in rng.integers(0, 6, 500)]
        cm = confusion_matrix(truths, preds)
        sums = cm.percentages.sum(axis=1)
        np.testing.assert_allclose(sums[cm.row_totals > 0], 100.0, atol=0.01)

    def test_rate_from_raw_counts(self):
        # one 10000-sample row spread over six predictions
        labels = ["other", "st1", "st144", "st32", "st4", "st61"]
        counts = np.zeros((6, 6), dtype=np.int64)
        row = {"st1": 6968, "st4": 830, "st61": 121, "st32": 75, "st144": 15, "other": 1991}
        for lbl, c in row.items():
            counts[labels.index("st1"), labels.index(lbl)] = c
        cm = ConfusionMatrix(labels, counts)
        assert cm.rate("st1", "st1") == pytest.approx(69.68, abs=1e-12)
        assert cm.rate("st1", "st4") == pytest.approx(8.30, abs=1e-12)
        assert cm.rate("st1", "st61") == pytest.approx(1.21, abs=1e-12)
        assert cm.rate("st1", "st32") == pytest.approx(0.75, abs=1e-12)
        assert cm.rate("st1", "st144") == pytest.approx(0.15, abs=1e-12)

    def test_empty_row_flagged_not_nan(self):
        # "b" appears only as a prediction, so its truth row is empty
        cm = confusion_matrix(["a", "a"], ["a", "b"])
        assert cm.empty_rows() == ["b"]
        assert np.isfinite(cm.percentages).all()
        np.testing.assert_array_equal(cm.percentages[cm.labels.index("b")], 0.0)

    def test_accuracy_weights_by_class_size(self):
        # 9 of 10 "a" right, 0 of 2 "b" right -> 75% overall, not mean of rows
        truths = ["a"] * 10 + ["b"] * 2
        preds = ["a"] * 9 + ["b"] + ["a"] * 2
        cm = confusion_matrix(truths, preds)
        assert cm.accuracy() == pytest.approx(75.0)

    def test_unknown_label_rejected(self):
        cm = confusion_matrix(["a"], ["a"])
        with pytest.raises(KeyError, match="zz"):
            cm.rate("zz", "a")

    def test_length_mismatch_and_empty(self):
        with pytest.raises(ValueError, match="truths"):
            confusion_matrix(["a"], ["a", "b"])
        with pytest.raises(ValueError, match="at least one"):
            confusion_matrix([], [])

    def test_counts_shape_validated(self):
        with pytest.raises(ValueError, match="counts"):
            ConfusionMatrix(["a", "b"], np.zeros((2, 3), dtype=np.int64))


class TestRendering:
    def test_text_table_is_aligned_and_complete(self):
        cm = confusion_matrix(["a", "a", "b"], ["a", "b", "b"])
        text = render_text(cm)
        lines = text.strip().split("\n")
        assert len(lines) == 1 + 2 + 1  # header, two rows, accuracy
        assert len(lines[1]) == len(lines[2])
        assert "50.00" in lines[1]
        assert "accuracy: 66.67%" in lines[-1]

    def test_empty_row_rendered_as_dashes(self):
        cm = confusion_matrix(["a", "a"], ["a", "b"])
        text = render_text(cm)
        row_b = [ln for ln in text.split("\n") if ln.strip().startswith("b")][0]
        assert "-" in row_b

    def test_json_round_trip(self):
        cm = confusion_matrix(["a", "b", "a"], ["a", "a", "b"])
        doc = json.loads(render_json(cm))
        back = ConfusionMatrix.from_dict(doc)
        assert back.labels == cm.labels
        np.testing.assert_array_equal(back.counts, cm.counts)
        assert doc["accuracy"] == pytest.approx(cm.accuracy())
