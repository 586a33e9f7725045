"""Confusion matrices and evaluation reports.

A ConfusionMatrix keeps raw counts and exposes row-normalized percentages;
classes that never occur as a truth get a flagged empty row instead of NaNs.
Rendering is split into an aligned text table for humans and a dict/JSON
form for tooling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    labels: list[str]
    counts: np.ndarray  # (L, L) int, rows = truth, cols = prediction

    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("labels must be unique")
        if self.counts.shape != (n, n):
            raise ValueError(f"counts must be ({n}, {n}), got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")
        self._index = {lbl: i for i, lbl in enumerate(self.labels)}

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def percentages(self) -> np.ndarray:
        """Row-normalized percentages; empty rows are all-zero, not NaN."""
        totals = self.row_totals.astype(float)
        safe = np.where(totals == 0, 1.0, totals)
        return 100.0 * self.counts / safe[:, None]

    def empty_rows(self) -> list[str]:
        return [lbl for lbl, total in zip(self.labels, self.row_totals) if total == 0]

    def rate(self, truth: str, prediction: str) -> float:
        """Percentage of `truth` samples predicted as `prediction`."""
        for lbl in (truth, prediction):
            if lbl not in self._index:
                raise KeyError(f"unknown label {lbl!r}")
        return float(self.percentages[self._index[truth], self._index[prediction]])

    def accuracy(self) -> float:
        """Overall percent correct, weighted by per-class sample counts."""
        total = int(self.counts.sum())
        if total == 0:
            raise ValueError("confusion matrix has no samples")
        return 100.0 * float(np.trace(self.counts)) / total

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "counts": self.counts.tolist(),
            "percentages": self.percentages.tolist(),
            "accuracy": self.accuracy() if self.counts.sum() else None,
            "empty_rows": self.empty_rows(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ConfusionMatrix":
        return cls(list(doc["labels"]), np.asarray(doc["counts"], dtype=np.int64))


def confusion_matrix(truths: list[str], predictions: list[str]) -> ConfusionMatrix:
    """Tabulate predictions against truths over the union of labels seen."""
    if len(truths) != len(predictions):
        raise ValueError(
            f"got {len(truths)} truths but {len(predictions)} predictions"
        )
    if not truths:
        raise ValueError("need at least one (truth, prediction) pair")
    labels = sorted(set(truths) | set(predictions))
    index = {lbl: i for i, lbl in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truths, predictions):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels, counts)


def render_text(cm: ConfusionMatrix) -> str:
    """Aligned table of row percentages (2 decimals) plus per-class counts."""
    width = max(6, *(len(lbl) for lbl in cm.labels)) + 1
    pct = cm.percentages
    lines = [
        "".join([" " * width, *(f"{lbl:>{width}}" for lbl in cm.labels), f"{'n':>{width}}"])
    ]
    for i, lbl in enumerate(cm.labels):
        cells = [f"{lbl:>{width}}"]
        if cm.row_totals[i] == 0:
            cells += [f"{'-':>{width}}" for _ in cm.labels]
        else:
            cells += [f"{pct[i, j]:>{width}.2f}" for j in range(len(cm.labels))]
        cells.append(f"{cm.row_totals[i]:>{width}d}")
        lines.append("".join(cells))
    if cm.counts.sum():
        lines.append(f"accuracy: {cm.accuracy():.2f}% ({int(cm.counts.sum())} samples)")
    return "\n".join(lines) + "\n"


def render_json(cm: ConfusionMatrix) -> str:
    return json.dumps(cm.to_dict(), ensure_ascii=False, indent=2) + "\n"
