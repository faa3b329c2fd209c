"""Confusion-matrix classification metrics (per class, weighted, macro)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError


class ClassMetrics(NamedTuple):
    precision: float
    recall: float
    f1: float
    support: int


class Averages(NamedTuple):
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    confusion: np.ndarray
    accuracy: float
    per_class: list[ClassMetrics]
    weighted: Averages
    macro: Averages

    @property
    def num_samples(self) -> int:
        return int(self.confusion.sum())

    def key_values(self) -> dict[str, float]:
        kv = {
            "accuracy": self.accuracy,
            "weighted_precision": self.weighted.precision,
            "weighted_recall": self.weighted.recall,
            "weighted_f1": self.weighted.f1,
            "macro_precision": self.macro.precision,
            "macro_recall": self.macro.recall,
            "macro_f1": self.macro.f1,
            "samples": self.num_samples,
        }
        return kv

    def format_table(self, class_names: Sequence[str] | None = None) -> str:
        names = list(class_names) if class_names else [str(i) for i in range(len(self.per_class))]
        width = max(12, max(len(n) for n in names) + 2)
        lines = [f"{'class':<{width}}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}"]
        for name, m in zip(names, self.per_class):
            lines.append(f"{name:<{width}}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10d}")
        total = self.num_samples
        for label, avg in (("macro avg", self.macro), ("weighted avg", self.weighted)):
            lines.append(f"{label:<{width}}{avg.precision:>10.4f}{avg.recall:>10.4f}{avg.f1:>10.4f}{total:>10d}")
        lines.append(f"{'accuracy':<{width}}{self.accuracy:>30.4f}{total:>10d}")
        return "\n".join(lines)

    def format_block(self) -> str:
        """``key<TAB>value`` lines after a ``---`` separator."""
        out = ["---"]
        for k, v in self.key_values().items():
            out.append(f"{k}\t{v}" if isinstance(v, int) else f"{k}\t{v:.6f}")
        return "\n".join(out)


def _ratio(num: float, den: float) -> float:
    return float(num) / den if den > 0 else 0.0


def confusion_matrix(true_labels, predicted_labels, num_classes: int) -> np.ndarray:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise DataError("true and predicted labels must be equal-length vectors")
    if len(t) == 0:
        raise DataError("cannot score an empty prediction set")
    for arr in (t, p):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise DataError(f"label outside [0, {num_classes})")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def compute_metrics(true_labels, predicted_labels, num_classes: int) -> MetricsReport:
    """Table of one-vs-rest precision/recall/F1; zero denominators give 0."""
    cm = confusion_matrix(true_labels, predicted_labels, num_classes)
    tp = np.diag(cm)
    predicted = cm.sum(axis=0)
    support = cm.sum(axis=1)
    per_class = []
    for c in range(num_classes):
        prec = _ratio(tp[c], predicted[c])
        rec = _ratio(tp[c], support[c])
        f1 = _ratio(2 * prec * rec, prec + rec)
        per_class.append(ClassMetrics(prec, rec, f1, int(support[c])))
    total = int(cm.sum())
    cols = np.array([m[:3] for m in per_class])

    def average(w, norm) -> Averages:
        return Averages(*(min(1.0, float(x) / norm) for x in w @ cols))

    return MetricsReport(
        confusion=cm,
        accuracy=float(tp.sum()) / total,
        per_class=per_class,
        weighted=average(support.astype(np.float64), total),
        macro=average(np.ones(num_classes), num_classes),
    )
