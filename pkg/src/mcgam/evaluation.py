"""Classification metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .gam import AdditiveModel, _binned, _check_labels, logits, mean_cross_entropy, softmax


def argmax_predict(model: AdditiveModel, dataset: Dataset) -> np.ndarray:
    """Most probable class per row; ties go to the lowest class index."""
    return np.argmax(softmax(logits(model, _binned(model, dataset))), axis=1)


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """``(K, K)`` counts, rows are true classes and columns predictions."""
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    return np.bincount(y_true * n_classes + y_pred, minlength=n_classes ** 2).reshape(n_classes, n_classes)


def per_class_recall(confusion) -> np.ndarray:
    c = np.asarray(confusion, dtype=float)
    support = c.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(support > 0, np.diag(c) / support, np.nan)


def balanced_accuracy(confusion) -> float:
    """Mean per-class recall. Classes without true rows are left out (with a warning)."""
    recall = per_class_recall(confusion)
    present = ~np.isnan(recall)
    if not present.all():
        warnings.warn(f"{int((~present).sum())} class(es) have no true rows; excluded from balanced accuracy",
                      stacklevel=2)
    if not present.any():
        raise ValueError("balanced accuracy of an empty confusion matrix")
    return float(recall[present].mean())


@dataclass
class EvalReport:
    balanced_accuracy: float
    cross_entropy: float
    per_class_recall: list[float]
    confusion: list[list[int]]
    labels: list[str]

    def to_dict(self) -> dict:
        return {
            "bacc": self.balanced_accuracy,
            "cross_entropy": self.cross_entropy,
            "per_class_recall": [None if np.isnan(r) else r for r in self.per_class_recall],
            "confusion": self.confusion,
            "labels": self.labels,
        }

    def to_table(self) -> str:
        w = max(8, *(len(l) for l in self.labels)) + 1
        lines = [f"balanced_accuracy  {self.balanced_accuracy:.6f}",
                 f"cross_entropy      {self.cross_entropy:.6f}", "",
                 "true \\ pred".ljust(w + 2) + "".join(l.rjust(w) for l in self.labels) + "recall".rjust(9)]
        for lab, row, r in zip(self.labels, self.confusion, self.per_class_recall):
            rec = "n/a" if np.isnan(r) else f"{r:.4f}"
            lines.append(lab.ljust(w + 2) + "".join(str(v).rjust(w) for v in row) + rec.rjust(9))
        return "\n".join(lines)


def evaluate(model: AdditiveModel, dataset: Dataset) -> EvalReport:
    y = _check_labels(model, dataset)
    z = logits(model, _binned(model, dataset))
    pred = np.argmax(softmax(z), axis=1)
    cm = confusion_matrix(y, pred, model.n_classes)
    return EvalReport(
        balanced_accuracy=balanced_accuracy(cm),
        cross_entropy=mean_cross_entropy(z, y),
        per_class_recall=[float(r) for r in per_class_recall(cm)],
        confusion=cm.tolist(),
        labels=list(model.labels),
    )
