"""Multiclass additive models on bin grids."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import BinSpec, DataError, Dataset, FeatureSchema

FORMAT_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeFunction:
    """Contribution of feature ``feature`` to the logit of class ``klass``, one value per bin."""

    feature: int
    klass: int
    values: np.ndarray


class AdditiveModel:
    """Softmax GAM: ``logit_k(x) = intercept_k + sum_i shapes[i][bin_i(x), k]``.

    ``shapes[i]`` is a ``(bin_count_i, K)`` array. Instances are treated
    as immutable; every transformation returns a new model.
    """

    def __init__(self, bins: Sequence[BinSpec], shapes: Sequence[np.ndarray], intercepts=None,
                 labels: Sequence[str] | None = None):
        self.bins = tuple(bins)
        shapes = [np.array(s, dtype=float) for s in shapes]
        if len(shapes) != len(self.bins):
            raise ModelError("need one shape table per feature")
        K = shapes[0].shape[1] if shapes else (len(intercepts) if intercepts is not None else len(labels))
        for spec, s in zip(self.bins, shapes):
            if s.shape != (spec.bin_count, K):
                raise ModelError(f"feature {spec.name!r}: shape table {s.shape} != ({spec.bin_count}, {K})")
            if not np.all(np.isfinite(s)):
                raise ModelError(f"feature {spec.name!r}: non-finite shape values")
            s.setflags(write=False)
        self.shapes = tuple(shapes)
        icpt = np.zeros(K) if intercepts is None else np.array(intercepts, dtype=float)
        if icpt.shape != (K,) or not np.all(np.isfinite(icpt)):
            raise ModelError("intercepts must be K finite values")
        icpt.setflags(write=False)
        self.intercepts = icpt
        self.labels = tuple(str(l) for l in labels) if labels is not None else tuple(str(k) for k in range(K))
        if len(self.labels) != K:
            raise ModelError("label count does not match K")

    @classmethod
    def zeros(cls, bins: Sequence[BinSpec], n_classes: int, labels=None) -> "AdditiveModel":
        return cls(bins, [np.zeros((b.bin_count, n_classes)) for b in bins], np.zeros(n_classes), labels)

    @property
    def n_classes(self) -> int:
        return self.intercepts.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.bins)

    def shape(self, i: int, k: int) -> ShapeFunction:
        return ShapeFunction(i, k, self.shapes[i][:, k])

    def schema(self) -> FeatureSchema:
        return FeatureSchema(tuple(b.feature() for b in self.bins))

    def replace(self, shapes=None, intercepts=None) -> "AdditiveModel":
        return AdditiveModel(self.bins, self.shapes if shapes is None else shapes,
                             self.intercepts if intercepts is None else intercepts, self.labels)

    def __eq__(self, other):
        if not isinstance(other, AdditiveModel):
            return NotImplemented
        return (self.bins == other.bins and self.labels == other.labels
                and np.array_equal(self.intercepts, other.intercepts)
                and all(np.array_equal(a, b) for a, b in zip(self.shapes, other.shapes)))

    # serialization

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "K": self.n_classes,
            "d": self.n_features,
            "labels": list(self.labels),
            "features": [b.to_dict() for b in self.bins],
            "intercepts": self.intercepts.tolist(),
            # stored as shapes[i][k][bin]
            "shapes": [s.T.tolist() for s in self.shapes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdditiveModel":
        if d.get("version") != FORMAT_VERSION:
            raise ModelError(f"unsupported model version {d.get('version')!r}")
        bins = [BinSpec.from_dict(f) for f in d["features"]]
        K = int(d["K"])
        if len(bins) != int(d["d"]) or len(d["shapes"]) != len(bins):
            raise ModelError("feature count mismatch in model file")
        shapes = []
        for spec, s in zip(bins, d["shapes"]):
            arr = np.array(s, dtype=float).reshape(K, spec.bin_count)
            shapes.append(arr.T)
        return cls(bins, shapes, d["intercepts"], d["labels"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "AdditiveModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ModelError(f"{path}: malformed model file ({exc})") from None


def _check_rows(model: AdditiveModel, X: np.ndarray) -> None:
    if X.shape[-1] != model.n_features:
        raise ModelError(f"rows have {X.shape[-1]} features, model has {model.n_features}")
    for i, spec in enumerate(model.bins):
        col = X[..., i]
        if col.size and (col.min() < 0 or col.max() >= spec.bin_count):
            raise ModelError(f"feature {spec.name!r}: bin index out of range")


def logits(model: AdditiveModel, rows) -> np.ndarray:
    """Class logits for one binned row (shape ``(d,)``) or a batch ``(N, d)``."""
    X = np.asarray(rows, dtype=np.intp)
    _check_rows(model, X)
    out = np.broadcast_to(model.intercepts, X.shape[:-1] + (model.n_classes,)).copy()
    for i, s in enumerate(model.shapes):
        out += s[X[..., i]]
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    m = z.max(axis=-1, keepdims=True)
    return z - m - np.log(np.exp(z - m).sum(axis=-1, keepdims=True))


def predict_proba(model: AdditiveModel, rows) -> np.ndarray:
    return softmax(logits(model, rows))


def _binned(model: AdditiveModel, dataset: Dataset) -> np.ndarray:
    if dataset.binned is None:
        dataset = dataset.with_bins(model.bins)
    elif dataset.bins is not None and tuple(dataset.bins) != model.bins:
        raise ModelError("dataset was binned with different bin specs than the model")
    return dataset.binned


def _check_labels(model: AdditiveModel, dataset: Dataset) -> np.ndarray:
    if dataset.labels is None:
        raise DataError("dataset has no labels")
    if dataset.n_classes != model.n_classes:
        raise ModelError(f"dataset has {dataset.n_classes} classes, model has {model.n_classes}")
    return dataset.labels


def mean_cross_entropy(z: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        raise DataError("cross entropy of an empty dataset")
    return float(-log_softmax(z)[np.arange(len(y)), y].mean())


def cross_entropy(model: AdditiveModel, dataset: Dataset) -> float:
    """Mean multiclass cross entropy over the dataset's rows."""
    y = _check_labels(model, dataset)
    return mean_cross_entropy(logits(model, _binned(model, dataset)), y)


def quadratic_variation(shape, binspec: BinSpec | None = None) -> float:
    """Sum of squared jumps between consecutive bins.

    Shapes are piecewise constant, so the interior-derivative integral of
    the continuous definition is zero and only jump terms remain.
    """
    v = shape.values if isinstance(shape, ShapeFunction) else np.asarray(shape, dtype=float)
    if binspec is not None and v.shape[0] != binspec.bin_count:
        raise ModelError("shape length does not match bin count")
    return float(np.sum(np.diff(v, axis=0) ** 2))


def total_quadratic_variation(model: AdditiveModel) -> float:
    return float(sum(np.sum(np.diff(s, axis=0) ** 2) for s in model.shapes))


def add_offsets(model: AdditiveModel, offsets: Sequence[np.ndarray]) -> AdditiveModel:
    """Add ``offsets[i]`` (one value per bin) to every class's shape for feature ``i``."""
    if len(offsets) != model.n_features:
        raise ModelError("need one offset vector per feature")
    new = []
    for spec, s, g in zip(model.bins, model.shapes, offsets):
        g = np.asarray(g, dtype=float)
        if g.shape != (spec.bin_count,):
            raise ModelError(f"feature {spec.name!r}: offset length {g.shape} != {spec.bin_count}")
        new.append(s + g[:, None])
    return model.replace(shapes=new)


def delta_logits(model: AdditiveModel, row_a, row_b, feature: int) -> np.ndarray:
    """Per-class logit change when ``row_a`` moves to ``row_b`` along ``feature`` only."""
    a = np.asarray(row_a, dtype=np.intp)
    b = np.asarray(row_b, dtype=np.intp)
    _check_rows(model, np.stack([a, b]))
    other = np.arange(model.n_features) != feature
    if np.any(a[other] != b[other]):
        raise ModelError(f"rows differ outside feature {feature}")
    s = model.shapes[feature]
    return s[b[feature]] - s[a[feature]]


def rebase_to_class(model: AdditiveModel, base: int) -> AdditiveModel:
    """Shift shapes so class ``base`` is identically zero (logits relative to ``base``)."""
    if not 0 <= base < model.n_classes:
        raise ModelError(f"invalid base class {base}")
    return add_offsets(model, [-s[:, base] for s in model.shapes]).replace(
        intercepts=model.intercepts - model.intercepts[base])


def bin_representatives(spec: BinSpec) -> np.ndarray:
    """Default representative value per bin: interval midpoint, or category position for discrete features."""
    if spec.discrete:
        return np.arange(spec.bin_count, dtype=float)
    reps = np.empty(spec.bin_count)
    for b in range(spec.bin_count):
        lo, hi = spec.bin_bounds(b)
        if not np.isfinite(lo):
            lo = hi
        if not np.isfinite(hi):
            hi = lo
        reps[b] = 0.0 if not np.isfinite(lo) else (lo + hi) / 2
    return reps


def from_linear(weights, bias, bins: Sequence[BinSpec], representatives=None, labels=None) -> AdditiveModel:
    """Discretize a multiclass linear model: ``shape[i][b, k] = weights[i, k] * rep_i[b]``."""
    W = np.asarray(weights, dtype=float)
    bias = np.asarray(bias, dtype=float)
    d = len(bins)
    if W.ndim != 2 or W.shape[0] != d or bias.shape != (W.shape[1],):
        raise ModelError(f"weights must be (d={d}, K) and bias (K,)")
    if representatives is None:
        representatives = [bin_representatives(b) for b in bins]
    if len(representatives) != d:
        raise ModelError("need representatives for every feature")
    shapes = []
    for spec, w, r in zip(bins, W, representatives):
        r = np.asarray(r, dtype=float)
        if r.shape != (spec.bin_count,):
            raise ModelError(f"feature {spec.name!r}: {r.size} representatives for {spec.bin_count} bins")
        shapes.append(np.outer(r, w))
    return AdditiveModel(bins, shapes, bias, labels)
