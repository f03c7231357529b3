"""Tabular data ingestion, feature schemas and quantile binning."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
ORDINAL = "ordinal"
KINDS = (CONTINUOUS, CATEGORICAL, ORDINAL)

DEFAULT_MAX_BINS = 256


class DataError(ValueError):
    """Raised for malformed or incompatible input data."""


class SchemaError(DataError):
    pass


class ParseError(DataError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = CONTINUOUS
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            if self.categories:
                raise SchemaError(f"feature {self.name!r}: continuous features take no categories")
        else:
            if not self.categories:
                raise SchemaError(f"feature {self.name!r}: empty category list")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"feature {self.name!r}: duplicate categories")

    @property
    def discrete(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, i):
        return self.features[i]

    def to_dict(self) -> dict:
        out = []
        for f in self.features:
            entry = {"name": f.name, "kind": f.kind}
            if f.discrete:
                entry["categories"] = list(f.categories)
            out.append(entry)
        return {"features": out}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(tuple(
            Feature(e["name"], e.get("kind", CONTINUOUS), tuple(str(c) for c in e.get("categories", ())))
            for e in d["features"]
        ))


@dataclass(frozen=True)
class BinSpec:
    """Discretization of one feature.

    Continuous features are split by strictly increasing ``cuts`` into
    ``len(cuts) + 1`` half-open intervals ``[c_{j-1}, c_j)``; values below
    the first cut land in bin 0 and values at or above the last cut in the
    final bin. ``low``/``high`` record the observed training range.
    Discrete features get one bin per category in declared order.
    """

    name: str
    kind: str
    cuts: tuple[float, ...] = ()
    categories: tuple[str, ...] = ()
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        if self.kind == CONTINUOUS:
            c = np.asarray(self.cuts, dtype=float)
            if c.size and (not np.all(np.isfinite(c)) or np.any(np.diff(c) <= 0)):
                raise SchemaError(f"feature {self.name!r}: cut points must be finite and strictly increasing")
        elif not self.categories:
            raise SchemaError(f"feature {self.name!r}: discrete bin spec needs categories")

    @property
    def discrete(self) -> bool:
        return self.kind != CONTINUOUS

    @property
    def bin_count(self) -> int:
        return len(self.categories) if self.discrete else len(self.cuts) + 1

    @property
    def n_edges(self) -> int:
        return self.bin_count - 1

    def assign(self, values) -> np.ndarray:
        """Map raw values to bin indices."""
        if self.discrete:
            lookup = {c: j for j, c in enumerate(self.categories)}
            out = np.empty(len(values), dtype=np.intp)
            for n, v in enumerate(values):
                try:
                    out[n] = lookup[str(v)]
                except KeyError:
                    raise SchemaError(f"feature {self.name!r}: unseen category {v!r}") from None
            return out
        x = np.asarray(values, dtype=float)
        return np.searchsorted(np.asarray(self.cuts, dtype=float), x, side="right").astype(np.intp)

    def bin_bounds(self, b: int) -> tuple[float, float]:
        """Interval ``[low, high)`` of continuous bin ``b`` (clamped to the training range)."""
        lo = self.cuts[b - 1] if b > 0 else (self.low if self.low is not None else -math.inf)
        hi = self.cuts[b] if b < len(self.cuts) else (self.high if self.high is not None else math.inf)
        return lo, hi

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.discrete:
            d["categories"] = list(self.categories)
        else:
            d["cuts"] = [float(c) for c in self.cuts]
            if self.low is not None:
                d["range"] = [float(self.low), float(self.high)]
        d["bin_count"] = self.bin_count
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BinSpec":
        kind = d.get("kind", CONTINUOUS)
        if kind == CONTINUOUS:
            low, high = d.get("range", (None, None))
            spec = cls(d["name"], kind, cuts=tuple(float(c) for c in d.get("cuts", ())), low=low, high=high)
        else:
            spec = cls(d["name"], kind, categories=tuple(str(c) for c in d["categories"]))
        if "bin_count" in d and d["bin_count"] != spec.bin_count:
            raise SchemaError(f"feature {spec.name!r}: bin_count {d['bin_count']} disagrees with its cuts/categories")
        return spec

    def feature(self) -> Feature:
        return Feature(self.name, self.kind, self.categories)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column-typed dataset.

    ``columns`` holds one raw array per feature (float for continuous,
    str for discrete). ``labels`` are 0-based class indices into
    ``label_names``; ``binned`` is an ``(N, d)`` index matrix once bins
    have been applied.
    """

    schema: FeatureSchema
    columns: tuple[np.ndarray, ...]
    labels: np.ndarray | None
    label_names: tuple[str, ...]
    binned: np.ndarray | None = None
    bins: tuple[BinSpec, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.columns) != len(self.schema):
            raise DataError("column count does not match schema")
        n = {len(c) for c in self.columns}
        if self.labels is not None:
            n.add(len(self.labels))
        if len(n) > 1:
            raise DataError("columns have inconsistent lengths")
        if self.labels is not None and self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= len(self.label_names)
        ):
            raise DataError("labels out of range")
        if self.binned is not None:
            if self.binned.shape != (self.n_rows, self.n_features):
                raise DataError("binned matrix has the wrong shape")
            for i, spec in enumerate(self.bins):
                col = self.binned[:, i]
                if col.size and (col.min() < 0 or col.max() >= spec.bin_count):
                    raise DataError(f"feature {spec.name!r}: bin index out of range")

    @property
    def n_rows(self) -> int:
        if self.columns:
            return len(self.columns[0])
        return 0 if self.labels is None else len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def __len__(self):
        return self.n_rows

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            self.schema,
            tuple(c[rows] for c in self.columns),
            None if self.labels is None else self.labels[rows],
            self.label_names,
            None if self.binned is None else self.binned[rows],
            self.bins,
        )

    def with_bins(self, bins: Sequence[BinSpec]) -> "Dataset":
        bins = tuple(bins)
        if [b.name for b in bins] != self.schema.names:
            raise SchemaError("bin specs do not match the dataset's features")
        if self.n_features:
            binned = np.column_stack([b.assign(c) for b, c in zip(bins, self.columns)])
        else:
            binned = np.zeros((self.n_rows, 0), dtype=np.intp)
        return Dataset(self.schema, self.columns, self.labels, self.label_names, binned, bins)

    def raw_rows(self) -> list[list]:
        return [list(r) for r in zip(*self.columns)]


def from_arrays(X, y=None, names=None, kinds=None, label_names=None) -> Dataset:
    """Build a dataset from in-memory arrays, remapping labels by first appearance."""
    X = np.asarray(X, dtype=object) if kinds and any(k != CONTINUOUS for k in kinds) else np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("X must be two-dimensional")
    d = X.shape[1]
    names = list(names) if names is not None else [f"x{i}" for i in range(d)]
    kinds = list(kinds) if kinds is not None else [CONTINUOUS] * d
    feats, cols = [], []
    for j in range(d):
        if kinds[j] == CONTINUOUS:
            cols.append(np.asarray(X[:, j], dtype=float))
            feats.append(Feature(names[j]))
        else:
            col = np.asarray([str(v) for v in X[:, j]], dtype=object)
            cols.append(col)
            feats.append(Feature(names[j], kinds[j], tuple(sorted(set(col)))))
    labels, lnames = None, tuple(label_names or ())
    if y is not None:
        labels, lnames = _remap_labels([str(v) for v in y], label_names)
    return Dataset(FeatureSchema(tuple(feats)), tuple(cols), labels, lnames)


def _remap_labels(raw: Sequence[str], known=None):
    if known is not None:
        index = {str(n): k for k, n in enumerate(known)}
        try:
            return np.array([index[v] for v in raw], dtype=np.intp), tuple(str(n) for n in known)
        except KeyError as exc:
            raise SchemaError(f"unknown label {exc.args[0]!r}") from None
    index: dict[str, int] = {}
    out = np.empty(len(raw), dtype=np.intp)
    for n, v in enumerate(raw):
        out[n] = index.setdefault(v, len(index))
    return out, tuple(index)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    return rows[0], rows[1:]


def infer_schema(path, label_column: str | None = None) -> FeatureSchema:
    """Infer a schema: numeric columns are continuous, anything else categorical (lexicographic order)."""
    header, body = _read_csv(path)
    feats = []
    for j, name in enumerate(header):
        if name == label_column:
            continue
        cells = [r[j] for r in body if j < len(r)]
        try:
            for c in cells:
                float(c)
            feats.append(Feature(name))
        except ValueError:
            feats.append(Feature(name, CATEGORICAL, tuple(sorted(set(cells)))))
    return FeatureSchema(tuple(feats))


def load_csv(path, schema: FeatureSchema, label_column: str | None, label_names=None) -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    Only schema columns (and the label column) are read; other columns are
    ignored. Labels map to indices by first appearance unless
    ``label_names`` fixes the order. Pass ``label_column=None`` for
    unlabelled data.
    """
    path = Path(path)
    header, body = _read_csv(path)
    if not body:
        raise DataError(f"{path}: empty dataset (header only)")
    pos = {name: j for j, name in enumerate(header)}
    missing = [f.name for f in schema if f.name not in pos]
    if label_column is not None and label_column not in pos:
        missing.append(label_column)
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{r}: expected {len(header)} fields, got {len(row)}")

    cols = []
    for f in schema:
        j = pos[f.name]
        if f.discrete:
            allowed = set(f.categories)
            col = []
            for r, row in enumerate(body, start=2):
                v = row[j]
                if v not in allowed:
                    raise SchemaError(f"{path}:{r}: column {f.name!r}: unseen category {v!r}")
                col.append(v)
            cols.append(np.asarray(col, dtype=object))
        else:
            col = np.empty(len(body))
            for r, row in enumerate(body):
                try:
                    col[r] = float(row[j])
                except ValueError:
                    raise ParseError(f"{path}:{r + 2}: column {f.name!r}: cannot parse {row[j]!r} as a number") from None
                if not math.isfinite(col[r]):
                    raise ParseError(f"{path}:{r + 2}: column {f.name!r}: non-finite value {row[j]!r}")
            cols.append(col)

    labels, lnames = None, tuple(str(n) for n in (label_names or ()))
    if label_column is not None:
        labels, lnames = _remap_labels([row[pos[label_column]] for row in body], label_names)
    return Dataset(schema, tuple(cols), labels, lnames)


def _quantile_cuts(values: np.ndarray, max_bins: int) -> tuple[float, ...]:
    x = np.sort(values)
    uniq, counts = np.unique(x, return_counts=True)
    if uniq.size < 2:
        return ()
    cum = np.cumsum(counts)[:-1]  # rows at or below each distinct-value boundary
    n = x.size
    chosen = set()
    for j in range(1, max_bins):
        # integer arithmetic so exact ties resolve to the lower boundary
        t = int(np.argmin(np.abs(cum * max_bins - j * n)))
        chosen.add(t)
    return tuple(float((uniq[t] + uniq[t + 1]) / 2) for t in sorted(chosen))


def build_bins(dataset: Dataset, max_bins: int = DEFAULT_MAX_BINS) -> tuple[BinSpec, ...]:
    """Equi-frequency cut points for continuous features, one bin per category otherwise.

    Each cut sits midway between the two distinct values whose cumulative
    count is closest to the target rank ``j * N / max_bins``; duplicates
    collapse so there are at most ``max_bins`` bins.
    """
    if dataset.n_rows == 0:
        raise DataError("cannot build bins for an empty dataset")
    specs = []
    for f, col in zip(dataset.schema, dataset.columns):
        if f.discrete:
            specs.append(BinSpec(f.name, f.kind, categories=f.categories))
            continue
        if max_bins < 2:
            raise ValueError("max_bins must be at least 2 for continuous features")
        specs.append(BinSpec(f.name, CONTINUOUS, cuts=_quantile_cuts(col, max_bins),
                             low=float(col.min()), high=float(col.max())))
    return tuple(specs)


def _partition(n: int, fractions, seed) -> list[np.ndarray]:
    fractions = tuple(float(f) for f in fractions)
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be positive and sum to 1")
    sizes = [int(math.floor(f * n + 1e-9)) for f in fractions]
    sizes[0] += n - sum(sizes)
    perm = np.random.default_rng(seed).permutation(n)
    out, start = [], 0
    for s in sizes:
        out.append(np.sort(perm[start:start + s]))
        start += s
    return out


def split(dataset: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    """Random disjoint train/valid/test partition; sizes floor-rounded, remainder to train."""
    if dataset.n_rows < 3:
        raise DataError("need at least 3 rows to split")
    return tuple(dataset.take(idx) for idx in _partition(dataset.n_rows, fractions, seed))


def holdout(dataset: Dataset, valid_fraction: float, seed: int = 0):
    """Two-way train/valid partition used when no validation file is given."""
    if dataset.n_rows < 2:
        raise DataError("need at least 2 rows for a validation holdout")
    tr, va = _partition(dataset.n_rows, (1 - valid_fraction, valid_fraction), seed)
    if va.size == 0:
        tr, va = tr[1:], tr[:1]
    return dataset.take(tr), dataset.take(va)


def class_proportions(dataset: Dataset) -> np.ndarray:
    if dataset.labels is None or dataset.n_rows == 0:
        raise DataError("class proportions need a non-empty labelled dataset")
    counts = np.bincount(dataset.labels, minlength=dataset.n_classes).astype(float)
    return counts / counts.sum()


def normalized_entropy(proportions) -> float:
    """Shannon entropy divided by ``log K`` (1 = balanced, 0 = single class)."""
    p = np.asarray(proportions, dtype=float)
    if p.size < 2:
        raise ValueError("normalized entropy needs at least 2 classes")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    nz = p[p > 0]
    h = float(-(nz * np.log(nz)).sum() / math.log(p.size))
    return min(max(h, 0.0), 1.0)


def summarize(dataset: Dataset) -> dict:
    props = class_proportions(dataset)
    if props.size < 2:
        warnings.warn("single-class dataset; normalized entropy reported as 0", stacklevel=2)
        h = 0.0
    else:
        h = normalized_entropy(props)
    return {
        "classes": dataset.n_classes,
        "features": dataset.n_features,
        "rows": dataset.n_rows,
        "labels": list(dataset.label_names),
        "proportions": [float(p) for p in props],
        "entropy": h,
    }
