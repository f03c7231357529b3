"""Cyclic gradient boosting of bagged shallow trees for multiclass GAMs."""

from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _kernels
from .data import DataError, Dataset
from .gam import AdditiveModel, _binned, logits, mean_cross_entropy, softmax

log = logging.getLogger(__name__)

THREADS_ENV = "MCGAM_THREADS"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    leaves: int = 3
    bags: int = 100
    max_iters: int = 5000
    patience: int = 50
    seed: int = 0
    denominator_floor: float = 1e-12
    gamma_cap: float = 10.0
    n_threads: int | None = None

    def __post_init__(self):
        if not 0 <= self.learning_rate <= 1:
            raise ValueError("learning_rate must be in [0, 1]")
        if self.leaves < 1:
            raise ValueError("leaves must be >= 1")
        if self.bags < 1:
            raise ValueError("bags must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.denominator_floor <= 0 or self.gamma_cap <= 0:
            raise ValueError("denominator_floor and gamma_cap must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def threads(self) -> int:
        if self.n_threads is not None:
            return max(1, int(self.n_threads))
        env = os.environ.get(THREADS_ENV)
        return max(1, int(env)) if env else 1


@dataclass
class Tree:
    """Single-feature tree: ``regions`` are half-open bin intervals ``(lo, hi)`` covering all bins."""

    feature: int
    regions: list[tuple[int, int]]
    values: np.ndarray | None = None  # (n_leaves, K)

    def bin_values(self, n_bins: int) -> np.ndarray:
        out = np.empty((n_bins, self.values.shape[1]))
        for (lo, hi), v in zip(self.regions, self.values):
            out[lo:hi] = v
        return out


def pseudo_residuals(model: AdditiveModel, dataset: Dataset) -> np.ndarray:
    """Negative functional gradient of the cross entropy: ``1{y = j} - P(j | x)``."""
    if dataset.labels is None:
        raise DataError("dataset has no labels")
    return _residuals(logits(model, _binned(model, dataset)), dataset.labels)


def _residuals(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    r = -softmax(z)
    r[np.arange(len(y)), y] += 1.0
    return r


def _best_split(counts, sums, lo, hi):
    """Best boundary ``t`` splitting ``[lo, hi)`` into ``[lo, t)``/``[t, hi)`` and its gain."""
    if hi - lo < 2:
        return -np.inf, None
    cw = np.cumsum(counts[lo:hi])[:-1]
    cs = np.cumsum(sums[lo:hi], axis=0)[:-1]
    tw = cw[-1] + counts[hi - 1]
    ts = cs[-1] + sums[hi - 1]
    rw = tw - cw
    ok = (cw > 0) & (rw > 0)
    if not ok.any():
        return -np.inf, None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = (cs ** 2).sum(axis=1) / cw + ((ts - cs) ** 2).sum(axis=1) / rw - (ts ** 2).sum() / tw
    gain = np.where(ok, gain, -np.inf)
    j = int(np.argmax(gain))
    return float(gain[j]), lo + 1 + j


def grow_regions(counts, sums, sumsq, leaves: int) -> list[tuple[int, int]]:
    """Greedy best-first growth on an ordered bin histogram.

    Repeatedly splits the leaf whose best boundary gives the largest
    reduction in summed within-leaf squared deviation (all classes), until
    ``leaves`` leaves exist or no split reduces it.
    """
    n_bins = len(counts)
    regions = [(0, n_bins)]
    cand = {}
    while len(regions) < leaves:
        best = None
        for reg in regions:
            if reg not in cand:
                lo, hi = reg
                gain, t = _best_split(counts, sums, lo, hi)
                tol = 1e-12 * float(sumsq[lo:hi].sum())
                cand[reg] = (gain, t) if gain > tol else (-np.inf, None)
            gain, t = cand[reg]
            if t is not None and (best is None or gain > best[0]):
                best = (gain, t, reg)
        if best is None:
            break
        _, t, (lo, hi) = best
        k = regions.index((lo, hi))
        regions[k:k + 1] = [(lo, t), (t, hi)]
    return regions


def fit_tree(bin_indices, residuals, leaves: int, n_bins: int | None = None, feature: int = 0) -> Tree:
    """Fit leaf regions on one feature's bins to a ``(n, K)`` residual matrix."""
    b = np.asarray(bin_indices, dtype=np.intp)
    r = np.atleast_2d(np.asarray(residuals, dtype=float))
    if r.shape[0] != b.shape[0] and r.shape[1] == b.shape[0]:
        r = r.T
    if b.size == 0:
        raise DataError("cannot fit a tree on an empty sample")
    n_bins = int(b.max()) + 1 if n_bins is None else n_bins
    counts, s, _, q = _kernels.bag_histogram(b, r, np.arange(b.size), n_bins)
    return Tree(feature, grow_regions(counts, s, q, leaves))


def _gamma(s, h, K, floor, cap=None):
    g = (K - 1) / K * s / np.maximum(h, floor)
    return g if cap is None else np.clip(g, -cap, cap)


def leaf_gamma(residuals, K: int | None = None, floor: float = 1e-12, cap: float | None = None) -> np.ndarray:
    """Diagonal-Newton leaf values ``(K-1)/K * sum(r) / max(sum |r|(1-|r|), floor)`` per class."""
    r = np.atleast_2d(np.asarray(residuals, dtype=float))
    K = r.shape[1] if K is None else K
    a = np.abs(r)
    return _gamma(r.sum(axis=0), (a * (1 - a)).sum(axis=0), K, floor, cap)


def bag_rng(seed: int, cycle: int, feature: int, bag: int) -> np.random.Generator:
    """Independent stream for one bag, so results do not depend on execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(cycle, feature, bag)))


def bootstrap_sample(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, n, size=n)


def _bag_values(bins_col, resid, n_bins, config: TrainConfig, cycle, feature, bag):
    rng = bag_rng(config.seed, cycle, feature, bag)
    sample = bootstrap_sample(len(bins_col), rng)
    counts, s, h, q = _kernels.bag_histogram(bins_col, resid, sample, n_bins)
    regions = grow_regions(counts, s, q, config.leaves)
    K = resid.shape[1]
    out = np.empty((n_bins, K))
    for lo, hi in regions:
        out[lo:hi] = _gamma(s[lo:hi].sum(axis=0), h[lo:hi].sum(axis=0), K,
                            config.denominator_floor, config.gamma_cap)
    return out


def _feature_update(bins_col, resid, n_bins, config, cycle, feature, pool=None):
    def one(b):
        return _bag_values(bins_col, resid, n_bins, config, cycle, feature, b)

    bags = pool.map(one, range(config.bags)) if pool is not None else map(one, range(config.bags))
    total = np.zeros((n_bins, resid.shape[1]))
    for v in bags:  # bag order, independent of scheduling
        total += v
    return config.learning_rate * total / config.bags


def boost_feature_step(model: AdditiveModel, dataset: Dataset, feature: int, residuals,
                       config: TrainConfig, cycle: int = 1) -> np.ndarray:
    """Bag-averaged, learning-rate-scaled update ``(bin_count, K)`` for one feature's shapes."""
    X = _binned(model, dataset)
    resid = np.ascontiguousarray(residuals, dtype=float)
    n_bins = model.bins[feature].bin_count
    return _feature_update(np.ascontiguousarray(X[:, feature]), resid, n_bins, config, cycle, feature)


@dataclass
class TrainingLog:
    config: TrainConfig
    rows: list[dict] = field(default_factory=list)
    best_cycle: int = 0
    stopped_early: bool = False

    def header_lines(self) -> list[str]:
        c = self.config
        return [f"# learning_rate={c.learning_rate!r} leaves={c.leaves} bags={c.bags} "
                f"iters={c.max_iters} patience={c.patience} seed={c.seed}"]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in self.header_lines():
                fh.write(line + "\n")
            w = csv.DictWriter(fh, fieldnames=["cycle", "train_loss", "valid_loss", "seconds"])
            w.writeheader()
            for row in self.rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _check_pair(train: Dataset, valid: Dataset):
    if train.n_rows == 0:
        raise DataError("empty training set")
    if valid.n_rows == 0:
        raise DataError("empty validation set")
    if train.binned is None or valid.binned is None:
        raise DataError("datasets must be binned before training")
    if tuple(train.bins) != tuple(valid.bins):
        raise DataError("training and validation sets use different bins")
    if train.labels is None or valid.labels is None:
        raise DataError("training needs labelled data")
    if train.label_names != valid.label_names:
        raise DataError("training and validation label sets differ")


def train(train: Dataset, valid: Dataset, config: TrainConfig = TrainConfig()) -> tuple[AdditiveModel, TrainingLog]:
    """Fit a multiclass GAM by cyclic boosting; returns the best-validation snapshot and the log."""
    _check_pair(train, valid)
    bins = tuple(train.bins)
    K = train.n_classes
    if K < 2:
        raise DataError("training needs at least 2 classes")
    Xt, yt = train.binned, train.labels
    Xv, yv = valid.binned, valid.labels
    cols = [np.ascontiguousarray(Xt[:, i]) for i in range(train.n_features)]
    shapes = [np.zeros((b.bin_count, K)) for b in bins]
    Ft = np.zeros((train.n_rows, K))
    Fv = np.zeros((valid.n_rows, K))

    trace = TrainingLog(config)
    t0 = time.perf_counter()
    best = mean_cross_entropy(Fv, yv)
    best_shapes = [s.copy() for s in shapes]
    trace.rows.append({"cycle": 0, "train_loss": mean_cross_entropy(Ft, yt), "valid_loss": best, "seconds": 0.0})

    n_threads = config.threads()
    pool = ThreadPoolExecutor(n_threads) if n_threads > 1 else None
    try:
        for m in range(1, config.max_iters + 1):
            for i, col in enumerate(cols):
                resid = _residuals(Ft, yt)
                upd = _feature_update(col, resid, bins[i].bin_count, config, m, i, pool)
                shapes[i] += upd
                Ft += upd[col]
                Fv += upd[Xv[:, i]]
            vl = mean_cross_entropy(Fv, yv)
            trace.rows.append({"cycle": m, "train_loss": mean_cross_entropy(Ft, yt), "valid_loss": vl,
                               "seconds": time.perf_counter() - t0})
            if vl < best:
                best, trace.best_cycle = vl, m
                best_shapes = [s.copy() for s in shapes]
            elif m - trace.best_cycle >= config.patience:
                trace.stopped_early = True
                log.info("early stop at cycle %d (best %d)", m, trace.best_cycle)
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return AdditiveModel(bins, best_shapes, np.zeros(K), train.label_names), trace
