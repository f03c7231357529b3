"""Additive post-processing into the canonical, axiom-satisfying equivalent model.

For every feature ``i`` and edge ``e`` (the boundary between bins ``s`` and
``s + 1``) a single shift ``dg`` is added to all K class jumps. It is the
minimizer of ``sum_k (jump_k + dg)**2`` subject to each shifted jump
having the same sign as the expected change in that class's log
probability across the edge. The per-feature offsets are then recovered by
cumulative summation, so predictions never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DataError, Dataset
from .gam import AdditiveModel, ModelError, add_offsets, log_softmax, logits, total_quadratic_variation

AXIOM_TOL = 1e-9
RANK_TOL = 1e-9


class ConsistencyError(ModelError):
    """Jump and log-probability rankings disagree: the inputs come from different models or data."""


def edge_jumps(model: AdditiveModel, feature: int) -> np.ndarray:
    """``(bin_count - 1, K)`` jumps ``values[s + 1] - values[s]``."""
    return np.diff(model.shapes[feature], axis=0)


def _binned(model, dataset):
    if dataset.n_rows == 0:
        raise DataError("empty dataset")
    if dataset.binned is None or tuple(dataset.bins or ()) != model.bins:
        dataset = dataset.with_bins(model.bins)
    return dataset.binned


def _feature_stats(model: AdditiveModel, X: np.ndarray, feature: int, F: np.ndarray | None = None):
    """p-bar per edge for one feature, plus support counts and fallback flags."""
    if F is None:
        F = logits(model, X)
    s = model.shapes[feature]
    col = X[:, feature]
    jumps = np.diff(s, axis=0)
    n_edges = jumps.shape[0]
    K = model.n_classes
    pbar = np.zeros((n_edges, K))
    support = np.zeros(n_edges, dtype=np.int64)
    fallback = np.zeros(n_edges, dtype=bool)
    order = np.argsort(col, kind="stable")
    bounds = np.searchsorted(col[order], np.arange(s.shape[0] + 1))
    for e in range(n_edges):
        rows = order[bounds[e]:bounds[e + 1]]
        if rows.size:
            left = F[rows]
        else:
            # interventional estimate: every row moved to the left bin
            left = F - s[col] + s[e]
            fallback[e] = True
        support[e] = rows.size
        right = left + jumps[e]
        pbar[e] = (log_softmax(right) - log_softmax(left)).mean(axis=0)
    return jumps, pbar, support, fallback


def expected_log_prob_gradient(model: AdditiveModel, dataset: Dataset, feature: int, edge: int) -> np.ndarray:
    """Mean change of ``log P_k`` when rows at the edge's left bin move to its right bin.

    Rows are those whose bin for ``feature`` equals ``edge``; if there are
    none the whole dataset is moved to that bin instead.
    """
    X = _binned(model, dataset)
    n_edges = model.bins[feature].n_edges
    if not 0 <= edge < n_edges:
        raise ModelError(f"feature {feature} has no edge {edge}")
    return _feature_stats(model, X, feature)[1][edge]


def check_rank_consistency(jumps, pbar, tol: float = RANK_TOL) -> None:
    j = np.asarray(jumps, dtype=float)
    p = np.asarray(pbar, dtype=float)
    dj = j[:, None] - j[None, :]
    dp = p[:, None] - p[None, :]
    bad = (dj > tol) & (dp < -tol)
    if bad.any():
        a, b = np.argwhere(bad)[0]
        raise ConsistencyError(
            f"rank mismatch: jump[{a}] > jump[{b}] but pbar[{a}] < pbar[{b}] "
            f"({j[a]:.6g} vs {j[b]:.6g}; {p[a]:.6g} vs {p[b]:.6g})")


def edge_bounds(jumps, pbar) -> tuple[float, float]:
    """Feasible interval for the shift: classes with ``pbar >= 0`` must end non-negative, the rest negative."""
    j = np.asarray(jumps, dtype=float)
    p = np.asarray(pbar, dtype=float)
    pos = p >= 0
    lower = -j[pos].min() if pos.any() else -np.inf
    upper = -j[~pos].max() if (~pos).any() else np.inf
    return float(lower), float(upper)


def solve_edge(jumps, pbar, tol: float = RANK_TOL) -> float:
    """Closed-form shift for one edge: ``-mean(jumps)`` clipped to the feasible interval."""
    j = np.asarray(jumps, dtype=float)
    p = np.asarray(pbar, dtype=float)
    if j.shape != p.shape or j.ndim != 1:
        raise ValueError("jumps and pbar must be K-vectors")
    check_rank_consistency(j, p, tol)
    if not p.any():  # probabilities do not move across this edge: no sign constraint
        return float(-j.mean())
    lower, upper = edge_bounds(j, p)
    return float(max(lower, min(-j.mean(), upper)))


@dataclass
class EdgeEntry:
    feature: int
    edge: int
    klass: int
    jump: float
    pbar: float
    product: float
    violation: bool


@dataclass
class AxiomReport:
    tolerance: float
    entries: list[EdgeEntry] = field(default_factory=list)
    qv_before: float = 0.0
    qv_after: float = 0.0
    max_shift: float = 0.0
    fallback_edges: list[tuple[int, int]] = field(default_factory=list)
    feature_names: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(e.violation for e in self.entries)

    @property
    def n_checked(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "checked": self.n_checked,
            "violations": self.violations,
            "qv_before": self.qv_before,
            "qv_after": self.qv_after,
            "max_shift": self.max_shift,
            "fallback_edges": [list(e) for e in self.fallback_edges],
            "entries": [
                {"feature": self.feature_names[e.feature] if self.feature_names else e.feature,
                 "edge": e.edge,
                 "class": self.labels[e.klass] if self.labels else e.klass,
                 "jump": e.jump, "pbar": e.pbar, "product": e.product, "violation": e.violation}
                for e in self.entries
            ],
        }

    def to_table(self, only_violations: bool = False) -> str:
        head = f"{'feature':<16} {'edge':>5} {'class':<12} {'jump':>13} {'pbar':>13} {'product':>13}  flag"
        lines = [head, "-" * len(head)]
        for e in self.entries:
            if only_violations and not e.violation:
                continue
            fname = self.feature_names[e.feature] if self.feature_names else str(e.feature)
            cname = self.labels[e.klass] if self.labels else str(e.klass)
            lines.append(f"{fname:<16} {e.edge:>5} {cname:<12} {e.jump:>13.6g} {e.pbar:>13.6g} "
                         f"{e.product:>13.6g}  {'VIOLATION' if e.violation else 'ok'}")
        lines.append(f"checked={self.n_checked} violations={self.violations} "
                     f"qv_before={self.qv_before:.6g} qv_after={self.qv_after:.6g} max_shift={self.max_shift:.3g}")
        return "\n".join(lines)


def _report(model, X, tolerance, F=None) -> AxiomReport:
    rep = AxiomReport(tolerance, feature_names=[b.name for b in model.bins], labels=list(model.labels))
    F = logits(model, X) if F is None else F
    for i in range(model.n_features):
        jumps, pbar, _, fb = _feature_stats(model, X, i, F)
        prod = jumps * pbar
        for e in range(jumps.shape[0]):
            if fb[e]:
                rep.fallback_edges.append((i, e))
            for k in range(model.n_classes):
                rep.entries.append(EdgeEntry(i, e, k, float(jumps[e, k]), float(pbar[e, k]),
                                             float(prod[e, k]), bool(prod[e, k] < -tolerance)))
    rep.qv_before = rep.qv_after = total_quadratic_variation(model)
    return rep


def verify_axioms(model: AdditiveModel, dataset: Dataset, tolerance: float = AXIOM_TOL) -> AxiomReport:
    """Evaluate the sign condition ``jump_k * pbar_k >= -tolerance`` on every feature, edge and class."""
    return _report(model, _binned(model, dataset), tolerance)


def canonical_offsets(model: AdditiveModel, dataset: Dataset) -> tuple[list[np.ndarray], float]:
    """Per-feature offsets mapping ``model`` to its canonical form, and the largest edge shift."""
    X = _binned(model, dataset)
    F = logits(model, X)
    offsets, max_shift = [], 0.0
    for i, spec in enumerate(model.bins):
        jumps, pbar, _, _ = _feature_stats(model, X, i, F)
        dg = np.array([solve_edge(jumps[e], pbar[e]) for e in range(jumps.shape[0])])
        if dg.size:
            max_shift = max(max_shift, float(np.abs(dg).max()))
        g = np.concatenate([[0.0], np.cumsum(dg)])
        # anchor: data-weighted mean of the class-average shape is zero
        w = np.bincount(X[:, i], minlength=spec.bin_count) / X.shape[0]
        g -= float(w @ (model.shapes[i].mean(axis=1) + g))
        offsets.append(g)
    return offsets, max_shift


def apply(model: AdditiveModel, dataset: Dataset, tolerance: float = AXIOM_TOL) -> tuple[AdditiveModel, AxiomReport]:
    """Canonicalize ``model`` against the empirical distribution of ``dataset``."""
    offsets, max_shift = canonical_offsets(model, dataset)
    out = add_offsets(model, offsets)
    rep = verify_axioms(out, dataset, tolerance)
    rep.qv_before = total_quadratic_variation(model)
    rep.max_shift = max_shift
    return out, rep
