"""Acceptance criteria, one test each. Every test records a PASS/FAIL line shown in the terminal summary."""

import os
import time

import numpy as np
import pytest

from mcgam import api
from mcgam.boosting import TrainConfig, leaf_gamma, pseudo_residuals, train
from mcgam.cli import main
from mcgam.data import build_bins, from_arrays, infer_schema, load_csv, normalized_entropy, split
from mcgam.evaluation import balanced_accuracy, confusion_matrix, evaluate
from mcgam.gam import (
    AdditiveModel, add_offsets, delta_logits, from_linear, log_softmax, logits, mean_cross_entropy, predict_proba,
)
from mcgam.synthetic import make_additive, true_logits
from conftest import ACCEPTANCE_LINES, binned_dataset, random_bins, random_model, random_rows
from test_api import consistent_pair, grid_oracle
from test_cli import write_synthetic

SHUTTLE_ENV = "MCGAM_SHUTTLE_CSV"


def record(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def synthetic_run():
    """K=3, d=4, N=10,000 additive ground truth; 80/10/10 split; trained with the reduced budget."""
    X, y = make_additive(10_000, seed=0)
    names = ["c0", "c1", "c2"]
    ds = from_arrays(X, [names[k] for k in y], names=["mono", "vee", "step", "bump"], label_names=names)
    tr, va, te = split(ds, (0.8, 0.1, 0.1), seed=0)
    bins = build_bins(tr, 256)
    tr, va, te = tr.with_bins(bins), va.with_bins(bins), te.with_bins(bins)
    t0 = time.perf_counter()
    model, log = train(tr, va, TrainConfig(learning_rate=0.01, leaves=3, bags=10, max_iters=300))
    return {"train": tr, "valid": va, "test": te, "bins": bins, "model": model, "log": log,
            "seconds": time.perf_counter() - t0}


def test_c1_equivalence_invariance():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        m = random_model(rng, K=int(rng.integers(2, 7)), d=int(rng.integers(1, 6)), scale=2)
        X = random_rows(rng, m, 100)
        base = predict_proba(m, X)
        for _ in range(50):
            offsets = [rng.normal(scale=5, size=b.bin_count) for b in m.bins]
            worst = max(worst, float(np.abs(predict_proba(add_offsets(m, offsets), X) - base).max()))
    dt = time.perf_counter() - t0
    record(1, "equivalence invariance", worst < 1e-12 and dt < 10, f"max drift {worst:.2e} < 1e-12, {dt:.1f}s < 10s")


def test_c2_ranking_consistency():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    bad = checked = 0
    for _ in range(200):
        m = random_model(rng, scale=2)
        for _ in range(10):
            a = random_rows(rng, m, 1)[0]
            i = int(rng.integers(0, m.n_features))
            b = a.copy()
            b[i] = rng.integers(0, m.bins[i].bin_count)
            delta = delta_logits(m, a, b, i)
            ratio = np.log(predict_proba(m, b[None])[0]) - np.log(predict_proba(m, a[None])[0])
            # order agreement on every pair not tied within 1e-12
            dd = delta[:, None] - delta[None, :]
            dr = ratio[:, None] - ratio[None, :]
            strict = np.abs(dd) > 1e-12
            bad += int(np.sum(strict & (np.sign(dd) != np.sign(dr))))
            checked += 1
    dt = time.perf_counter() - t0
    record(2, "ranking consistency", bad == 0 and dt < 10, f"{bad} order disagreements over {checked} pairs, {dt:.1f}s")


def test_c3_per_edge_optimality():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst_gap, worst_prod, n = 0.0, 0.0, 0
    while n < 1000:
        j, p = consistent_pair(rng, int(rng.integers(2, 7)))
        g = api.solve_edge(j, p)
        if abs(g) > 9.99:
            continue  # optimum outside the oracle's grid
        worst_gap = max(worst_gap, abs(g - grid_oracle(j, p)))
        worst_prod = min(worst_prod, float(((j + g) * p).min()))
        n += 1
    dt = time.perf_counter() - t0
    ok = worst_gap <= 1e-4 and worst_prod >= -1e-12 and dt < 30
    record(3, "per-edge optimality", ok, f"max |solve - grid| {worst_gap:.1e} <= 1e-4, min product {worst_prod:.1e}, "
                                         f"{dt:.1f}s < 30s")


def toy_models():
    """One-feature, three-class base model plus six members of its equivalence class."""
    rng = np.random.default_rng(4)
    (spec,) = random_bins(np.random.default_rng(0), 1, 20, 20)
    x = (np.arange(20) + 0.5) / 20
    base = np.column_stack([3 * x, 0 * x, 0.5 * x])  # class A rises against B and C
    offsets = [
        5 * x,                                    # all rising
        -5 * x,                                   # all falling
        -1.5 * x,                                 # some rising, some falling
        np.where(x < 0.5, -2 * x, -1 + 4 * (x - 0.5)),  # two fall, then all rise
        -4.0 * (x > 0.5),                         # big drop in the middle
        3 * np.sin(6 * np.pi * x),                # oscillating
    ]
    model = AdditiveModel([spec], [base], labels=["A", "B", "C"])
    members = [add_offsets(model, [g]) for g in offsets]
    X = np.repeat(np.arange(20), 5)[:, None]
    return model, members, binned_dataset(model, X, rng.integers(0, 3, size=len(X))), X


def test_c4_canonical_uniqueness():
    t0 = time.perf_counter()
    model, members, ds, X = toy_models()
    p0 = predict_proba(model, X)
    same_pred = max(float(np.abs(predict_proba(m, X) - p0).max()) for m in members)
    distinct = len({np.round(m.shapes[0], 6).tobytes() for m in members}) == 6
    canon = [api.apply(m, ds)[0] for m in members]
    ref = api.edge_jumps(canon[0], 0)
    spread = max(float(np.abs(api.edge_jumps(c, 0) - ref).max()) for c in canon)
    a_up = bool(np.all(ref[:, 0] >= -1e-9))
    bc_down = bool(np.all(ref[:, 1:] <= 1e-9))
    probs_match = bool(np.all(np.diff(p0[::5, 0]) > 0) and np.all(np.diff(p0[::5, 1:], axis=0) < 0))
    dt = time.perf_counter() - t0
    ok = same_pred < 1e-12 and distinct and spread <= 1e-9 and a_up and bc_down and probs_match and dt < 5
    record(4, "canonical uniqueness on the six-member toy",
           ok, f"jump spread {spread:.1e} <= 1e-9, A rising={a_up}, B/C falling={bc_down}, {dt:.2f}s < 5s")


def test_c5_api_end_to_end(synthetic_run):
    model, tr, te = synthetic_run["model"], synthetic_run["train"], synthetic_run["test"]
    canon, rep = api.apply(model, tr)
    check = api.verify_axioms(canon, tr, 1e-9)
    drift = max(float(np.abs(predict_proba(canon, d.binned) - predict_proba(model, d.binned)).max()) for d in (tr, te))
    record(5, "API preservation and axioms end to end", check.violations == 0 and drift < 1e-12,
           f"{check.violations} violations of {check.n_checked} at 1e-9, max drift {drift:.1e} < 1e-12")


def test_c6_gradient_correctness():
    rng = np.random.default_rng(6)
    h, worst = 1e-5, 0.0
    for _ in range(100):
        m = random_model(rng, scale=2)
        X = random_rows(rng, m, 1)
        y = rng.integers(0, m.n_classes, size=1)
        r = pseudo_residuals(m, binned_dataset(m, X, y))[0]
        z = logits(m, X)[0]
        for j in range(m.n_classes):
            e = np.zeros_like(z)
            e[j] = h
            fd = (-log_softmax(z + e)[y[0]] + log_softmax(z - e)[y[0]]) / (2 * h)
            worst = max(worst, abs(r[j] + fd))
    record(6, "pseudo-residuals vs finite differences", worst < 1e-6, f"max error {worst:.1e} < 1e-6")


def fit_multinomial(X, y, K):
    from scipy.optimize import minimize

    d = X.shape[1]
    rows = np.arange(len(y))

    def f(theta):
        W, b = theta[:d * K].reshape(d, K), theta[d * K:]
        lp = log_softmax(X @ W + b)
        G = np.exp(lp)
        G[rows, y] -= 1
        G /= len(y)
        return -lp[rows, y].mean(), np.concatenate([(X.T @ G).ravel(), G.sum(axis=0)])

    res = minimize(f, np.zeros(d * K + K), jac=True, method="L-BFGS-B")
    return res.x[:d * K].reshape(d, K), res.x[d * K:]


def test_c7_learning_power(synthetic_run):
    model, tr, te, bins = (synthetic_run[k] for k in ("model", "train", "test", "bins"))
    rep = evaluate(model, te)
    z_true = true_logits(np.column_stack(te.columns))
    ce_true = mean_cross_entropy(z_true, te.labels)
    bacc_true = balanced_accuracy(confusion_matrix(te.labels, z_true.argmax(axis=1), 3))
    W, b = fit_multinomial(np.column_stack(tr.columns), tr.labels, 3)
    lin = evaluate(from_linear(W, b, bins, labels=model.labels), te)
    ce_gap = rep.cross_entropy - ce_true
    bacc_gap = abs(rep.balanced_accuracy - bacc_true)
    margin = rep.balanced_accuracy - lin.balanced_accuracy
    dt = synthetic_run["seconds"]
    ok = ce_gap <= 0.05 and bacc_gap <= 0.03 and margin >= 0.02 and dt < 300
    record(7, "learning power on additive ground truth", ok,
           f"CE {rep.cross_entropy:.4f} vs true {ce_true:.4f}, BACC {rep.balanced_accuracy:.4f} vs true "
           f"{bacc_true:.4f}, linear BACC {lin.balanced_accuracy:.4f}, {dt:.0f}s < 300s")


LEAVES = [
    (3, [[0.5], [0.3]]),
    (2, [[0.5]]),
    (2, [[0.5, -0.5], [-0.25, 0.25]]),
    (3, [[0.2, -0.1, -0.1]]),
    (4, [[0.75, -0.25, -0.25, -0.25]]),
    (4, [[-0.25, 0.75, -0.25, -0.25], [-0.25, -0.25, 0.75, -0.25]]),
    (3, [[0.9], [0.8], [-0.1]]),
    (5, [[0.1, 0.1, 0.1, 0.1, -0.4]]),
    (2, [[0.01], [0.02], [0.03]]),
    (3, [[-0.6], [-0.2]]),
    (6, [[0.5, -0.1, -0.1, -0.1, -0.1, -0.1]]),
    (3, [[0.0], [0.0]]),
    (2, [[0.99], [-0.99]]),
    (3, [[0.33, -0.33], [0.66, -0.66]]),
    (7, [[0.4], [0.4], [0.4], [-0.3]]),
    (2, [[0.7, -0.7]]),
    (3, [[0.45], [-0.05], [0.15], [0.25]]),
    (4, [[0.125], [0.375]]),
    (11, [[0.05, -0.05], [0.1, -0.1]]),
    (2, [[0.5], [0.5], [0.5], [0.5]]),
]


def test_c8_leaf_gamma_unit_fidelity():
    worst = 0.0
    for K, leaf in LEAVES:
        got = leaf_gamma(np.array(leaf), K=K)
        for col in range(len(leaf[0])):
            s = sum(r[col] for r in leaf)
            h = sum(abs(r[col]) * (1 - abs(r[col])) for r in leaf)
            direct = (K - 1) / K * s / max(h, 1e-12)
            worst = max(worst, abs(got[col] - direct))
    half = leaf_gamma(np.array([[0.5]]), K=2)[0]  # (1/2) * 0.5 / 0.25
    record(8, "leaf value arithmetic on 20 leaves", worst <= 1e-12 and abs(half - 1.0) <= 1e-12,
           f"max error {worst:.1e} <= 1e-12, K=2 case {float(half)!r}")


def test_c9_metrics():
    h = normalized_entropy(np.full(11, 1 / 11))
    crafted = [
        (np.diag([4, 4, 4]), 1.0),
        (np.array([[4, 0], [2, 2]]), 0.75),
        (np.array([[5, 0, 0, 0], [5, 0, 0, 0], [5, 0, 0, 0], [5, 0, 0, 0]]), 0.25),
        (np.array([[5, 1, 0], [2, 6, 2], [0, 3, 1]]), (5 / 6 + 6 / 10 + 1 / 4) / 3),
    ]
    worst = max(abs(balanced_accuracy(cm) - v) for cm, v in crafted)
    record(9, "entropy and balanced accuracy", abs(h - 1) <= 1e-9 and worst <= 1e-12,
           f"H(uniform 11) = {h:.12f}, BACC max error {worst:.1e}")


def _pipeline(tmp, data, threads, tag):
    model, canon, pred = (str(tmp / f"{tag}.{s}") for s in ("model.json", "canon.json", "pred.csv"))
    args = ["--bags", "8", "--iters", "10", "--max-bins", "32", "--seed", "11", "--threads", str(threads)]
    assert main(["train", "--data", data, "--label", "y", "--out", model, *args]) == 0
    assert main(["postprocess", "--model", model, "--data", data, "--out", canon]) == 0
    assert main(["predict", "--model", canon, "--data", data, "--out", pred]) == 0
    return [open(p, "rb").read() for p in (model, canon, pred)]


def test_c10_determinism(tmp_path):
    data = str(write_synthetic(tmp_path / "d.csv", n=2000, seed=10))
    runs = {t: [_pipeline(tmp_path, data, t, f"t{t}r{r}") for r in range(2)] for t in (1, 8)}
    same_run = all(runs[t][0] == runs[t][1] for t in (1, 8))
    across = runs[1][0] == runs[8][0]
    record(10, "byte-identical pipeline reruns", same_run and across,
           f"identical within threads 1 and 8: {same_run}, identical across: {across}")


@pytest.mark.slow
def test_c11_shuttle():
    path = os.environ.get(SHUTTLE_ENV)
    if not path:
        ACCEPTANCE_LINES.append(f"[SKIP] criterion 11: UCI Shuttle (set {SHUTTLE_ENV} to a CSV with a 'class' column)")
        pytest.skip(f"{SHUTTLE_ENV} not set")
    label = os.environ.get("MCGAM_SHUTTLE_LABEL", "class")
    t0 = time.perf_counter()
    ds = load_csv(path, infer_schema(path, label), label)
    tr, va, te = split(ds, (0.8, 0.1, 0.1), seed=0)
    bins = build_bins(tr, 256)
    tr, va, te = tr.with_bins(bins), va.with_bins(bins), te.with_bins(bins)
    model, _ = train(tr, va, TrainConfig(bags=10, max_iters=500))
    bacc = evaluate(model, te).balanced_accuracy
    dt = time.perf_counter() - t0
    record(11, "UCI Shuttle reduced budget", bacc >= 0.90 and dt < 1800, f"test BACC {bacc:.4f} >= 0.90, {dt:.0f}s")
