import numpy as np
import pytest

from mcgam.data import BinSpec, CATEGORICAL, from_arrays
from mcgam.gam import AdditiveModel

ACCEPTANCE_LINES = []


def random_bins(rng, d, min_bins=2, max_bins=10):
    specs = []
    for i in range(d):
        nb = int(rng.integers(min_bins, max_bins + 1))
        if rng.random() < 0.3:
            specs.append(BinSpec(f"f{i}", CATEGORICAL, categories=tuple(f"c{j}" for j in range(nb))))
        else:
            specs.append(BinSpec(f"f{i}", "continuous", cuts=tuple(float(c) for c in range(1, nb)),
                                 low=0.0, high=float(nb)))
    return specs


def random_model(rng, K=None, d=None, scale=1.0, **kw):
    K = int(rng.integers(2, 7)) if K is None else K
    d = int(rng.integers(1, 6)) if d is None else d
    bins = random_bins(rng, d, **kw)
    shapes = [rng.normal(scale=scale, size=(b.bin_count, K)) for b in bins]
    return AdditiveModel(bins, shapes, rng.normal(size=K))


def random_rows(rng, model, n):
    return np.column_stack([rng.integers(0, b.bin_count, size=n) for b in model.bins])


def binned_dataset(model, X, y=None):
    """Dataset whose raw values sit inside the model's bins so binning reproduces ``X``."""
    cols = []
    for spec, col in zip(model.bins, X.T):
        if spec.discrete:
            cols.append(np.array([spec.categories[b] for b in col], dtype=object))
        else:
            cols.append(col.astype(float) + 0.5)
    raw = np.empty((len(X), len(cols)), dtype=object)
    for j, c in enumerate(cols):
        raw[:, j] = c
    kinds = [b.kind for b in model.bins]
    labels = list(model.labels)
    ds = from_arrays(raw, None if y is None else [labels[k] for k in y], names=[b.name for b in model.bins],
                     kinds=kinds, label_names=labels)
    ds = ds.with_bins(model.bins)
    assert np.array_equal(ds.binned, X)
    return ds


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
