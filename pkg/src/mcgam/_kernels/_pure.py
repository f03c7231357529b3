"""Pure numpy implementations of the compiled kernels."""

import numpy as np


def bag_histogram(bins, resid, sample, n_bins):
    n_rows, K = resid.shape
    if sample.size and (sample.min() < 0 or sample.max() >= n_rows):
        raise IndexError("sample index out of range")
    if bins.size and (bins.min() < 0 or bins.max() >= n_bins):
        raise IndexError("bin index out of range")
    mult = np.bincount(sample, minlength=n_rows).astype(np.float64)
    counts = np.bincount(bins, weights=mult, minlength=n_bins)
    a = np.abs(resid)
    s = np.empty((n_bins, K))
    h = np.empty((n_bins, K))
    q = np.empty((n_bins, K))
    for k in range(K):
        r = resid[:, k]
        s[:, k] = np.bincount(bins, weights=mult * r, minlength=n_bins)
        h[:, k] = np.bincount(bins, weights=mult * (a[:, k] * (1.0 - a[:, k])), minlength=n_bins)
        q[:, k] = np.bincount(bins, weights=mult * r * r, minlength=n_bins)
    return counts, s, h, q
