# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-bag histogram accumulation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def bag_histogram(const cnp.intp_t[::1] bins, const double[:, ::1] resid,
                  const cnp.intp_t[::1] sample, Py_ssize_t n_bins):
    """Accumulate per-bin statistics over a bootstrap sample.

    Returns ``(count, sum, hess, sumsq)``: row count per bin and, per bin
    and class, the sum of residuals, of ``|r|(1-|r|)`` and of ``r**2``.
    """
    cdef Py_ssize_t K = resid.shape[1]
    cdef Py_ssize_t m = sample.shape[0]
    cdef Py_ssize_t n_rows = resid.shape[0]
    counts_arr = np.zeros(n_bins, dtype=np.float64)
    s_arr = np.zeros((n_bins, K), dtype=np.float64)
    h_arr = np.zeros((n_bins, K), dtype=np.float64)
    q_arr = np.zeros((n_bins, K), dtype=np.float64)
    cdef double[::1] counts = counts_arr
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] q = q_arr
    cdef Py_ssize_t j, k, row, b
    cdef double r, a
    for j in range(m):
        row = sample[j]
        if row < 0 or row >= n_rows:
            raise IndexError("sample index out of range")
        b = bins[row]
        if b < 0 or b >= n_bins:
            raise IndexError("bin index out of range")
    with nogil:
        for j in range(m):
            row = sample[j]
            b = bins[row]
            counts[b] += 1.0
            for k in range(K):
                r = resid[row, k]
                a = fabs(r)
                s[b, k] += r
                h[b, k] += a * (1.0 - a)
                q[b, k] += r * r
    return counts_arr, s_arr, h_arr, q_arr
