"""Synthetic multiclass data drawn from known additive logits."""

from __future__ import annotations

import numpy as np

from .data import from_arrays


def _true_shapes(x: np.ndarray) -> np.ndarray:
    """(N, d=4, K=3) true contributions: monotone, V-shaped, step and smooth bump."""
    n = x.shape[0]
    f = np.zeros((n, 4, 3))
    f[:, 0] = np.column_stack([2.0 * x[:, 0], np.zeros(n), -1.5 * x[:, 0]])
    v = np.abs(x[:, 1] - 0.5)
    f[:, 1] = np.column_stack([-2.0 * v, 3.0 * v, -1.0 * v])
    step = (x[:, 2] > 0.3).astype(float)
    f[:, 2] = np.column_stack([-0.8 * step, 1.2 * step, -0.4 * step])
    bump = np.sin(np.pi * x[:, 3])
    f[:, 3] = np.column_stack([0.5 * bump, -0.5 * bump, 0.8 * bump])
    return f


def true_logits(X, scale: float = 1.0) -> np.ndarray:
    return scale * _true_shapes(np.asarray(X, dtype=float)).sum(axis=1)


def make_additive(n: int = 10_000, seed: int = 0, scale: float = 1.0):
    """Draw ``(X, y)`` with ``X ~ U[0,1]^4`` and labels sampled from the softmax of :func:`true_logits`."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 4))
    z = true_logits(X, scale)
    p = np.exp(z - z.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    u = rng.uniform(size=(n, 1))
    y = (u > np.cumsum(p, axis=1)).sum(axis=1)
    return X, np.minimum(y, 2)


def make_dataset(n: int = 10_000, seed: int = 0, scale: float = 1.0):
    X, y = make_additive(n, seed, scale)
    return from_arrays(X, [f"c{k}" for k in y], names=["mono", "vee", "step", "bump"])
