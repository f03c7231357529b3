"""Hot training kernels.

The compiled Cython extension is used when it has been built; otherwise
the numpy fallback is imported. Set ``MCGAM_PURE_PYTHON=1`` to force the
fallback.
"""

import os

import numpy as np

from . import _pure

if os.environ.get("MCGAM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _hist as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "python"


def bag_histogram(bins, resid, sample, n_bins, backend=None):
    """Per-bin ``(count, sum, hess, sumsq)`` of residuals over a bootstrap sample."""
    impl = _pure if backend == "python" else _impl
    return impl.bag_histogram(
        np.ascontiguousarray(bins, dtype=np.intp),
        np.ascontiguousarray(resid, dtype=np.float64),
        np.ascontiguousarray(sample, dtype=np.intp),
        int(n_bins),
    )


def compiled_available() -> bool:
    try:
        from . import _hist  # noqa: F401
    except ImportError:
        return False
    return True
