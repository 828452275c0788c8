"""Backend selection for the block weight kernels.

The compiled extension is used when importable; set ``MLMETA_PURE_PYTHON=1``
to force the numpy implementation. ``BACKEND`` names the active one.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("MLMETA_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _resolve(impl):
    if impl is None:
        return _impl
    if isinstance(impl, str):
        impls = implementations()
        if impl not in impls:
            raise KeyError(f"unknown kernel backend {impl!r}; available: {sorted(impls)}")
        return impls[impl]
    return impl


def _arrays(v, starts):
    return (np.ascontiguousarray(v, dtype=np.float64),
            np.ascontiguousarray(starts, dtype=np.intp))


def weighted_sums(v, starts, s2xi, s2zeta, X, y, impl=None):
    """Return ``(X'WX, X'Wy, y'Wy, log|M|)`` for the block-diagonal marginal
    covariance defined by ``starts`` (block offsets, length h+1).

    ``impl`` selects a backend by name ("cython" or "python"); the default
    is the one chosen at import."""
    impl = _resolve(impl)
    v, starts = _arrays(v, starts)
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return impl.weighted_sums(v, starts, float(s2xi), float(s2zeta), X, y)


def block_solve(v, starts, s2xi, s2zeta, R, impl=None):
    """Return ``(W @ R, log|M|)`` with ``W = M^-1``; ``R`` may be 1-D."""
    impl = _resolve(impl)
    v, starts = _arrays(v, starts)
    R = np.asarray(R, dtype=np.float64)
    vec = R.ndim == 1
    R2 = np.ascontiguousarray(R[:, None] if vec else R)
    out, logdet = impl.block_solve(v, starts, float(s2xi), float(s2zeta), R2)
    return (out[:, 0] if vec else out), logdet


def implementations():
    """Available backends by name."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels
        impls["cython"] = _kernels
    except ImportError:
        pass
    return impls
