"""Log-sum-exp smoothings of ``max(u1, u2)`` and ``|u|``.

All functions accept scalars or broadcastable arrays. The evaluation is
shifted by the larger argument so nothing overflows for ``|u| / s`` far
beyond 709.
"""

import numpy as np


def _check_scale(s):
    if not np.all(np.asarray(s) > 0):
        raise ValueError(f"smoothing scale must be positive, got {s!r}")


def _expit(z):
    # 1 / (1 + exp(-z)) without overflow in either tail
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def smooth_max(u1, u2, s):
    """Smoothed ``max(u1, u2)``: ``s * log(exp(u1/s) + exp(u2/s))``.

    Satisfies ``0 <= smooth_max(u1, u2, s) - max(u1, u2) <= s * log(2)``.
    """
    _check_scale(s)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    out = np.maximum(u1, u2) + s * np.log1p(np.exp(-np.abs(u1 - u2) / s))
    return out[()] if out.ndim == 0 else out


def smooth_max_grad(u1, u2, s):
    """Partial derivatives of :func:`smooth_max` (a two-way softmax).

    The smaller weight is computed directly and the larger one as its
    complement, so the pair always sums to exactly 1.
    """
    _check_scale(s)
    d = (np.asarray(u1, dtype=float) - np.asarray(u2, dtype=float)) / s
    small = _expit(-np.abs(d))
    large = 1.0 - small
    w1 = np.where(d >= 0, large, small)
    w2 = np.where(d >= 0, small, large)
    if w1.ndim == 0:
        return float(w1), float(w2)
    return w1, w2


def smooth_abs(u, s):
    """Smoothed ``|u|``, i.e. ``smooth_max(u, -u, s)``."""
    _check_scale(s)
    au = np.abs(np.asarray(u, dtype=float))
    out = au + s * np.log1p(np.exp(-2.0 * au / s))
    return out[()] if out.ndim == 0 else out


def smooth_abs_grad(u, s):
    """Derivative of :func:`smooth_abs`: ``tanh(u / s)``."""
    _check_scale(s)
    out = np.tanh(np.asarray(u, dtype=float) / s)
    return out[()] if out.ndim == 0 else out
