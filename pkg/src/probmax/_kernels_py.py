"""Pure numpy kernels; the fallback when the compiled ``_kernels`` is absent.

Both backends expose the same functions with the same argument order.
Bodies are passed as ``(kind, data)`` where ``data`` is a 2-D float array:

* ``BALL``      -- ``[[1/r]]``
* ``BOX``       -- ``[1/w_1, ..., 1/w_n]`` (one row)
* ``ELLIPSOID`` -- the shape matrix ``Q``
* ``POLYTOPE``  -- the rows ``a_i`` of ``{xi : |a_i^T xi| <= 1}``
"""

import math

import numpy as np

from .smoothing import smooth_abs, smooth_abs_grad, smooth_max, smooth_max_grad

BALL, BOX, ELLIPSOID, POLYTOPE = 0, 1, 2, 3
FEAS_BALL, FEAS_POLYTOPE = 0, 1
LOG_CLAMP = 700.0

NAME = "python"


def gauge_rows(kind, data, xi):
    xi = np.asarray(xi, dtype=float)
    if kind == BALL:
        return np.sqrt(np.einsum("ij,ij->i", xi, xi)) * data[0, 0]
    if kind == BOX:
        return np.max(np.abs(xi) * data[0], axis=1)
    if kind == ELLIPSOID:
        q = np.einsum("ij,jk,ik->i", xi, data, xi)
        return np.sqrt(np.maximum(q, 0.0))
    if kind == POLYTOPE:
        return np.max(np.abs(xi @ data.T), axis=1)
    raise ValueError(f"unknown body kind {kind}")


def _clamp(logf):
    over = logf > LOG_CLAMP
    return np.minimum(logf, LOG_CLAMP), int(np.count_nonzero(over))


def plain_batch(x, xi, kind, data, m, logc):
    """Unsmoothed integrand values for each row of ``xi``.

    Returns ``(values, n_clamped)``.
    """
    u = xi @ x
    gauge = gauge_rows(kind, data, xi)
    sq = np.einsum("ij,ij->i", xi, xi)
    logf = logc + 0.5 * sq - np.maximum(np.abs(u) ** m, gauge**m)
    logf, nclamp = _clamp(logf)
    return np.exp(logf), nclamp


def smooth_batch(x, xi, kind, data, m, s, logc):
    """Smoothed integrand values and gradient moments over the rows of ``xi``.

    Returns ``(values, grad_sum, grad_sumsq, n_clamped)`` where the gradient
    moments are column sums of the per-row gradients and their squares.
    """
    u = xi @ x
    gauge = gauge_rows(kind, data, xi)
    sq = np.einsum("ij,ij->i", xi, xi)
    ell = smooth_abs(u, s)
    a1 = ell**m
    a2 = gauge**m
    logf = logc + 0.5 * sq - smooth_max(a1, a2, s)
    logf, nclamp = _clamp(logf)
    vals = np.exp(logf)
    w1, _ = smooth_max_grad(a1, a2, s)
    coef = -vals * w1 * m * ell ** (m - 1.0) * smooth_abs_grad(u, s)
    grads = coef[:, None] * xi
    return vals, grads.sum(axis=0), (grads * grads).sum(axis=0), nclamp


def project_ball(center, radius, y):
    d = y - center
    norm = math.sqrt(float(d @ d))
    if norm <= radius:
        return y.copy()
    return center + (radius / norm) * d


def project_polytope(A, b, y, tol=1e-12, max_iter=0):
    """Euclidean projection onto ``{x : A x <= b}`` by a dual active-set method.

    Goldfarb-Idnani specialised to the identity Hessian: start from the
    unconstrained minimiser ``y`` and repeatedly add the most violated
    constraint, dropping active constraints whose multipliers would turn
    negative. Returns ``(x, multipliers, status)`` with status 0 on success,
    1 when the constraints are inconsistent and 2 on iteration overflow.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    p, n = A.shape
    if max_iter <= 0:
        max_iter = 10 * (p + n) + 50
    x = np.array(y, dtype=float)
    active = []
    lam = np.zeros(p)
    for _ in range(max_iter):
        viol = A @ x - b
        j = int(np.argmax(viol))
        if viol[j] <= tol * (1.0 + abs(b[j])):
            return x, lam, 0
        ap = A[j]
        lam_p = 0.0
        while True:
            if active:
                N = A[active].T
                r = np.linalg.lstsq(N.T @ N, N.T @ ap, rcond=None)[0]
                z = -(ap - N @ r)
            else:
                r = np.zeros(0)
                z = -ap
            zz = float(z @ z)
            v = float(ap @ x - b[j])
            t2 = v / zz if zz > 1e-28 else math.inf
            t1, drop = math.inf, -1
            for i, ri in enumerate(r):
                if ri > 1e-14:
                    ratio = lam[active[i]] / ri
                    if ratio < t1:
                        t1, drop = ratio, i
            t = min(t1, t2)
            if math.isinf(t):
                return x, lam, 1
            if not math.isinf(t2):
                x = x + t * z
            for i, idx in enumerate(active):
                lam[idx] -= t * r[i]
            lam_p += t
            if t2 <= t1:
                lam[j] = lam_p
                active.append(j)
                break
            lam[active[drop]] = 0.0
            del active[drop]
    return x, lam, 2


def msa_loop(x1, xi, step, kind, data, m, s, logc,
             fkind, A, b, center, radius, tol):
    """Run the single-sample projected ascent loop.

    Iteration ``k`` moves ``x_k`` by ``step[k] * grad F_s(x_k, xi[k])`` and
    projects back onto the feasible set. Returns the iterates (``K + 1`` rows)
    and the sampled integrand value at each ``x_k``.
    """
    K, n = xi.shape
    xs = np.empty((K + 1, n))
    fvals = np.empty(K)
    x = np.array(x1, dtype=float)
    xs[0] = x
    for k in range(K):
        row = xi[k:k + 1]
        vals, gsum, _, _ = smooth_batch(x, row, kind, data, m, s, logc)
        fvals[k] = vals[0]
        trial = x + step[k] * gsum
        if fkind == FEAS_BALL:
            x = project_ball(center, radius, trial)
        else:
            x, _, status = project_polytope(A, b, trial, tol)
            if status != 0:
                raise RuntimeError(f"projection failed with status {status}")
        xs[k + 1] = x
    return xs, fvals
