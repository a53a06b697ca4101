# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, sqrt, fabs, tanh, pow, INFINITY, isinf

cnp.import_array()

BALL, BOX, ELLIPSOID, POLYTOPE = 0, 1, 2, 3
FEAS_BALL, FEAS_POLYTOPE = 0, 1
LOG_CLAMP = 700.0

NAME = "cython"

cdef double _LOG_CLAMP = 700.0


cdef inline double _gauge(int kind, const double[:, ::1] data, const double[:, ::1] xi,
                          Py_ssize_t row) noexcept nogil:
    cdef Py_ssize_t n = xi.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, v, best
    if kind == 0:
        acc = 0.0
        for i in range(n):
            acc += xi[row, i] * xi[row, i]
        return sqrt(acc) * data[0, 0]
    elif kind == 1:
        best = 0.0
        for i in range(n):
            v = fabs(xi[row, i]) * data[0, i]
            if v > best:
                best = v
        return best
    elif kind == 2:
        acc = 0.0
        for i in range(n):
            v = 0.0
            for j in range(n):
                v += data[i, j] * xi[row, j]
            acc += xi[row, i] * v
        return sqrt(acc) if acc > 0.0 else 0.0
    else:
        best = 0.0
        for j in range(data.shape[0]):
            v = 0.0
            for i in range(n):
                v += data[j, i] * xi[row, i]
            v = fabs(v)
            if v > best:
                best = v
        return best


cdef inline double _powm(double v, double m) noexcept nogil:
    if m == 2.0:
        return v * v
    return pow(v, m)


cdef inline double _smooth_row(const double[::1] x, const double[:, ::1] xi, Py_ssize_t row,
                               int kind, const double[:, ::1] data, double m, double s,
                               double logc, double* coef, int* clamped) noexcept nogil:
    # returns F_s and writes the scalar gradient coefficient (grad = coef * xi)
    cdef Py_ssize_t n = xi.shape[1]
    cdef Py_ssize_t i
    cdef double u = 0.0, sq = 0.0, au, ell, a1, a2, d, e, small, w1, logf, val
    for i in range(n):
        u += xi[row, i] * x[i]
        sq += xi[row, i] * xi[row, i]
    au = fabs(u)
    ell = au + s * log1p(exp(-2.0 * au / s))
    a1 = _powm(ell, m)
    a2 = _powm(_gauge(kind, data, xi, row), m)
    d = a1 - a2
    # one exponential serves the log-sum-exp and the two-way softmax
    e = exp(-fabs(d) / s)
    small = e / (1.0 + e)
    w1 = 1.0 - small if d >= 0.0 else small
    logf = logc + 0.5 * sq - ((a1 if a1 > a2 else a2) + s * log1p(e))
    if logf > _LOG_CLAMP:
        logf = _LOG_CLAMP
        clamped[0] += 1
    val = exp(logf)
    # ell >= s*log(2) > 0, so ell^(m-1) = a1 / ell
    coef[0] = -val * w1 * m * (a1 / ell) * tanh(u / s)
    return val


def gauge_rows(int kind, const double[:, ::1] data, const double[:, ::1] xi):
    cdef Py_ssize_t N = xi.shape[0]
    cdef Py_ssize_t r
    out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for r in range(N):
            o[r] = _gauge(kind, data, xi, r)
    return out


def plain_batch(const double[::1] x, const double[:, ::1] xi, int kind,
                const double[:, ::1] data, double m, double logc):
    cdef Py_ssize_t N = xi.shape[0], n = xi.shape[1]
    cdef Py_ssize_t r, i
    cdef double u, sq, a1, a2, logf
    cdef int nclamp = 0
    out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for r in range(N):
            u = 0.0
            sq = 0.0
            for i in range(n):
                u += xi[r, i] * x[i]
                sq += xi[r, i] * xi[r, i]
            a1 = _powm(fabs(u), m)
            a2 = _powm(_gauge(kind, data, xi, r), m)
            logf = logc + 0.5 * sq - (a1 if a1 > a2 else a2)
            if logf > _LOG_CLAMP:
                logf = _LOG_CLAMP
                nclamp += 1
            o[r] = exp(logf)
    return out, nclamp


def smooth_batch(const double[::1] x, const double[:, ::1] xi, int kind,
                 const double[:, ::1] data, double m, double s, double logc):
    cdef Py_ssize_t N = xi.shape[0], n = xi.shape[1]
    cdef Py_ssize_t r, i
    cdef double coef, gi
    cdef int nclamp = 0
    vals = np.empty(N)
    gsum = np.zeros(n)
    gsq = np.zeros(n)
    cdef double[::1] v = vals
    cdef double[::1] gs = gsum
    cdef double[::1] gq = gsq
    with nogil:
        for r in range(N):
            v[r] = _smooth_row(x, xi, r, kind, data, m, s, logc, &coef, &nclamp)
            for i in range(n):
                gi = coef * xi[r, i]
                gs[i] += gi
                gq[i] += gi * gi
    return vals, gsum, gsq, nclamp


cdef int _solve_small(double* M, double* rhs, Py_ssize_t q) noexcept nogil:
    # Gaussian elimination with partial pivoting on a q x q row-major system.
    cdef Py_ssize_t i, j, k, piv
    cdef double best, tmp, f
    for k in range(q):
        piv = k
        best = fabs(M[k * q + k])
        for i in range(k + 1, q):
            if fabs(M[i * q + k]) > best:
                best = fabs(M[i * q + k])
                piv = i
        if best < 1e-300:
            return 1
        if piv != k:
            for j in range(q):
                tmp = M[k * q + j]
                M[k * q + j] = M[piv * q + j]
                M[piv * q + j] = tmp
            tmp = rhs[k]
            rhs[k] = rhs[piv]
            rhs[piv] = tmp
        for i in range(k + 1, q):
            f = M[i * q + k] / M[k * q + k]
            for j in range(k, q):
                M[i * q + j] -= f * M[k * q + j]
            rhs[i] -= f * rhs[k]
    for k in range(q - 1, -1, -1):
        tmp = rhs[k]
        for j in range(k + 1, q):
            tmp -= M[k * q + j] * rhs[j]
        rhs[k] = tmp / M[k * q + k]
    return 0


cdef int _gi_project(const double[:, ::1] A, const double[::1] b, double[::1] x,
                     double[::1] lam, Py_ssize_t[::1] active, double[::1] work,
                     double tol, int max_iter) noexcept nogil:
    # x holds y on entry and the projection on exit; work has length >= n*n + 3n.
    cdef Py_ssize_t p = A.shape[0], n = A.shape[1]
    cdef Py_ssize_t q = 0, i, j, k, it, jp, drop
    cdef double best, v, zz, t1, t2, t, ratio, lam_p, acc
    cdef double* M = &work[0]
    cdef double* r = &work[n * n]
    cdef double* z = &work[n * n + n]
    for i in range(p):
        lam[i] = 0.0
    for it in range(max_iter):
        jp = 0
        best = -INFINITY
        for i in range(p):
            acc = -b[i]
            for k in range(n):
                acc += A[i, k] * x[k]
            if acc > best:
                best = acc
                jp = i
        if best <= tol * (1.0 + fabs(b[jp])):
            return 0
        lam_p = 0.0
        while True:
            # r = (N^T N)^{-1} N^T a_p, z = -(a_p - N r)
            for i in range(q):
                acc = 0.0
                for k in range(n):
                    acc += A[active[i], k] * A[jp, k]
                r[i] = acc
                for j in range(q):
                    acc = 0.0
                    for k in range(n):
                        acc += A[active[i], k] * A[active[j], k]
                    M[i * q + j] = acc
            if q > 0 and _solve_small(M, r, q) != 0:
                return 3
            zz = 0.0
            for k in range(n):
                acc = A[jp, k]
                for i in range(q):
                    acc -= A[active[i], k] * r[i]
                z[k] = -acc
                zz += acc * acc
            v = -b[jp]
            for k in range(n):
                v += A[jp, k] * x[k]
            t2 = v / zz if zz > 1e-28 else INFINITY
            t1 = INFINITY
            drop = -1
            for i in range(q):
                if r[i] > 1e-14:
                    ratio = lam[active[i]] / r[i]
                    if ratio < t1:
                        t1 = ratio
                        drop = i
            t = t1 if t1 < t2 else t2
            if isinf(t):
                return 1
            if not isinf(t2):
                for k in range(n):
                    x[k] += t * z[k]
            for i in range(q):
                lam[active[i]] -= t * r[i]
            lam_p += t
            if t2 <= t1:
                lam[jp] = lam_p
                active[q] = jp
                q += 1
                break
            lam[active[drop]] = 0.0
            for i in range(drop, q - 1):
                active[i] = active[i + 1]
            q -= 1
    return 2


def project_polytope(const double[:, ::1] A, const double[::1] b, y,
                     double tol=1e-12, int max_iter=0):
    cdef Py_ssize_t p = A.shape[0], n = A.shape[1]
    if max_iter <= 0:
        max_iter = 10 * (p + n) + 50
    x = np.array(y, dtype=float, copy=True)
    lam = np.zeros(p)
    active = np.zeros(p + 1, dtype=np.intp)
    work = np.zeros(n * n + 3 * n + 1)
    cdef double[::1] xv = x
    cdef double[::1] lv = lam
    cdef Py_ssize_t[::1] av = active
    cdef double[::1] wv = work
    cdef int status
    with nogil:
        status = _gi_project(A, b, xv, lv, av, wv, tol, max_iter)
    return x, lam, status


def msa_loop(const double[::1] x1, const double[:, ::1] xi, const double[::1] step,
             int kind, const double[:, ::1] data, double m, double s, double logc,
             int fkind, const double[:, ::1] A, const double[::1] b,
             const double[::1] center, double radius, double tol):
    cdef Py_ssize_t K = xi.shape[0], n = xi.shape[1]
    cdef Py_ssize_t p = A.shape[0]
    cdef Py_ssize_t k, i
    cdef double coef, norm, scale
    cdef int nclamp = 0, status = 0
    cdef int max_iter = 10 * (p + n) + 50
    xs = np.empty((K + 1, n))
    fvals = np.empty(K)
    lam = np.zeros(max(p, 1))
    active = np.zeros(p + 1, dtype=np.intp)
    work = np.zeros(n * n + 3 * n + 1)
    x = np.array(x1, dtype=float, copy=True)
    cdef double[:, ::1] X = xs
    cdef double[::1] fv = fvals
    cdef double[::1] lv = lam
    cdef Py_ssize_t[::1] av = active
    cdef double[::1] wv = work
    cdef double[::1] xc = x
    with nogil:
        for i in range(n):
            X[0, i] = xc[i]
        for k in range(K):
            fv[k] = _smooth_row(xc, xi, k, kind, data, m, s, logc, &coef, &nclamp)
            for i in range(n):
                xc[i] += step[k] * coef * xi[k, i]
            if fkind == 0:
                norm = 0.0
                for i in range(n):
                    norm += (xc[i] - center[i]) * (xc[i] - center[i])
                norm = sqrt(norm)
                if norm > radius:
                    scale = radius / norm
                    for i in range(n):
                        xc[i] = center[i] + scale * (xc[i] - center[i])
            else:
                status = _gi_project(A, b, xc, lv, av, wv, tol, max_iter)
                if status != 0:
                    break
            for i in range(n):
                X[k + 1, i] = xc[i]
    if status != 0:
        raise RuntimeError(f"projection failed with status {status}")
    return xs, fvals
