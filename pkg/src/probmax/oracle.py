"""Seeded Monte-Carlo oracles.

``estimate_f`` and ``batch_gradient`` average the Gaussian integrand;
``hit_or_miss_probability`` counts uniform draws from the body directly and
shares no code path with them, so agreement between the two is a genuine
check of the reformulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels as _default_kernels
from .geometry import GeometryError

CHUNK = 1024
BLOCK = 64 * CHUNK
HIT_TOL = 1e-12


def make_stream(*key):
    """Counter-based generator keyed by a tuple of non-negative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True)
class OracleSample:
    """Batch averages on the scale of ``f`` (the constant ``C`` is applied).

    ``grad_var`` is the per-coordinate sample variance of single-draw
    gradients; its sum estimates the oracle noise ``E||w||^2``.
    """

    value_mean: float
    grad_mean: np.ndarray | None
    value_se: float
    batch_size: int
    samples_consumed: int
    grad_var: np.ndarray | None = None
    clamped: int = 0

    @property
    def noise_var(self):
        return None if self.grad_var is None else float(self.grad_var.sum())


def _check_x(x, spec):
    x = np.ascontiguousarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise GeometryError(f"dimension mismatch: x{x.shape}, problem n={spec.n}")
    return x


def draw_normals(stream, N, n):
    return stream.standard_normal((int(N), n))


def reduce_batch(x, xi, spec, smooth=True, kernels=None):
    """Chunked reduction of the integrand over the rows of ``xi``.

    Chunks of 1024 rows are summed in a fixed order, so the result is a
    deterministic function of ``(x, xi, spec)`` for a given backend.
    """
    k = kernels or _default_kernels
    x = _check_x(x, spec)
    xi = np.ascontiguousarray(xi, dtype=float)
    N, n = xi.shape
    if N < 1:
        raise ValueError("batch size must be >= 1")
    kind = spec.body.kind
    data = spec.body.kernel_data()
    vsum = vsq = 0.0
    gsum = np.zeros(n)
    gsq = np.zeros(n)
    nclamp = 0
    for lo in range(0, N, CHUNK):
        chunk = xi[lo:lo + CHUNK]
        if smooth:
            vals, gs, gq, c = k.smooth_batch(x, chunk, kind, data, spec.m, spec.s, spec.log_const)
            gsum += gs
            gsq += gq
        else:
            vals, c = k.plain_batch(x, chunk, kind, data, spec.m, spec.log_const)
        vsum += float(vals.sum())
        vsq += float(vals @ vals)
        nclamp += c
    C = spec.C
    mean = vsum / N
    var = max(vsq / N - mean * mean, 0.0) * N / (N - 1) if N > 1 else 0.0
    grad_mean = grad_var = None
    if smooth:
        gm = gsum / N
        grad_mean = C * gm
        if N > 1:
            grad_var = C * C * np.maximum(gsq / N - gm * gm, 0.0) * N / (N - 1)
        else:
            grad_var = np.zeros(n)
    return OracleSample(
        value_mean=C * mean,
        grad_mean=grad_mean,
        value_se=C * math.sqrt(var / N),
        batch_size=N,
        samples_consumed=N,
        grad_var=grad_var,
        clamped=nclamp,
    )


def estimate_f(x, N, stream, spec, smooth=True):
    """``C * mean(F(x, Z_j))`` over ``N`` fresh standard-normal draws.

    With ``smooth=False`` the nonsmooth integrand is used, which targets the
    probability itself rather than its smoothed surrogate.
    """
    return reduce_batch(x, draw_normals(stream, N, spec.n), spec, smooth=smooth)


def batch_gradient(x, N, stream, spec):
    """Mini-batch estimate of ``grad f(x; s)`` (value mean from the same draws)."""
    return reduce_batch(x, draw_normals(stream, N, spec.n), spec, smooth=True)


def hit_or_miss_probability(x, N, stream, spec):
    """Fraction of uniform draws from the body with ``|xi^T x| <= 1``.

    Returns ``(estimate, binomial standard error)``.
    """
    x = _check_x(x, spec)
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    hits = 0
    remaining = N
    while remaining:
        k = min(remaining, BLOCK)
        pts = spec.body.sample(stream, k)
        hits += int(np.count_nonzero(np.abs(pts @ x) <= 1.0 + HIT_TOL))
        remaining -= k
    p = hits / N
    return p, math.sqrt(p * (1.0 - p) / N)


def gradient_check(x, spec, N, stream, step=1e-5, integrand=None):
    """Max relative gap between the batch gradient and central differences.

    Both sides use the same draws (common random numbers). ``integrand`` may
    replace the problem's integrand with a callable ``(x, xi) -> (values,
    grads)`` returning per-row arrays. The gap is scaled by the largest
    finite-difference component; when that is exactly zero the absolute gap
    is returned.
    """
    x = _check_x(x, spec)
    xi = draw_normals(stream, N, spec.n)
    if integrand is None:
        def value(z):
            return reduce_batch(z, xi, spec).value_mean
        grad = reduce_batch(x, xi, spec).grad_mean
    else:
        def value(z):
            return float(np.mean(integrand(z, xi)[0]))
        grad = np.mean(integrand(x, xi)[1], axis=0)
    fd = np.empty(spec.n)
    for i in range(spec.n):
        e = np.zeros(spec.n)
        e[i] = step
        fd[i] = (value(x + e) - value(x - e)) / (2.0 * step)
    gap = float(np.max(np.abs(grad - fd)))
    scale = float(np.max(np.abs(fd)))
    return gap / scale if scale > 0 else gap
