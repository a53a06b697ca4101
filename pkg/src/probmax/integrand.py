"""The Gaussian-expectation integrand for ``Prob{xi in K : |xi^T x| <= 1}``.

For ``xi`` uniform on a symmetric body ``K`` with gauge ``||.||_K``,

    f(x) = C * E[F(x, Z)],   Z ~ N(0, I_n),
    F(x, z) = (2 pi)^{n/2} exp(|z|^2 / 2 - max(|z^T x|^m, ||z||_K^m)),
    C = 1 / (Vol(K) Gamma(1 + n/m)).

The smoothed integrand replaces ``max`` and ``|.|`` by their log-sum-exp
versions from :mod:`probmax.smoothing`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special

from .geometry import ConvexBody, FeasibleSet, GeometryError
from .smoothing import smooth_abs, smooth_abs_grad, smooth_max, smooth_max_grad

LOG_CLAMP = 700.0

_clamp_events = 0


def clamp_count():
    """Number of integrand evaluations whose log-value hit the clamp."""
    return _clamp_events


def reset_clamp_count():
    global _clamp_events
    _clamp_events = 0


def _clamp(logf):
    global _clamp_events
    over = np.count_nonzero(logf > LOG_CLAMP)
    if over:
        _clamp_events += int(over)
    return np.minimum(logf, LOG_CLAMP)


@dataclass(frozen=True)
class ProblemSpec:
    """One probability-maximization instance.

    ``eps`` is the assumed lower bound of ``f`` on the feasible set; the
    solvers derive their default ``beta = eps**2`` from it.
    """

    body: ConvexBody
    feasible: FeasibleSet
    m: float = 2.0
    s: float = 0.1
    eps: float = 0.1
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.feasible.n != self.body.n:
            raise GeometryError(
                f"body dimension {self.body.n} != feasible-set dimension {self.feasible.n}"
            )
        if not self.m >= 2:
            raise ValueError(f"PHF degree m must be >= 2, got {self.m}")
        if not self.s > 0:
            raise ValueError(f"smoothing scale s must be positive, got {self.s}")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")

    @property
    def n(self):
        return self.body.n

    @cached_property
    def C(self):
        return normalization_constant(self.body, self.n, self.m)

    @cached_property
    def log_const(self):
        return 0.5 * self.n * math.log(2.0 * math.pi)

    def describe(self):
        return {
            "name": self.name,
            "n": self.n,
            "body": self.body.describe(),
            "feasible": self.feasible.describe(),
            "m": self.m,
            "s": self.s,
            "eps": self.eps,
        }

    def fingerprint(self):
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def normalization_constant(body, n, m):
    """``1 / (Vol(K) * Gamma(1 + n/m))`` via log-Gamma."""
    if not m >= 2:
        raise ValueError(f"m must be >= 2, got {m}")
    return math.exp(-math.log(body.volume()) - special.gammaln(1.0 + n / m))


def _prep(x, xi, spec):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.shape != (spec.n,) or xi.shape[-1:] != (spec.n,):
        raise GeometryError(
            f"dimension mismatch: x{x.shape}, xi{xi.shape}, problem n={spec.n}"
        )
    return x, xi


def integrand_value(x, xi, spec):
    """``F(x, xi)``; ``xi`` may be a single point or a stack of rows."""
    x, xi = _prep(x, xi, spec)
    u = xi @ x
    gauge = spec.body.gauge(xi)
    logf = spec.log_const + 0.5 * np.sum(xi * xi, axis=-1) \
        - np.maximum(np.abs(u) ** spec.m, gauge**spec.m)
    out = np.exp(_clamp(logf))
    return out[()] if out.ndim == 0 else out


def integrand_smooth(x, xi, spec):
    """Smoothed integrand ``F(x, xi; s)``, never larger than ``F(x, xi)``."""
    x, xi = _prep(x, xi, spec)
    m, s = spec.m, spec.s
    u = xi @ x
    a1 = smooth_abs(u, s) ** m
    a2 = spec.body.gauge(xi) ** m
    logf = spec.log_const + 0.5 * np.sum(xi * xi, axis=-1) - smooth_max(a1, a2, s)
    out = np.exp(_clamp(logf))
    return out[()] if out.ndim == 0 else out


def integrand_smooth_grad(x, xi, spec):
    """Gradient of :func:`integrand_smooth` with respect to ``x``."""
    x, xi = _prep(x, xi, spec)
    m, s = spec.m, spec.s
    u = xi @ x
    ell = smooth_abs(u, s)
    a1 = ell**m
    a2 = spec.body.gauge(xi) ** m
    val = integrand_smooth(x, xi, spec)
    w1, _ = smooth_max_grad(a1, a2, s)
    coef = -val * w1 * m * ell ** (m - 1.0) * smooth_abs_grad(u, s)
    return np.asarray(coef)[..., None] * xi
