"""Projected stochastic ascent schemes for maximizing ``f(x; s)``.

* m-SA: one gradient sample and one projection per iteration,
  ``x_{k+1} = P_X(x_k + (gamma_k / beta) g_k)`` with ``gamma_k = gamma0 / k``.
  The reported point is the weighted average with weights ``2 gamma_k / beta``.
* m-ac-VSSA: Nesterov-type momentum with growing batches ``N_k = floor(k^a)``
  and a constant step ``eta``; stops at the largest ``K`` whose cumulative
  batch sizes fit in the budget ``M``.

Gradients are on the scale of ``f`` (see :class:`probmax.oracle.OracleSample`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels as _default_kernels
from .geometry import BallSet
from .oracle import batch_gradient, draw_normals, make_stream, reduce_batch

MSA = "msa"
AC_VSSA = "ac_vssa"
SCHEME_LABELS = {MSA: "m-SA", AC_VSSA: "m-ac-VSSA"}


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class SolverSchedule:
    """Step, batch and budget parameters for one solver configuration.

    ``beta=None`` resolves to ``eps**2`` and ``eta=None`` to ``1 / (2 L)``
    once a Lipschitz estimate ``L`` of the ascent direction ``grad f / beta``
    is known (see :func:`resolve_schedule`).
    """

    scheme: str
    budget: int = 10_000
    gamma0: float = 0.5
    beta: float | None = None
    eta: float | None = None
    a: float | None = None
    lipschitz: float | None = None
    random_start: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEME_LABELS:
            raise ScheduleError(f"unknown scheme {self.scheme!r}; expected 'msa' or 'ac_vssa'")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ScheduleError(f"budget must be a positive integer, got {self.budget}")
        if not self.gamma0 > 0:
            raise ScheduleError("gamma0 must be positive")
        if self.beta is not None and not self.beta > 0:
            raise ScheduleError("beta must be positive")
        if self.eta is not None and not self.eta > 0:
            raise ScheduleError("eta must be positive")
        if self.scheme == AC_VSSA:
            if self.a is None or not self.a > 3:
                raise ScheduleError(f"ac-VSSA requires sample-size exponent a > 3, got {self.a}")
            if self.lipschitz is not None and self.eta is not None \
                    and self.eta > 1.0 / (2.0 * self.lipschitz) * (1 + 1e-12):
                raise ScheduleError(
                    f"eta={self.eta} exceeds 1/(2L) with L={self.lipschitz}"
                )

    @classmethod
    def msa(cls, budget=10_000, gamma0=0.5, beta=None, **kw):
        return cls(MSA, budget=budget, gamma0=gamma0, beta=beta, **kw)

    @classmethod
    def ac_vssa(cls, a, budget=10_000, eta=None, beta=None, **kw):
        return cls(AC_VSSA, budget=budget, a=a, eta=eta, beta=beta, **kw)

    @property
    def label(self):
        return SCHEME_LABELS[self.scheme]

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "budget": self.budget,
            "gamma0": self.gamma0,
            "beta": self.beta,
            "eta": self.eta,
            "a": self.a,
            "lipschitz": self.lipschitz,
            "random_start": self.random_start,
        }


def resolve_schedule(sched, spec, lipschitz=None):
    """Fill in ``beta`` and ``eta`` and check ``beta**2 <= eps**2``."""
    beta = spec.eps**2 if sched.beta is None else sched.beta
    if beta > spec.eps * (1 + 1e-12):
        raise ScheduleError(f"beta={beta} violates beta^2 <= eps^2 (eps={spec.eps})")
    out = replace(sched, beta=beta)
    if sched.scheme == AC_VSSA:
        L = sched.lipschitz
        if L is None and lipschitz is not None:
            # lipschitz is for grad f; the ascent direction is grad f / beta
            L = lipschitz / beta
        eta = sched.eta
        if eta is None:
            if L is None:
                raise ScheduleError("eta not given and no Lipschitz estimate available")
            eta = 1.0 / (2.0 * L)
        out = replace(out, eta=eta, lipschitz=L)
    return out


@dataclass
class IterateTrace:
    """Per-iteration solver state, stored column-wise.

    ``x`` holds ``x_1 .. x_{K+1}``; for ac-VSSA ``y`` holds ``y_1 .. y_{K+1}``
    and ``lam`` holds ``lambda_0 .. lambda_{K+1}``. ``batch[k-1]`` is ``N_k``
    and ``fhat[k-1]`` the oracle's value estimate at ``x_k``.
    """

    scheme: str
    x: np.ndarray
    batch: np.ndarray
    fhat: np.ndarray
    y: np.ndarray | None = None
    lam: np.ndarray | None = None
    weights: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.batch)

    @property
    def projections(self):
        return self.iterations

    @property
    def samples(self):
        return int(self.batch.sum())

    @property
    def cumulative_samples(self):
        return np.cumsum(self.batch)

    @property
    def output(self):
        """The scheme's reported point: averaged iterate or ``y_{K+1}``."""
        if self.scheme == MSA:
            return averaged_iterate(self)
        return self.y[-1].copy()

    def records(self):
        cum = self.cumulative_samples
        for k in range(self.iterations):
            rec = {
                "k": k + 1,
                "x": self.x[k],
                "N": int(self.batch[k]),
                "samples": int(cum[k]),
                "projections": k + 1,
                "fhat": float(self.fhat[k]),
            }
            if self.y is not None:
                rec["y"] = self.y[k]
                rec["lambda"] = float(self.lam[k])
            yield rec

    def running_output(self, k):
        """The point the scheme would report after ``k`` iterations."""
        if self.scheme == MSA:
            w = self.weights[:k]
            return w @ self.x[:k] / w.sum()
        return self.y[k].copy()


@dataclass(frozen=True)
class TheoryConstants:
    """Estimates entering the ac-VSSA error bound ``C_hat / K^2`` (reporting only)."""

    lipschitz: float | None
    diameter: float | None
    gap: float | None = None
    noise_var: float | None = None
    eta: float | None = None
    a: float | None = None

    @property
    def rate_constant(self):
        vals = (self.noise_var, self.eta, self.a, self.diameter)
        if any(v is None for v in vals):
            return None
        return (2.0 * self.noise_var * self.eta * (self.a - 2.0) / (self.a - 3.0)
                + 4.0 * self.diameter**2 / self.eta)


def batch_size(k, a):
    """``floor(k**a)``, exact for integral ``a``."""
    if float(a).is_integer():
        return int(k) ** int(a)
    return math.floor(k**a)


def budget_iterations(a, M):
    """Largest ``K`` with ``sum_{k<=K} floor(k**a) <= M``."""
    total = 0
    K = 0
    while True:
        nxt = batch_size(K + 1, a)
        if total + nxt > M:
            return K
        total += nxt
        K += 1


def lambda_sequence(K):
    """``lambda_0 .. lambda_K`` from ``lambda_0 = 0``."""
    lam = np.zeros(K + 1)
    for k in range(K):
        lam[k + 1] = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * lam[k] ** 2))
    return lam


def averaged_iterate(trace):
    if trace.iterations == 0:
        raise ValueError("empty trace")
    if trace.weights is None:
        raise ValueError("averaged iterate is defined for m-SA traces")
    return trace.running_output(trace.iterations)


def start_point(spec, sched, stream):
    if sched.random_start:
        x = spec.feasible.sample(stream)
    else:
        x = spec.feasible.start_point()
    return spec.feasible.project(x)


def _feasible_args(feasible, n):
    if isinstance(feasible, BallSet):
        return (_default_kernels.FEAS_BALL, np.zeros((1, n)), np.zeros(1),
                np.ascontiguousarray(feasible.center), feasible.radius)
    return (_default_kernels.FEAS_POLYTOPE, np.ascontiguousarray(feasible.A),
            np.ascontiguousarray(feasible.b), np.zeros(n), 0.0)


def run_msa(spec, sched, seed, x1=None, kernels=None):
    """m-SA with ``K = M`` single-sample iterations."""
    if sched.scheme != MSA:
        raise ScheduleError("run_msa needs an m-SA schedule")
    sched = resolve_schedule(sched, spec)
    k = kernels or _default_kernels
    stream = make_stream(*np.atleast_1d(seed))
    x = start_point(spec, sched, stream) if x1 is None else spec.feasible.project(x1)
    M = int(sched.budget)
    gamma = sched.gamma0 / np.arange(1, M + 1)
    step = spec.C * gamma / sched.beta
    xi = draw_normals(stream, M, spec.n)
    fk, A, b, center, radius = _feasible_args(spec.feasible, spec.n)
    xs, fvals = k.msa_loop(
        np.ascontiguousarray(x), xi, step, spec.body.kind, spec.body.kernel_data(),
        spec.m, spec.s, spec.log_const, fk, A, b, center, radius, 1e-12,
    )
    return IterateTrace(
        scheme=MSA,
        x=xs,
        batch=np.ones(M, dtype=np.int64),
        fhat=spec.C * fvals,
        weights=2.0 * gamma / sched.beta,
        meta={"schedule": sched.to_dict()},
    )


def run_ac_vssa(spec, sched, seed, x1=None):
    """Accelerated variable sample-size scheme; ``y_{K+1}`` is the output."""
    if sched.scheme != AC_VSSA:
        raise ScheduleError("run_ac_vssa needs an ac-VSSA schedule")
    sched = resolve_schedule(sched, spec)
    stream = make_stream(*np.atleast_1d(seed))
    x = start_point(spec, sched, stream) if x1 is None else spec.feasible.project(x1)
    K = budget_iterations(sched.a, sched.budget)
    lam = lambda_sequence(K + 1)
    n = spec.n
    xs = np.empty((K + 1, n))
    ys = np.empty((K + 1, n))
    xs[0] = ys[0] = x
    batch = np.empty(K, dtype=np.int64)
    fhat = np.empty(K)
    scale = sched.eta / sched.beta
    for k in range(1, K + 1):
        Nk = batch_size(k, sched.a)
        est = batch_gradient(xs[k - 1], Nk, stream, spec)
        batch[k - 1] = Nk
        fhat[k - 1] = est.value_mean
        ys[k] = spec.feasible.project(xs[k - 1] + scale * est.grad_mean)
        xs[k] = ys[k] + ((lam[k] - 1.0) / lam[k + 1]) * (ys[k] - ys[k - 1])
    return IterateTrace(
        scheme=AC_VSSA, x=xs, y=ys, lam=lam, batch=batch, fhat=fhat,
        meta={"schedule": sched.to_dict()},
    )


def run(spec, sched, seed, x1=None):
    if sched.scheme == MSA:
        return run_msa(spec, sched, seed, x1)
    return run_ac_vssa(spec, sched, seed, x1)


def estimate_lipschitz(spec, stream, pairs=1000, N=10_000):
    """Largest sampled difference quotient of the batch gradient of ``f(.; s)``.

    All points share one batch of draws so each quotient is that of a single
    smooth sample-average function.
    """
    xi = draw_normals(stream, N, spec.n)
    pts = spec.feasible.sample(stream, 2 * pairs)
    best = 0.0
    for i in range(pairs):
        x, y = pts[2 * i], pts[2 * i + 1]
        dist = float(np.linalg.norm(x - y))
        if dist == 0:
            continue
        gx = reduce_batch(x, xi, spec).grad_mean
        gy = reduce_batch(y, xi, spec).grad_mean
        best = max(best, float(np.linalg.norm(gx - gy)) / dist)
    return best
