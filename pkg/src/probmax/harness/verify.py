"""Property and oracle checks for the reformulation and its estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..geometry import Ball
from ..integrand import integrand_smooth, integrand_smooth_grad
from ..oracle import (draw_normals, estimate_f, gradient_check, hit_or_miss_probability,
                      make_stream, reduce_batch)
from ..smoothing import smooth_max
from .examples import example1

TAG_VERIFY = 21


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: float | None = None

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _stream(seed, *idx):
    return make_stream(TAG_VERIFY, seed, *idx)


def volume_from_gauge(body, m, N, stream):
    """``(1 / Gamma(1 + n/m)) * integral of exp(-||xi||_K^m)`` by Gaussian importance sampling.

    Returns ``(estimate, standard error)``; the target is ``Vol(K)``.
    """
    n = body.n
    z = draw_normals(stream, N, n)
    logw = 0.5 * n * math.log(2.0 * math.pi) + 0.5 * np.sum(z * z, axis=1) - body.gauge(z) ** m
    w = np.exp(logw) / special.gamma(1.0 + n / m)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(N))


def check_volume_identity(seed=0, N=1_000_000):
    est, se = volume_from_gauge(Ball(2), 2.0, N, _stream(seed, 1))
    rel = abs(est - math.pi) / math.pi
    return CheckResult("volume identity (unit disk, m=2)", rel <= 0.01,
                       f"estimate {est:.6f} vs pi, relative gap {rel:.2e} (SE {se:.1e})", rel)


def check_sandwich(seed=0, pairs=10_000, scales=(1e-3, 1e-1, 1.0)):
    rng = _stream(seed, 2)
    u = rng.uniform(-10.0, 10.0, size=(pairs, 2))
    bad = 0
    for s in scales:
        top = np.maximum(u[:, 0], u[:, 1])
        gap = smooth_max(u[:, 0], u[:, 1], s) - top
        # one rounding of the sum at the magnitude of the result
        slack = 2.0 * np.spacing(np.abs(top) + s)
        bad += int(np.count_nonzero((gap < 0) | (gap > s * math.log(2.0) + slack)))
    return CheckResult("smoothing sandwich", bad == 0,
                       f"{bad} violations over {pairs} pairs x {len(scales)} scales", bad)


def check_origin(seed=0, N=100_000, spec=None):
    spec = spec or example1()
    est = estimate_f(np.zeros(spec.n), N, _stream(seed, 3), spec, smooth=False)
    z = abs(est.value_mean - 1.0) / est.value_se if est.value_se else 0.0
    return CheckResult("f(0) = 1", z <= 3.0,
                       f"{est.value_mean:.6f} (SE {est.value_se:.1e}, {z:.2f} SE)", z)


def check_cap(seed=0, N=1_000_000):
    """``f((2,0,0)) = 11/16`` on the unit ball of R^3 by both estimators."""
    spec = example1()
    x = np.array([2.0, 0.0, 0.0])
    target = 11.0 / 16.0
    est = estimate_f(x, N, _stream(seed, 4), spec, smooth=False)
    p, se = hit_or_miss_probability(x, N, _stream(seed, 5), spec)
    z1 = abs(est.value_mean - target) / est.value_se
    z2 = abs(p - target) / se
    return CheckResult("spherical cap f((2,0,0)) = 11/16", max(z1, z2) <= 3.0,
                       f"gaussian {est.value_mean:.5f} ({z1:.2f} SE), "
                       f"hit-or-miss {p:.5f} ({z2:.2f} SE)", max(z1, z2))


def check_unit_region(seed=0, N=100_000, points=10):
    """Hit-or-miss gives exactly 1 for points of norm at most 1."""
    spec = example1()
    rng = _stream(seed, 6)
    worst = 1.0
    for i in range(points):
        d = rng.standard_normal(3)
        x = d / np.linalg.norm(d) * rng.uniform(0.0, 1.0)
        p, _ = hit_or_miss_probability(x, N, _stream(seed, 7, i), spec)
        worst = min(worst, p)
    return CheckResult("f(x) = 1 for |x| <= 1", worst == 1.0,
                       f"smallest estimate {worst!r} over {points} points", worst)


def pointwise_gradient_error(spec, x, z, step=1e-6):
    """Gap between the analytic gradient of ``F(x, z; s)`` and central differences.

    The gap is divided by ``max(|fd|, F * |z|)``. The second term is the size
    of a gradient whose softmax weight is one; when the weight is tiny the true
    gradient sits below what differences of ``F`` can resolve, and a plain
    relative error would only measure rounding noise.
    """
    g = integrand_smooth_grad(x, z, spec)
    fd = np.empty(spec.n)
    for i in range(spec.n):
        e = np.zeros(spec.n)
        e[i] = step
        fd[i] = (integrand_smooth(x + e, z, spec) - integrand_smooth(x - e, z, spec)) / (2 * step)
    scale = max(float(np.max(np.abs(fd))),
                float(integrand_smooth(x, z, spec) * np.max(np.abs(z))))
    return float(np.max(np.abs(g - fd))) / scale if scale > 0 else 0.0


def check_pointwise_gradient(seed=0, count=20, step=1e-6):
    spec = example1()
    rng = _stream(seed, 8)
    xs = spec.feasible.sample(rng, count)
    zs = rng.standard_normal((count, spec.n))
    worst = max(pointwise_gradient_error(spec, x, z, step) for x, z in zip(xs, zs))
    return CheckResult("integrand gradient vs finite differences", worst <= 1e-5,
                       f"max relative error {worst:.2e} at {count} points", worst)


def check_batch_gradient(seed=0, N=100_000, points=3):
    spec = example1()
    rng = _stream(seed, 9)
    xs = [spec.feasible.start_point()] + list(spec.feasible.sample(rng, points - 1))
    worst = max(gradient_check(x, spec, N, _stream(seed, 10, i)) for i, x in enumerate(xs))
    return CheckResult("batch gradient vs finite differences of the estimate", worst <= 1e-3,
                       f"max relative error {worst:.2e} at N={N}", worst)


def cross_oracle_agreement(spec, points, seed=0, N_gauss=100_000, N_hit=1_000_000):
    """Per-point ``|gaussian - hit_or_miss| / combined SE``."""
    zs = []
    for i, x in enumerate(points):
        est = estimate_f(x, N_gauss, _stream(seed, 11, i), spec, smooth=False)
        p, se = hit_or_miss_probability(x, N_hit, _stream(seed, 12, i), spec)
        combined = math.sqrt(est.value_se**2 + se**2)
        zs.append(abs(est.value_mean - p) / combined if combined else 0.0)
    return np.array(zs)


def check_cross_oracle(seed=0, count=30, required=28):
    spec = example1()
    pts = spec.feasible.sample(_stream(seed, 13), count)
    z = cross_oracle_agreement(spec, pts, seed)
    good = int(np.count_nonzero(z <= 4.0))
    return CheckResult("gaussian vs hit-or-miss estimator", good >= required,
                       f"{good}/{count} points within 4 combined SE (max {z.max():.2f})", good)


def grid_points(feasible, per_axis=20):
    lo, hi = feasible.bounds()
    axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def reciprocal_grid_check(spec=None, per_axis=20, N=10_000, seed=0):
    """Grid argmax of the estimated ``f`` against grid argmin of its reciprocal.

    Only grid points inside the feasible set are used, and one batch of
    normals is shared by all of them. Both the smoothed and
    the plain estimates are checked. Returns ``(agree, details)``.
    """
    spec = spec or example1()
    pts = grid_points(spec.feasible, per_axis)
    pts = pts[np.array([spec.feasible.contains(p) for p in pts])]
    xi = draw_normals(_stream(seed, 14), N, spec.n)
    details = {}
    agree = True
    for smooth in (True, False):
        vals = np.array([reduce_batch(x, xi, spec, smooth=smooth).value_mean for x in pts])
        with np.errstate(divide="ignore"):
            recip = 1.0 / vals
        i_max, i_min = int(np.argmax(vals)), int(np.argmin(recip))
        key = "smoothed" if smooth else "plain"
        details[key] = {"argmax": i_max, "argmin_reciprocal": i_min,
                        "point": pts[i_max].tolist(), "value": float(vals[i_max])}
        agree &= i_max == i_min
    return agree, details


def check_reciprocal_argmax(seed=0, per_axis=20, N=10_000):
    agree, d = reciprocal_grid_check(per_axis=per_axis, N=N, seed=seed)
    return CheckResult(f"argmax f = argmin 1/f on a {per_axis}^3 grid", agree,
                       f"smoothed index {d['smoothed']['argmax']}/{d['smoothed']['argmin_reciprocal']}, "
                       f"plain index {d['plain']['argmax']}/{d['plain']['argmin_reciprocal']}")


CHECKS = (check_volume_identity, check_sandwich, check_origin, check_cap, check_unit_region,
          check_pointwise_gradient, check_batch_gradient, check_cross_oracle, check_reciprocal_argmax)


def run_verify(seed=0):
    return [check(seed=seed) for check in CHECKS]
