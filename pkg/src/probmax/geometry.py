"""Centrally symmetric convex bodies and closed convex feasible sets.

Bodies carry the closed-form Minkowski gauge, volume and a uniform sampler.
Feasible sets carry the Euclidean projection used by the solvers.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

from ._backend import kernels

MEMBERSHIP_TOL = 1e-12
VOLUME_SAMPLES = 1_000_000
PROBE_SAMPLES = 100_000
MIN_ACCEPTANCE = 1e-4
KKT_TOL = 1e-10


class GeometryError(ValueError):
    """Invalid body or set, or an operation the geometry cannot support."""


def _frozen(a, ndim):
    arr = np.array(a, dtype=float, ndmin=ndim)
    if arr.ndim != ndim:
        raise GeometryError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite entries")
    arr.flags.writeable = False
    return arr


def _as_point(point, n):
    p = np.asarray(point, dtype=float)
    if p.shape[-1:] != (n,):
        raise GeometryError(f"dimension mismatch: expected last axis {n}, got shape {p.shape}")
    return p


def unit_ball_volume(n):
    return math.exp(0.5 * n * math.log(math.pi) - special.gammaln(1.0 + 0.5 * n))


def _stream(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


class ConvexBody:
    """Origin-symmetric compact convex body in R^n."""

    kind: int
    n: int

    def __init__(self, n, volume=None):
        if n < 1:
            raise GeometryError("dimension must be >= 1")
        if volume is not None and not volume > 0:
            raise GeometryError("volume override must be strictly positive")
        self.n = int(n)
        self.volume_override = None if volume is None else float(volume)
        self._volume = None

    # subclasses fill these in
    def gauge(self, xi):
        raise NotImplementedError

    def _exact_volume(self):
        raise NotImplementedError

    def half_widths(self):
        raise NotImplementedError

    def kernel_data(self):
        raise NotImplementedError

    def _sample(self, rng, size):
        raise NotImplementedError

    def volume(self):
        if self.volume_override is not None:
            return self.volume_override
        if self._volume is None:
            self._volume = self._exact_volume()
        return self._volume

    def sample(self, rng, size=None):
        """Uniform draws from the body; shape ``(n,)`` or ``(size, n)``."""
        if size is None:
            return self._sample(rng, 1)[0]
        return self._sample(rng, int(size))

    def contains(self, point, tol=MEMBERSHIP_TOL):
        return self.gauge(point) <= 1.0 + tol

    def describe(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class Ball(ConvexBody):
    kind = kernels.BALL

    def __init__(self, n, radius=1.0, volume=None):
        super().__init__(n, volume)
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        self.radius = float(radius)

    def gauge(self, xi):
        xi = _as_point(xi, self.n)
        return np.linalg.norm(xi, axis=-1) / self.radius

    def _exact_volume(self):
        return self.radius**self.n * unit_ball_volume(self.n)

    def half_widths(self):
        return np.full(self.n, self.radius)

    def kernel_data(self):
        return np.array([[1.0 / self.radius]])

    def _sample(self, rng, size):
        d = rng.standard_normal((size, self.n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rad = self.radius * rng.random(size) ** (1.0 / self.n)
        return d * rad[:, None]

    def describe(self):
        return {"type": "ball", "n": self.n, "radius": self.radius}


class Box(ConvexBody):
    kind = kernels.BOX

    def __init__(self, half_widths, volume=None):
        w = _frozen(half_widths, 1)
        super().__init__(w.size, volume)
        if not np.all(w > 0):
            raise GeometryError("box half-widths must be positive")
        self.widths = w

    def gauge(self, xi):
        xi = _as_point(xi, self.n)
        return np.max(np.abs(xi) / self.widths, axis=-1)

    def _exact_volume(self):
        return float(np.prod(2.0 * self.widths))

    def half_widths(self):
        return self.widths.copy()

    def kernel_data(self):
        return (1.0 / self.widths)[None, :].copy()

    def _sample(self, rng, size):
        return rng.uniform(-1.0, 1.0, (size, self.n)) * self.widths

    def describe(self):
        return {"type": "box", "half_widths": self.widths.tolist()}


class Ellipsoid(ConvexBody):
    """``{xi : xi^T Q xi <= 1}`` for symmetric positive-definite ``Q``."""

    kind = kernels.ELLIPSOID

    def __init__(self, shape, volume=None):
        Q = _frozen(shape, 2)
        if Q.shape[0] != Q.shape[1]:
            raise GeometryError("shape matrix must be square")
        super().__init__(Q.shape[0], volume)
        if not np.allclose(Q, Q.T, rtol=1e-12, atol=1e-14):
            raise GeometryError("shape matrix must be symmetric")
        evals, evecs = np.linalg.eigh(Q)
        if evals[0] <= 0:
            raise GeometryError("shape matrix must be positive definite")
        self.Q = Q
        self._evals = evals
        # maps the unit ball onto the ellipsoid
        self._inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T

    def gauge(self, xi):
        xi = _as_point(xi, self.n)
        q = np.einsum("...i,ij,...j->...", xi, self.Q, xi)
        return np.sqrt(np.maximum(q, 0.0))

    def _exact_volume(self):
        return float(np.prod(self._evals) ** -0.5 * unit_ball_volume(self.n))

    def half_widths(self):
        return np.sqrt(np.diag(np.linalg.inv(self.Q)))

    def kernel_data(self):
        return np.ascontiguousarray(self.Q)

    def _sample(self, rng, size):
        return Ball(self.n)._sample(rng, size) @ self._inv_sqrt.T

    def describe(self):
        return {"type": "ellipsoid", "shape": self.Q.tolist()}


class SymPolytope(ConvexBody):
    """``{xi : |a_i^T xi| <= 1 for every row a_i}``."""

    kind = kernels.POLYTOPE

    def __init__(self, rows, volume=None, seed=0):
        a = _frozen(rows, 2)
        super().__init__(a.shape[1], volume)
        if np.linalg.matrix_rank(a) < self.n:
            raise GeometryError("polytope rows must span R^n (body would be unbounded)")
        self.rows = a
        self.seed = seed
        self._widths = None
        self._rate = None
        self.volume_se = 0.0 if volume is not None else None

    def gauge(self, xi):
        xi = _as_point(xi, self.n)
        return np.max(np.abs(xi @ self.rows.T), axis=-1)

    def half_widths(self):
        if self._widths is None:
            A_ub = np.vstack([self.rows, -self.rows])
            b_ub = np.ones(2 * len(self.rows))
            w = np.empty(self.n)
            for i in range(self.n):
                c = np.zeros(self.n)
                c[i] = -1.0
                res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub,
                                       bounds=[(None, None)] * self.n, method="highs")
                if res.status != 0:
                    raise GeometryError(f"bounding-box LP failed on axis {i}: {res.message}")
                w[i] = -res.fun
            self._widths = w
        return self._widths.copy()

    def _exact_volume(self):
        w = self.half_widths()
        box_vol = float(np.prod(2.0 * w))
        rng = _stream(self.seed, 0x766F6C)
        hits = 0
        remaining = VOLUME_SAMPLES
        while remaining:
            k = min(remaining, 1 << 16)
            pts = rng.uniform(-1.0, 1.0, (k, self.n)) * w
            hits += int(np.count_nonzero(self.contains(pts)))
            remaining -= k
        p = hits / VOLUME_SAMPLES
        rel_se = math.sqrt((1.0 - p) / (p * VOLUME_SAMPLES)) if p > 0 else math.inf
        if rel_se > 0.01:
            raise GeometryError(
                f"Monte-Carlo volume relative standard error {rel_se:.3g} exceeds 1%; "
                "pass volume= to override"
            )
        self.volume_se = box_vol * math.sqrt(p * (1.0 - p) / VOLUME_SAMPLES)
        return box_vol * p

    def acceptance_rate(self):
        if self._rate is None:
            w = self.half_widths()
            rng = _stream(self.seed, 0x70726F)
            pts = rng.uniform(-1.0, 1.0, (PROBE_SAMPLES, self.n)) * w
            self._rate = np.count_nonzero(self.contains(pts)) / PROBE_SAMPLES
        return self._rate

    def kernel_data(self):
        return np.ascontiguousarray(self.rows)

    def _sample(self, rng, size):
        rate = self.acceptance_rate()
        if rate < MIN_ACCEPTANCE:
            raise GeometryError(
                f"rejection acceptance rate {rate:.2e} below {MIN_ACCEPTANCE:g}; body too thin"
            )
        w = self.half_widths()
        out = np.empty((size, self.n))
        filled = 0
        while filled < size:
            want = size - filled
            k = int(min(max(1.2 * want / rate, 64), 1 << 20))
            pts = rng.uniform(-1.0, 1.0, (k, self.n)) * w
            pts = pts[self.contains(pts)][:want]
            out[filled:filled + len(pts)] = pts
            filled += len(pts)
        return out

    def describe(self):
        d = {"type": "sym_polytope", "rows": self.rows.tolist()}
        if self.volume_override is not None:
            d["volume"] = self.volume_override
        return d


class FeasibleSet:
    """Closed convex set ``X`` with Euclidean projection."""

    n: int

    def project(self, y):
        raise NotImplementedError

    def contains(self, x, tol=1e-9):
        raise NotImplementedError

    def start_point(self):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def diameter(self):
        raise NotImplementedError


class BallSet(FeasibleSet):
    """``{x : ||x - center|| <= radius}``."""

    def __init__(self, center, radius):
        self.center = _frozen(center, 1)
        self.n = self.center.size
        if not radius > 0:
            raise GeometryError("radius must be positive")
        self.radius = float(radius)

    def project(self, y):
        y = _as_point(y, self.n).astype(float)
        if y.ndim != 1:
            return np.array([self.project(row) for row in y])
        return _project_ball(self.center, self.radius, y)

    def contains(self, x, tol=1e-9):
        x = _as_point(x, self.n)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius + tol

    def start_point(self):
        return np.array(self.center)

    def sample(self, rng, size=None):
        pts = Ball(self.n, self.radius).sample(rng, 1 if size is None else size) + self.center
        return pts[0] if size is None else pts

    def diameter(self):
        return 2.0 * self.radius

    def describe(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


def _project_ball(center, radius, y):
    d = y - center
    norm = float(np.linalg.norm(d))
    if norm <= radius:
        return y.copy()
    return center + (radius / norm) * d


class PolytopeSet(FeasibleSet):
    """``{x : A x <= b}``; rows are normalised to unit length internally."""

    def __init__(self, A, b):
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float, ndmin=1)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise GeometryError(f"incompatible shapes A{A.shape}, b{b.shape}")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise GeometryError("zero row in A")
        self.A_raw = _frozen(A, 2)
        self.b_raw = _frozen(b, 1)
        self.A = _frozen(A / norms[:, None], 2)
        self.b = _frozen(b / norms, 1)
        self.n = A.shape[1]
        self.interior_point, self.inradius = self._chebyshev_center()
        self._box = None

    def _chebyshev_center(self):
        # max r s.t. a_i^T x + r <= b_i, with r capped so half-spaces stay bounded
        p, n = self.A.shape
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.A, np.ones((p, 1))])
        res = optimize.linprog(c, A_ub=A_ub, b_ub=self.b,
                               bounds=[(None, None)] * n + [(0.0, 1.0)], method="highs")
        if res.status != 0:
            raise GeometryError(f"polytope is empty (no feasible point): {res.message}")
        x = res.x[:n]
        x.flags.writeable = False
        return x, float(res.x[-1])

    def project(self, y):
        y = _as_point(y, self.n).astype(float)
        if y.ndim != 1:
            return np.array([self.project(row) for row in y])
        x, lam, status = kernels.project_polytope(self.A, self.b, y)
        if status == 1:
            raise GeometryError("polytope constraints are inconsistent")
        if status != 0:
            raise GeometryError(f"projection did not converge (status {status})")
        return x

    def project_with_multipliers(self, y):
        y = _as_point(y, self.n).astype(float)
        x, lam, status = kernels.project_polytope(self.A, self.b, y)
        if status != 0:
            raise GeometryError(f"projection failed (status {status})")
        return x, lam

    def kkt_residual(self, y, x, lam):
        """Largest violation among primal feasibility, stationarity and complementarity."""
        slack = self.A @ x - self.b
        primal = max(0.0, float(slack.max()))
        station = float(np.abs(x - y + self.A.T @ lam).max())
        comp = float(np.abs(lam * slack).max())
        dual = max(0.0, float(-lam.min()))
        return max(primal, station, comp, dual)

    def contains(self, x, tol=1e-9):
        x = _as_point(x, self.n)
        return np.all(x @ self.A.T <= self.b + tol, axis=-1)

    def start_point(self):
        return np.array(self.interior_point)

    def bounds(self):
        if self._box is None:
            lo = np.empty(self.n)
            hi = np.empty(self.n)
            for i in range(self.n):
                for sign, out in ((1.0, lo), (-1.0, hi)):
                    c = np.zeros(self.n)
                    c[i] = sign
                    res = optimize.linprog(c, A_ub=self.A, b_ub=self.b,
                                           bounds=[(None, None)] * self.n, method="highs")
                    if res.status != 0:
                        raise GeometryError("feasible polytope is unbounded")
                    out[i] = res.x[i]
            self._box = (lo, hi)
        return self._box

    def sample(self, rng, size=None):
        lo, hi = self.bounds()
        k = 1 if size is None else int(size)
        out = np.empty((k, self.n))
        filled = 0
        while filled < k:
            pts = rng.uniform(lo, hi, (max(4 * (k - filled), 64), self.n))
            pts = pts[self.contains(pts, tol=0.0)][: k - filled]
            out[filled:filled + len(pts)] = pts
            filled += len(pts)
        return out[0] if size is None else out

    def diameter(self):
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def describe(self):
        return {"type": "polytope", "A": self.A_raw.tolist(), "b": self.b_raw.tolist()}


def minkowski_gauge(body, point):
    """``inf{t > 0 : point / t in body}``."""
    return body.gauge(point)


def volume(body):
    return body.volume()


def sample_uniform(body, generator, size=None):
    return body.sample(generator, size)


def contains(body, point):
    return body.contains(point)


def project(feasible, point):
    """Euclidean projection of ``point`` onto ``feasible``."""
    return feasible.project(point)


def bounding_box(body):
    """Smallest origin-centred axis-aligned box containing ``body``."""
    return Box(body.half_widths())
