"""High-budget reference solutions used as the comparator for solver errors."""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ..oracle import draw_normals, hit_or_miss_probability, make_stream, reduce_batch
from ..solvers import estimate_lipschitz

REFERENCE_VERSION = 1


class ReferenceWarning(UserWarning):
    pass


@dataclass
class Reference:
    x_star: list
    f_star: float
    f_star_se: float
    fs_star: float
    steps: int
    converged: bool
    lipschitz: float
    fingerprint: str
    seed: int
    batch: int
    eval_samples: int

    @property
    def point(self):
        return np.array(self.x_star)

    def to_dict(self):
        return asdict(self)


def compute_reference(spec, seed=0, batch=1_000_000, max_steps=500, tol=1e-6,
                      eval_samples=10_000_000, lipschitz=None, lipschitz_pairs=1000,
                      lipschitz_batch=10_000):
    """Projected gradient ascent on a fixed sample average of ``f(.; s)``.

    The step is ``1 / (2 L)``. Stops when an update moves less than ``tol``;
    after ``max_steps`` it warns and returns the best iterate seen. The
    reported ``f_star`` is a hit-or-miss estimate at the final point.
    """
    if lipschitz is None:
        lipschitz = estimate_lipschitz(spec, make_stream(seed, 1),
                                       pairs=lipschitz_pairs, N=lipschitz_batch)
    step = 1.0 / (2.0 * lipschitz)
    xi = draw_normals(make_stream(seed, 2), batch, spec.n)
    x = spec.feasible.project(spec.feasible.start_point())
    best_x, best_val = x, -np.inf
    converged = False
    steps = 0
    for steps in range(1, max_steps + 1):
        est = reduce_batch(x, xi, spec)
        if est.value_mean > best_val:
            best_x, best_val = x, est.value_mean
        x_new = spec.feasible.project(x + step * est.grad_mean)
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved <= tol:
            converged = True
            break
    final_val = reduce_batch(x, xi, spec).value_mean
    if final_val >= best_val:
        best_x, best_val = x, final_val
    if not converged:
        warnings.warn(
            f"reference ascent for {spec.name} did not converge in {max_steps} steps; "
            "returning the best iterate",
            ReferenceWarning,
            stacklevel=2,
        )
    f_star, se = hit_or_miss_probability(best_x, eval_samples, make_stream(seed, 3), spec)
    return Reference(
        x_star=[float(v) for v in best_x],
        f_star=f_star,
        f_star_se=se,
        fs_star=float(best_val),
        steps=steps,
        converged=converged,
        lipschitz=float(lipschitz),
        fingerprint=spec.fingerprint(),
        seed=int(seed),
        batch=int(batch),
        eval_samples=int(eval_samples),
    )


def cache_key(spec, seed, batch, max_steps, tol, eval_samples):
    return f"ref-{spec.fingerprint()}-s{seed}-b{batch}-k{max_steps}-t{tol:g}-e{eval_samples}-v{REFERENCE_VERSION}"


def save_reference(ref, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(ref.to_dict(), fh, indent=2)
        fh.write("\n")


def load_reference(path, spec=None):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    ref = Reference(**d)
    if spec is not None and ref.fingerprint != spec.fingerprint():
        raise ValueError(
            f"cached reference {path} belongs to problem {ref.fingerprint}, "
            f"not {spec.fingerprint()}"
        )
    return ref


def cached_reference(spec, cache_dir, seed=0, batch=1_000_000, max_steps=500, tol=1e-6,
                     eval_samples=10_000_000, **kw):
    """Load the reference from ``cache_dir`` or compute and store it there."""
    key = cache_key(spec, seed, batch, max_steps, tol, eval_samples)
    path = os.path.join(cache_dir, key + ".json")
    if os.path.exists(path):
        return load_reference(path, spec)
    ref = compute_reference(spec, seed=seed, batch=batch, max_steps=max_steps, tol=tol,
                            eval_samples=eval_samples, **kw)
    save_reference(ref, path)
    return ref
