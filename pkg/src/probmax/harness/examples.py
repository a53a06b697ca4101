"""Built-in problem instances."""

import numpy as np

from ..geometry import Ball, BallSet, PolytopeSet
from ..integrand import ProblemSpec

EXAMPLE1_A = np.array([
    [1.0, 1.0, 1.0],
    [-1.0, 0.0, 0.0],
    [-1.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, -1.0, 1.0],
    [0.0, 0.0, -1.0],
])
EXAMPLE1_B = np.array([3.0, -0.1, 2.0, -0.2, 1.0, -0.1])

EXAMPLE2_DIMS = (4, 5, 6, 7, 8)


def example1(m=2.0, s=0.1, eps=0.1):
    """Polytope ``{Ax <= b}`` in R^3, uniform uncertainty on the unit ball."""
    return ProblemSpec(Ball(3), PolytopeSet(EXAMPLE1_A, EXAMPLE1_B),
                       m=m, s=s, eps=eps, name="example1")


def example2(n, m=2.0, s=0.1, eps=0.1):
    """Unit ball around ``1.2 * ones(n)`` with the unit-ball uncertainty set."""
    return ProblemSpec(Ball(n), BallSet(np.full(n, 1.2), 1.0),
                       m=m, s=s, eps=eps, name=f"example2_n{n}")


def builtin_examples():
    """``[(name, spec)]`` for Example 1 and Example 2 at every tabulated dimension."""
    out = [("example1", example1())]
    out += [(f"example2_n{n}", example2(n)) for n in EXAMPLE2_DIMS]
    return out
