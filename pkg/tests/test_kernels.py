import numpy as np
import pytest

from probmax import Ball, Box, Ellipsoid, SymPolytope
from probmax._backend import BACKEND, available, load
from probmax.harness.examples import EXAMPLE1_A, EXAMPLE1_B, example1
from probmax.oracle import make_stream, reduce_batch
from probmax.solvers import SolverSchedule, run_msa

BACKENDS = available()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def test_backend_selection():
    assert BACKEND in BACKENDS
    with pytest.raises(ValueError):
        load("fortran")


BODIES = [Ball(3), Box([0.5, 1.0, 2.0]),
          Ellipsoid([[2.0, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 0.5]]),
          SymPolytope([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])]


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("body", BODIES, ids=repr)
def test_gauge_rows_match_body(name, body):
    k = load(name)
    xi = make_stream(1).standard_normal((100, 3))
    np.testing.assert_allclose(k.gauge_rows(body.kind, body.kernel_data(), xi),
                               body.gauge(xi), rtol=1e-13)


@needs_both
@pytest.mark.parametrize("body", BODIES, ids=repr)
def test_batches_agree_across_backends(body):
    cy, py = load("cython"), load("python")
    x = np.array([0.4, -0.7, 1.1])
    xi = make_stream(2).standard_normal((2048, 3)) * 1.5
    args = (body.kind, body.kernel_data(), 2.0)
    v1, c1 = cy.plain_batch(x, xi, *args, 2.7)
    v2, c2 = py.plain_batch(x, xi, *args, 2.7)
    np.testing.assert_allclose(v1, v2, rtol=1e-12)
    assert c1 == c2
    r1 = cy.smooth_batch(x, xi, *args, 0.1, 2.7)
    r2 = py.smooth_batch(x, xi, *args, 0.1, 2.7)
    for a, b in zip(r1[:3], r2[:3]):
        np.testing.assert_allclose(a, b, rtol=1e-11)
    assert r1[3] == r2[3]


@needs_both
def test_reduction_agrees_across_backends():
    spec = example1()
    x = np.array([0.6, 0.7, 0.5])
    xi = make_stream(3).standard_normal((10_000, 3))
    a = reduce_batch(x, xi, spec, kernels=load("cython"))
    b = reduce_batch(x, xi, spec, kernels=load("python"))
    assert a.value_mean == pytest.approx(b.value_mean, rel=1e-12)
    np.testing.assert_allclose(a.grad_mean, b.grad_mean, rtol=1e-10)


@needs_both
def test_polytope_projection_agrees_across_backends():
    cy, py = load("cython"), load("python")
    A = EXAMPLE1_A / np.linalg.norm(EXAMPLE1_A, axis=1)[:, None]
    b = EXAMPLE1_B / np.linalg.norm(EXAMPLE1_A, axis=1)
    for y in make_stream(4).normal(0.0, 3.0, (200, 3)):
        x1, l1, s1 = cy.project_polytope(A, b, y)
        x2, l2, s2 = py.project_polytope(A, b, y)
        assert s1 == s2 == 0
        np.testing.assert_allclose(x1, x2, atol=1e-12)
        np.testing.assert_allclose(l1, l2, atol=1e-10)


@pytest.mark.parametrize("name", BACKENDS)
def test_projection_reports_inconsistent_constraints(name):
    k = load(name)
    A = np.array([[1.0, 0.0], [-1.0, 0.0]])
    b = np.array([-1.0, -1.0])
    _, _, status = k.project_polytope(A, b, np.array([0.0, 0.0]))
    assert status != 0


@needs_both
def test_msa_loop_agrees_across_backends():
    spec = example1()
    sched = SolverSchedule.msa(budget=3000)
    a = run_msa(spec, sched, seed=5, kernels=load("cython"))
    b = run_msa(spec, sched, seed=5, kernels=load("python"))
    np.testing.assert_allclose(a.x, b.x, atol=1e-10)
    np.testing.assert_allclose(a.fhat, b.fhat, rtol=1e-10)
