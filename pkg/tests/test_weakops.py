import numpy as np
import pytest

from wgbiot.checks import mixed_meshes, random_polynomial
from wgbiot.mesh import generate_hybrid, generate_triangular
from wgbiot.problems import problem_poly
from wgbiot.weakops import apply_commutativity_check, build_all, build_element_ops, defining_residual
from wgbiot.weakspace import SpaceInfo


@pytest.fixture(scope="module")
def hybrid_ops():
    mesh = generate_hybrid(2)
    return {j: build_all(mesh, SpaceInfo(j)) for j in (1, 2)}


@pytest.mark.parametrize("j", [1, 2])
def test_defining_identities(hybrid_ops, j):
    worst = max(defining_residual(ops) for ops in hybrid_ops[j])
    assert worst < 1e-11


def test_operator_shapes(hybrid_ops):
    for ops in hybrid_ops[1]:
        m = len(ops.edges)
        assert ops.n_u == 12 + 4 * m
        assert ops.n_p == 3 + m
        assert ops.div.shape == (3, ops.n_u)
        assert ops.grad.shape == (12, ops.n_u)
        assert ops.grad_p.shape == (2, ops.n_p)


def test_divergence_of_linear_field(hybrid_ops):
    for ops in hybrid_ops[1]:
        v = ops.project_u(lambda x: np.column_stack([x[:, 0], np.zeros(len(x))]))
        assert ops.div @ v == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)
        grad = (ops.grad @ v).reshape(4, -1)
        assert grad[:, 0] == pytest.approx([1.0, 0.0, 0.0, 0.0], abs=1e-12)


def test_pressure_gradient_of_linear_field(hybrid_ops):
    for ops in hybrid_ops[1]:
        q = ops.project_p(lambda x: x[:, 0])
        assert ops.grad_p @ q == pytest.approx([1.0, 0.0], abs=1e-12)


def _annihilates(op, x):
    return np.abs(op @ x).max() <= 1e-12 * np.linalg.norm(op) * np.abs(x).max()


@pytest.mark.parametrize("j", [1, 2])
def test_constants_have_zero_weak_derivatives(hybrid_ops, j):
    for ops in hybrid_ops[j]:
        v = ops.project_u(lambda x: np.tile([1.0, 2.0], (len(x), 1)))
        q = ops.project_p(lambda x: np.full(len(x), 3.0))
        assert _annihilates(ops.div, v)
        assert _annihilates(ops.grad, v)
        assert _annihilates(ops.grad_p, q)


def test_commutativity_for_polynomial_fields():
    rng = np.random.default_rng(7)
    for mesh in mixed_meshes():
        ops_list = build_all(mesh, SpaceInfo(1))
        for degree in range(5):
            v, grad_v = random_polynomial(rng, degree, components=2)
            q, grad_q = random_polynomial(rng, degree)
            assert apply_commutativity_check(ops_list, v, grad_v, q, grad_q).worst < 1e-10


def test_commutativity_for_exact_solution():
    problem = problem_poly()
    ops_list = build_all(generate_triangular(4), SpaceInfo(1))
    residual = apply_commutativity_check(
        ops_list,
        lambda x: problem.u(x, 0.0), lambda x: problem.grad_u(x, 0.0),
        lambda x: problem.p(x, 0.0), lambda x: problem.grad_p(x, 0.0))
    assert residual.worst < 1e-9


def test_operators_are_local(hybrid2):
    info = SpaceInfo(1)
    first = build_element_ops(hybrid2, 0, info)
    again = build_element_ops(hybrid2, 0, info)
    assert np.array_equal(first.div, again.div)
    assert np.array_equal(first.grad, again.grad)
    assert np.array_equal(first.grad_p, again.grad_p)

    last = hybrid2.n_cells - 1
    moved = hybrid2.reorder([last] + list(range(last)))
    shifted = build_element_ops(moved, 1, info)
    assert shifted.div == pytest.approx(first.div, rel=1e-14, abs=1e-14)
    assert shifted.grad_p == pytest.approx(first.grad_p, rel=1e-14, abs=1e-14)
