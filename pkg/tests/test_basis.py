import numpy as np
import pytest

from wgbiot.basis import PolySpace, Projector, dim_pk, mass_matrix, monomial_exponents, project
from wgbiot.quadrature import cell_rule, edge_rule


def _square(h):
    return h * np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _space(coords, degree, components=1):
    center = coords.mean(axis=0)
    scale = float(np.max(np.linalg.norm(coords[:, None] - coords[None], axis=-1)))
    return PolySpace(degree, "cell", center, scale, components)


@pytest.mark.parametrize("degree, dim", [(-1, 0), (0, 1), (1, 3), (2, 6), (3, 10)])
def test_dim_pk(degree, dim):
    assert dim_pk(degree) == dim
    assert len(monomial_exponents(max(degree, 0))) == dim_pk(max(degree, 0))


def test_constant_mass_is_area(hybrid2):
    for k in range(hybrid2.n_cells):
        space = PolySpace.on_cell(hybrid2, k, 0)
        rule = cell_rule(hybrid2.cell_vertices(k), 2)
        assert mass_matrix(space, rule)[0, 0] == pytest.approx(hybrid2.areas[k], rel=1e-14)


def test_vector_mass_is_block_diagonal(hybrid2):
    space = PolySpace.on_cell(hybrid2, 0, 2, 2)
    rule = cell_rule(hybrid2.cell_vertices(0), 6)
    m = mass_matrix(space, rule)
    n = space.scalar_dim
    assert m.shape == (2 * n, 2 * n)
    assert np.array_equal(m[:n, n:], np.zeros((n, n)))
    assert np.array_equal(m[:n, :n], m[n:, n:])


def test_projection_reproduces_polynomials(rng):
    coords = _square(0.25)
    space = _space(coords, 2)
    rule = cell_rule(coords, 6)
    c = rng.normal(size=6)

    def f(x):
        return space.values(c, x)

    assert project(f, space, rule) == pytest.approx(c, abs=1e-11)


def test_projection_residual_is_orthogonal():
    coords = _square(0.5)
    space = _space(coords, 2)
    rule = cell_rule(coords, 12)
    c = project(lambda x: np.sin(3 * x[:, 0]) * np.exp(x[:, 1]), space, rule)
    residual = (np.sin(3 * rule.points[:, 0]) * np.exp(rule.points[:, 1])
                - space.values(c, rule.points))
    moments = space.evaluate(rule.points).T @ (rule.weights * residual)
    assert np.abs(moments).max() < 1e-14


def test_higher_degree_approximates_better():
    coords = _square(1.0)
    rule = cell_rule(coords, 14)

    def f(x):
        return np.cos(2 * x[:, 0] + x[:, 1])

    errors = []
    for degree in range(4):
        space = _space(coords, degree)
        c = project(f, space, rule)
        diff = f(rule.points) - space.values(c, rule.points)
        errors.append(np.sqrt(rule.integrate(diff ** 2)))
    assert all(a > b for a, b in zip(errors, errors[1:]))


def test_mass_conditioning_is_scale_invariant():
    big, small = _square(1.0), _square(1.0 / 64)
    cond_big = np.linalg.cond(mass_matrix(_space(big, 2), cell_rule(big, 4)))
    cond_small = np.linalg.cond(mass_matrix(_space(small, 2), cell_rule(small, 4)))
    assert cond_small == pytest.approx(cond_big, rel=1e-6)


def test_vector_projection_returns_component_blocks():
    coords = _square(1.0)
    space = _space(coords, 1, components=2)
    rule = cell_rule(coords, 4)
    c = Projector(space, rule)(lambda x: np.column_stack([np.ones(len(x)), 2 * np.ones(len(x))]))
    assert c == pytest.approx([1.0, 0.0, 0.0, 2.0, 0.0, 0.0], abs=1e-13)


def test_edge_basis_uses_global_direction(tri2):
    e = int(np.flatnonzero(~tri2.is_boundary)[0])
    space = PolySpace.on_edge(tri2, e, 1)
    a, b = tri2.edge_endpoints(e)
    values = space.evaluate(np.array([a, b]))
    assert values[:, 1] == pytest.approx([-0.5, 0.5])
    rule = edge_rule(a, b, 2)
    assert mass_matrix(space, rule)[0, 0] == pytest.approx(tri2.edge_lengths[e])


def test_edge_space_has_no_gradient(tri2):
    with pytest.raises(ValueError):
        PolySpace.on_edge(tri2, 0, 1).gradient(np.zeros((1, 2)))


def test_component_mismatch_rejected():
    coords = _square(1.0)
    with pytest.raises(ValueError, match="components"):
        project(lambda x: np.ones((len(x), 2)), _space(coords, 1), cell_rule(coords, 2))
