import numpy as np
import pytest

from wgbiot.basis import PolySpace
from wgbiot.mesh import NEUMANN_P, generate_rectangular, generate_triangular
from wgbiot.weakspace import (DISPLACEMENT, PRESSURE, SpaceInfo, WeakFunction, build_spaces,
                              interpolate)


def test_single_triangle_counts(single_triangle):
    dofs, info = build_spaces(single_triangle, 1)
    assert info.u_cell == 12
    assert info.p_cell == 3
    assert dofs.total == 15
    assert dofs.block_sizes == {"u_interior": 12, "u_trace": 0, "p_interior": 3, "p_trace": 0}


def test_two_by_two_triangulation_has_160_dofs(tri2):
    dofs, _ = build_spaces(tri2, 1)
    assert dofs.total == 160


@pytest.mark.parametrize("j", [1, 2, 3])
def test_dof_count_formula(j):
    mesh = generate_rectangular(3)
    dofs, info = build_spaces(mesh, j)
    interior_edges = int((~mesh.is_boundary).sum())
    expected = (mesh.n_cells * (2 * (j + 2) * (j + 3) // 2 + (j + 1) * (j + 2) // 2)
                + interior_edges * (2 * (j + 1) + j))
    assert dofs.total == expected


def test_neumann_edges_add_pressure_traces():
    mesh = generate_triangular(2)
    tagged = mesh.with_pressure_tags(NEUMANN_P)
    plain, _ = build_spaces(mesh, 2)
    free, _ = build_spaces(tagged, 2)
    assert free.n_u == plain.n_u
    assert free.n_p - plain.n_p == 2 * int(mesh.is_boundary.sum())


def test_j2_interior_size():
    assert SpaceInfo(2).u_cell == 20
    assert SpaceInfo(2).p_edge == 2


@pytest.mark.parametrize("j", [0, -1, 1.0, True])
def test_unsupported_degree(tri2, j):
    with pytest.raises(ValueError):
        build_spaces(tri2, j)


def test_gather_scatter_inverse(hybrid2, rng):
    dofs, _ = build_spaces(hybrid2.with_pressure_tags(NEUMANN_P), 2)
    x = rng.normal(size=dofs.total)
    u, p = dofs.scatter(x)
    assert np.array_equal(dofs.gather(u, p), x)


def test_scatter_rejects_wrong_length(tri2):
    dofs, _ = build_spaces(tri2, 1)
    with pytest.raises(ValueError):
        dofs.scatter(np.zeros(dofs.total + 1))


def test_local_indices_mark_constrained_traces(tri2):
    dofs, info = build_spaces(tri2, 1)
    for k in range(tri2.n_cells):
        u_idx = dofs.u_local(k)
        p_idx = dofs.p_block_local(k)
        for side, e in enumerate(tri2.cell_edges[k]):
            u_side = u_idx[info.u_cell + side * info.u_edge:][:info.u_edge]
            p_side = p_idx[info.p_cell + side * info.p_edge:][:info.p_edge]
            assert np.all(u_side < 0) == bool(tri2.is_boundary[e])
            assert np.all(p_side < 0) == bool(tri2.is_boundary[e])
        assert np.all(p_idx[:info.p_cell] < dofs.n_p)


def test_interpolating_a_linear_field_is_exact(hybrid2):
    _, info = build_spaces(hybrid2, 1)

    def u(x, t):
        return np.column_stack([x[:, 0] + t, 2 * x[:, 1] + 1])

    def p(x, t):
        return 3 * x[:, 0] - x[:, 1]

    uh, ph = interpolate(hybrid2, info, u, p, 0.5, constrain=False)
    for k in range(hybrid2.n_cells):
        pts = hybrid2.cell_vertices(k)
        space = PolySpace.on_cell(hybrid2, k, 2, 2)
        assert space.values(uh.interior[k], pts) == pytest.approx(u(pts, 0.5), abs=1e-13)
        pspace = PolySpace.on_cell(hybrid2, k, 1)
        assert pspace.values(ph.interior[k], pts) == pytest.approx(p(pts, 0.5), abs=1e-13)
    for e in range(hybrid2.n_edges):
        a, b = hybrid2.edge_endpoints(e)
        pts = np.array([a, b])
        space = PolySpace.on_edge(hybrid2, e, 1, 2)
        assert space.values(uh.trace[e], pts) == pytest.approx(u(pts, 0.5), abs=1e-13)


def test_constrained_interpolant_zeroes_boundary_traces(tri2):
    _, info = build_spaces(tri2, 1)
    uh, ph = interpolate(tri2, info, lambda x, t: np.ones((len(x), 2)),
                         lambda x, t: np.ones(len(x)), 0.0)
    assert np.all(uh.trace[tri2.is_boundary] == 0.0)
    assert np.all(ph.trace[tri2.is_boundary] == 0.0)
    assert uh.trace[~tri2.is_boundary][:, [0, 2]] == pytest.approx(1.0, abs=1e-13)


def test_weak_function_arithmetic(tri2):
    info = SpaceInfo(1)
    a = WeakFunction.zeros(DISPLACEMENT, tri2, info)
    a.interior += 1.0
    b = 2.0 * a
    assert np.all((b - a).interior == 1.0)
    with pytest.raises(ValueError):
        a - WeakFunction.zeros(PRESSURE, tri2, info)
