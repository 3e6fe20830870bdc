import numpy as np
import pytest

from trained_schemes.errors import GridCompatibilityError
from trained_schemes.grids import (Boundary, Layout, ScalarField, SpaceGrid,
                                   SystemField, TimeGrid, cell_average_array,
                                   extend_values, ghost_extend, make_grid,
                                   matched_fine_n, matched_fine_n_dirichlet,
                                   project_cell_average, project_pointwise)


def test_make_grid_spacings():
    assert make_grid(0, 1, 10, Layout.CELL_CENTERED, Boundary.PERIODIC).spacing == pytest.approx(0.1)
    assert make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO).spacing == pytest.approx(1 / 11)
    assert make_grid(0, 1, 20, Layout.CELL_CENTERED, Boundary.TRANSPARENT).spacing == pytest.approx(0.05)
    assert make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.PERIODIC).spacing == pytest.approx(0.1)


def test_make_grid_validation():
    with pytest.raises(ValueError):
        make_grid(0, 1, 0, Layout.CELL_CENTERED, Boundary.PERIODIC)
    with pytest.raises(ValueError):
        make_grid(1, 1, 5, Layout.CELL_CENTERED, Boundary.PERIODIC)
    with pytest.raises(ValueError):
        make_grid(2, 1, 5, Layout.CELL_CENTERED, Boundary.PERIODIC)


def test_node_positions():
    g = make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    assert g.nodes()[0] == pytest.approx(1 / 11)
    assert g.nodes()[-1] == pytest.approx(10 / 11)
    g = make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.PERIODIC)
    assert g.nodes()[0] == 0.0
    assert g.nodes()[-1] == pytest.approx(0.9)
    g = make_grid(0, 1, 10, Layout.CELL_CENTERED, Boundary.PERIODIC)
    assert g.nodes()[0] == pytest.approx(0.05)


def test_time_grid():
    t = TimeGrid(dt=0.05, n_steps=3)
    assert t.final_time == pytest.approx(0.15)
    with pytest.raises(ValueError):
        TimeGrid(dt=-1.0, n_steps=2)
    with pytest.raises(ValueError):
        TimeGrid(dt=0.1, n_steps=0)


def test_field_validation():
    g = make_grid(0, 1, 3, Layout.CELL_CENTERED, Boundary.PERIODIC)
    f = ScalarField(g, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        f.values[0] = 9.0   # immutable
    with pytest.raises(ValueError):
        ScalarField(g, [1.0, 2.0])
    with pytest.raises(ValueError):
        ScalarField(g, [1.0, np.nan, 3.0])
    s = SystemField(g, np.ones((3, 3)))
    assert s.m == 3
    with pytest.raises(ValueError):
        SystemField(g, np.ones((2, 3)))


def test_ghost_extend_dirichlet():
    g = make_grid(0, 1, 3, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    out = ghost_extend(ScalarField(g, [1, 2, 3]), 2)
    assert out.tolist() == [0, 0, 1, 2, 3, 0, 0]


def test_ghost_extend_periodic():
    g = make_grid(0, 1, 3, Layout.NODE_CENTERED, Boundary.PERIODIC)
    out = ghost_extend(ScalarField(g, [1, 2, 3]), 1)
    assert out.tolist() == [3, 1, 2, 3, 1]


def test_ghost_extend_transparent():
    g = make_grid(0, 1, 2, Layout.CELL_CENTERED, Boundary.TRANSPARENT)
    out = ghost_extend(ScalarField(g, [5, 7]), 1)
    assert out.tolist() == [5, 5, 7, 7]


def test_ghost_extend_width_limit():
    g = make_grid(0, 1, 3, Layout.NODE_CENTERED, Boundary.PERIODIC)
    with pytest.raises(ValueError):
        ghost_extend(ScalarField(g, [1, 2, 3]), 3)


def test_ghost_extend_system():
    g = make_grid(0, 1, 2, Layout.CELL_CENTERED, Boundary.TRANSPARENT)
    s = SystemField(g, [[1.0, 2.0], [3.0, 4.0]])
    out = ghost_extend(s, 1)
    assert out.shape == (4, 2)
    assert out[0].tolist() == [1.0, 2.0]
    assert out[-1].tolist() == [3.0, 4.0]


def _fine_coarse_dirichlet(fine_n=1000, coarse_n=10):
    fine = make_grid(0, 1, fine_n, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    coarse = make_grid(0, 1, coarse_n, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    return fine, coarse


def test_project_pointwise_linear_exact():
    fine, coarse = _fine_coarse_dirichlet()
    f = ScalarField(fine, fine.nodes())
    out = project_pointwise(f, coarse)
    np.testing.assert_allclose(out.values, coarse.nodes(), rtol=0, atol=1e-15)


def test_project_pointwise_constant():
    fine, coarse = _fine_coarse_dirichlet()
    out = project_pointwise(ScalarField(fine, np.full(fine.n, 4.2)), coarse)
    np.testing.assert_array_equal(out.values, np.full(10, 4.2))


def test_project_pointwise_sine():
    fine, coarse = _fine_coarse_dirichlet()
    out = project_pointwise(ScalarField(fine, np.sin(np.pi * fine.nodes())), coarse)
    np.testing.assert_allclose(out.values, np.sin(np.pi * coarse.nodes()), atol=1e-3)


def test_project_pointwise_interval_mismatch():
    fine = make_grid(0, 2, 1000, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    coarse = make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)
    with pytest.raises(GridCompatibilityError):
        project_pointwise(ScalarField(fine, np.zeros(1000)), coarse)


def test_project_cell_average_examples():
    fine = make_grid(0, 1, 4, Layout.CELL_CENTERED, Boundary.PERIODIC)
    coarse = make_grid(0, 1, 2, Layout.CELL_CENTERED, Boundary.PERIODIC)
    out = project_cell_average(ScalarField(fine, [1, 3, 5, 7]), coarse)
    assert out.values.tolist() == [2.0, 6.0]
    out = project_cell_average(ScalarField(fine, np.full(4, 3.3)), coarse)
    np.testing.assert_array_equal(out.values, [3.3, 3.3])


def test_project_cell_average_ratio_error():
    fine = make_grid(0, 1, 10, Layout.CELL_CENTERED, Boundary.PERIODIC)
    coarse = make_grid(0, 1, 3, Layout.CELL_CENTERED, Boundary.PERIODIC)
    with pytest.raises(GridCompatibilityError):
        project_cell_average(ScalarField(fine, np.zeros(10)), coarse)


def test_cell_average_is_conservative():
    rng = np.random.default_rng(0)
    fine = make_grid(0, 1, 120, Layout.CELL_CENTERED, Boundary.PERIODIC)
    coarse = make_grid(0, 1, 10, Layout.CELL_CENTERED, Boundary.PERIODIC)
    for _ in range(20):
        v = rng.normal(size=120)
        out = project_cell_average(ScalarField(fine, v), coarse)
        assert np.sum(out.values) * coarse.spacing == pytest.approx(
            np.sum(v) * fine.spacing, abs=1e-12)


def test_cell_average_system_field():
    fine = make_grid(0, 1, 4, Layout.CELL_CENTERED, Boundary.TRANSPARENT)
    coarse = make_grid(0, 1, 2, Layout.CELL_CENTERED, Boundary.TRANSPARENT)
    s = SystemField(fine, np.arange(12.0).reshape(4, 3))
    out = project_cell_average(s, coarse)
    np.testing.assert_allclose(out.values, [[1.5, 2.5, 3.5], [7.5, 8.5, 9.5]])


def test_pointwise_exact_on_affine_functions():
    fine, coarse = _fine_coarse_dirichlet(109, 10)   # (109+1) = 11*10
    for a, b in ((2.0, -1.0), (0.0, 3.0), (-1.5, 0.25)):
        f = ScalarField(fine, a * fine.nodes() + b)
        out = project_pointwise(f, coarse)
        np.testing.assert_allclose(out.values, a * coarse.nodes() + b, atol=1e-13)


def test_periodic_ghost_translation_equivariance():
    # periodic ghost extension composed with a shift-invariant stencil
    rng = np.random.default_rng(1)
    v = rng.normal(size=16)
    stencil = np.array([0.25, -1.0, 0.75])

    def apply_stencil(values):
        e = extend_values(values, Boundary.PERIODIC, 1)
        return stencil[0] * e[:-2] + stencil[1] * e[1:-1] + stencil[2] * e[2:]

    for shift in (1, 3, 7):
        lhs = apply_stencil(np.roll(v, shift))
        rhs = np.roll(apply_stencil(v), shift)
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_matched_fine_resolutions():
    assert matched_fine_n(10, 1000) == 1000
    assert matched_fine_n(80, 1000) == 960
    assert matched_fine_n(160, 1000) == 960
    assert matched_fine_n_dirichlet(10, 1000) == 1000   # 1001 = 91 * 11
    fine_n = matched_fine_n_dirichlet(9, 1000)
    assert (fine_n + 1) % 10 == 0


def test_cell_average_array_axis():
    v = np.arange(24.0).reshape(2, 4, 3)
    out = cell_average_array(v, 2, axis=1)
    assert out.shape == (2, 2, 3)
    np.testing.assert_allclose(out[0, 0], v[0, :2].mean(axis=0))
