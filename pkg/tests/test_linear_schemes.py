import numpy as np
import pytest

from trained_schemes.grids import Boundary, Layout, ScalarField, make_grid
from trained_schemes.linear_schemes import (AdvLevelParams, HeatLevelParams,
                                            adv_matrices, adv_step,
                                            adv_step_values, adv_stencil,
                                            heat_matrices, heat_step,
                                            heat_step_values, heat_stencil,
                                            named_params, stencil_matrix)


def test_heat_stencil_examples():
    np.testing.assert_allclose(heat_stencil(0.0, 1.0), [0, 1, -2, 1, 0], atol=1e-15)
    np.testing.assert_allclose(heat_stencil(-1 / 12, 4 / 3),
                               [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12], atol=1e-15)
    np.testing.assert_allclose(heat_stencil(0.0, 0.0), [0, 0, 1, -2, 1], atol=1e-15)


def test_heat_moment_conditions():
    rng = np.random.default_rng(3)
    k = np.arange(-2, 3)
    for _ in range(50):
        st = heat_stencil(*rng.uniform(-5, 5, 2))
        assert abs(st.sum()) < 1e-13
        assert abs((k * st).sum()) < 1e-13
        assert abs((k ** 2 / 2 * st).sum() - 1.0) < 1e-13


def test_adv_stencil_constraints():
    rng = np.random.default_rng(4)
    for _ in range(50):
        b = rng.uniform(-5, 5)
        st = adv_stencil(b)
        assert abs(st.sum()) < 1e-15
        assert st[2] - st[0] == pytest.approx(1.0, abs=1e-15)


def test_named_params():
    p = named_params("S2", "heat")
    assert (p.g, p.b_m2, p.b_m1) == (0.5, 0.0, 1.0)
    np.testing.assert_allclose(p.stencil, [0, 1, -2, 1, 0], atol=1e-15)
    p = named_params("S4", "advection")
    np.testing.assert_allclose(p.stencil, [-0.5, 0.0, 0.5], atol=1e-15)
    with pytest.raises(ValueError):
        named_params("S1", "wave")


def test_heat_truncation_error_orders():
    # stencil applied to samples of exp(x) approximates the second derivative
    x0 = 0.3
    for b, min_order in (((0.0, 1.0), 1.9), ((-1 / 12, 4 / 3), 3.9), ((0.3, 0.7), 0.9)):
        st = heat_stencil(*b)
        errs, dxs = [], []
        for k in range(4):
            dx = 0.1 / 2 ** k
            val = sum(st[j + 2] * np.exp(x0 + j * dx) for j in range(-2, 3)) / dx ** 2
            errs.append(abs(val - np.exp(x0)))
            dxs.append(dx)
        slope = np.polyfit(np.log(dxs), np.log(errs), 1)[0]
        assert slope >= min_order


def _heat_grid(n=10):
    return make_grid(0, 1, n, Layout.NODE_CENTERED, Boundary.DIRICHLET_ZERO)


def test_heat_step_zero_fixed_point():
    g = _heat_grid()
    out = heat_step(ScalarField(g, np.zeros(10)), named_params("S2", "heat"), 1.0, 0.05)
    np.testing.assert_array_equal(out.values, np.zeros(10))


def test_heat_step_explicit_reduction():
    # g = 1 gives forward Euler: U + (c dt/dx^2) B U
    grid = _heat_grid()
    rng = np.random.default_rng(5)
    u = rng.normal(size=10)
    c, dt = 0.4, 0.001
    p = HeatLevelParams(1.0, 0.0, 1.0)
    out = heat_step(ScalarField(grid, u), p, c, dt)
    B = stencil_matrix(p.stencil, 10, Boundary.DIRICHLET_ZERO)
    expected = u + c * dt / grid.spacing ** 2 * (B @ u)
    np.testing.assert_allclose(out.values, expected, atol=1e-14)


def test_heat_step_crank_nicolson_oracle():
    # independently assembled Crank-Nicolson solve on the classical stencil
    grid = _heat_grid()
    c, dt = 1.0, 0.05
    dx = grid.spacing
    u0 = np.sin(np.pi * grid.nodes())
    mu = c * dt / dx ** 2
    T = np.zeros((10, 10))
    for j in range(10):
        T[j, j] = -2.0
        if j > 0:
            T[j, j - 1] = 1.0
        if j < 9:
            T[j, j + 1] = 1.0
    oracle = np.linalg.solve(np.eye(10) - 0.5 * mu * T, (np.eye(10) + 0.5 * mu * T) @ u0)
    out = heat_step(ScalarField(grid, u0), named_params("S2", "heat"), c, dt)
    np.testing.assert_allclose(out.values, oracle, atol=1e-12)


def test_heat_step_grid_requirements():
    bad = make_grid(0, 1, 10, Layout.NODE_CENTERED, Boundary.PERIODIC)
    with pytest.raises(ValueError):
        heat_step(ScalarField(bad, np.zeros(10)), named_params("S1", "heat"), 1.0, 0.05)
    with pytest.raises(ValueError):
        heat_step(ScalarField(_heat_grid(), np.zeros(10)), named_params("S1", "heat"),
                  -1.0, 0.05)


def test_heat_step_batched_values():
    grid = _heat_grid()
    rng = np.random.default_rng(6)
    U = rng.normal(size=(4, 10))
    p = named_params("S3", "heat")
    batched = heat_step_values(U, p, 2.0, 0.05, grid.spacing)
    for i in range(4):
        single = heat_step_values(U[i], p, 2.0, 0.05, grid.spacing)
        np.testing.assert_allclose(batched[i], single, atol=1e-13)


def _adv_grid(n=10):
    return make_grid(0, 1, n, Layout.NODE_CENTERED, Boundary.PERIODIC)


def test_adv_step_constant_preserved():
    grid = _adv_grid()
    out = adv_step(ScalarField(grid, np.full(10, 3.7)), named_params("S4", "advection"),
                   1.5, 0.5)
    np.testing.assert_allclose(out.values, np.full(10, 3.7), atol=1e-12)


def test_adv_step_zero_speed():
    grid = _adv_grid()
    rng = np.random.default_rng(7)
    u = rng.normal(size=10)
    out = adv_step(ScalarField(grid, u), named_params("S1", "advection"), 0.0, 0.5)
    np.testing.assert_allclose(out.values, u, atol=1e-14)


def test_adv_step_implicit_upwind_oracle():
    # classical implicit upwind: (I + nu D) U1 = U0 with D u = u_j - u_{j-1}
    grid = _adv_grid()
    rng = np.random.default_rng(8)
    u = rng.normal(size=10)
    c, dt = 0.8, 0.05
    nu = c * dt / grid.spacing
    D = np.zeros((10, 10))
    for j in range(10):
        D[j, j] = 1.0
        D[j, (j - 1) % 10] = -1.0
    oracle = np.linalg.solve(np.eye(10) + nu * D, u)
    out = adv_step(ScalarField(grid, u), named_params("S1", "advection"), c, dt)
    np.testing.assert_allclose(out.values, oracle, atol=1e-12)


def test_adv_upwind_max_norm_nonincreasing():
    grid = _adv_grid()
    rng = np.random.default_rng(9)
    p = named_params("S1", "advection")
    for _ in range(10):
        u = rng.normal(size=10)
        out = adv_step(ScalarField(grid, u), p, 1.0, 0.2)
        assert np.max(np.abs(out.values)) <= np.max(np.abs(u)) + 1e-12


def test_adv_conservation_periodic():
    grid = _adv_grid()
    rng = np.random.default_rng(10)
    for _ in range(10):
        u = rng.normal(size=10)
        p = AdvLevelParams(rng.uniform(-1, 1), rng.uniform(-2, 2))
        out = adv_step(ScalarField(grid, u), p, 1.3, 0.5)
        assert out.values.sum() == pytest.approx(u.sum(), abs=1e-12)


def test_adv_translation_equivariance():
    grid = _adv_grid()
    rng = np.random.default_rng(11)
    u = rng.normal(size=10)
    p = AdvLevelParams(0.3, -0.8)
    base = adv_step_values(u, p, 2.0, 0.5, grid.spacing)
    for shift in (1, 4):
        shifted = adv_step_values(np.roll(u, shift), p, 2.0, 0.5, grid.spacing)
        np.testing.assert_allclose(shifted, np.roll(base, shift), atol=1e-12)


def test_matrix_shapes_and_ghosts():
    A, M = heat_matrices(named_params("S1", "heat"), 6, 1.0, 0.01, 0.1)
    assert A.shape == (6, 6) and M.shape == (6, 6)
    # Dirichlet: corner rows drop the out-of-range stencil entries
    B = stencil_matrix(heat_stencil(0.5, 0.5), 6, Boundary.DIRICHLET_ZERO)
    assert B[0, 0] == heat_stencil(0.5, 0.5)[2]
    A, M = adv_matrices(named_params("S3", "advection"), 6, 1.0, 0.01, 0.1)
    assert A[0, 5] != 0.0   # periodic wrap entry
