import numpy as np
import pytest

from trained_schemes.bdf import (OdeProblem, bdf_g_step, bdf_solve,
                                 decay_optimal_g, decay_problem, decay_u2,
                                 decay_u2_dg, exact_decay, exact_logistic,
                                 exact_oscillator, logistic_problem,
                                 loss_logistic, loss_oscillator,
                                 loss_scan_decay, oscillator_levels)
from trained_schemes.errors import SingularParameterError, SolverFailureError


def test_step_constant_solution():
    prob = decay_problem(0.0)   # F = 0 via linear matrix [[0]]... c = 0 gives A = 0
    out = bdf_g_step(np.array([3.0]), np.array([3.0]), 0.7, 0.5, prob)
    assert out[0] == pytest.approx(3.0, abs=1e-14)
    prob = logistic_problem(0.0)   # nonlinear route with F = 0
    out = bdf_g_step(np.array([3.0]), np.array([3.0]), -0.3, 0.5, prob)
    assert out[0] == pytest.approx(3.0, abs=1e-12)


def test_step_decay_examples():
    prob = decay_problem(1.0)
    u1 = np.exp(-0.5)
    out = bdf_g_step(np.array([1.0]), np.array([u1]), 0.5, 0.5, prob)
    assert out[0] == pytest.approx((2 * u1 - 0.5) / 2.0)
    assert out[0] == pytest.approx(0.356531, abs=1e-6)
    out = bdf_g_step(np.array([1.0]), np.array([u1]), 0.0, 0.5, prob)
    assert out[0] == pytest.approx(u1 / 1.5)
    assert out[0] == pytest.approx(0.404354, abs=1e-6)


def test_exact_solutions():
    assert exact_decay(1, 1, 0) == 1.0
    assert exact_decay(1, 1, 1) == pytest.approx(0.367879, abs=1e-6)
    assert exact_decay(2, 5, 0.5) == pytest.approx(0.164170, abs=1e-6)
    u, v = exact_oscillator(2.5, 7.0, 0.0)
    assert (u, v) == (2.5, 0.0)
    u, v = exact_oscillator(1, 100, 2 * np.pi / 100)
    assert u == pytest.approx(1.0) and v == pytest.approx(0.0, abs=1e-12)
    u, v = exact_oscillator(1, 1, np.pi / 2)
    assert u == pytest.approx(0.0, abs=1e-12) and v == pytest.approx(1.0)
    assert exact_logistic(1.0, 3.0, 17.0) == 1.0
    assert exact_logistic(0.0, 3.0, 17.0) == 0.0
    assert exact_logistic(0.5, 1.0, 1.0) == pytest.approx(0.731059, abs=1e-6)
    with pytest.raises(ValueError):
        exact_logistic(-0.5, 1.0, 1.0)


def test_newton_matches_closed_form_and_residual():
    # the nonlinear path must agree with the direct linear solve
    c, dt, g = 2.0, 0.4, 0.3
    lin = decay_problem(c)
    nonlin = OdeProblem(1, lambda u: -c * u, lambda u: np.array([[-c]]))
    u0, u1 = np.array([1.0]), np.array([np.exp(-c * dt)])
    a = bdf_g_step(u0, u1, g, dt, lin)
    b = bdf_g_step(u0, u1, g, dt, nonlin)
    assert abs(a[0] - b[0]) < 1e-12
    # accepted Newton iterate satisfies the residual tolerance
    rhs = (1 + 2 * g) * u1 - g * u0
    res = (1 + g) * b - dt * (-c * b) - rhs
    assert np.max(np.abs(res)) < 1e-12


def test_backward_euler_and_bdf2_recovery():
    prob = logistic_problem(1.5)
    u0, u1 = np.array([0.4]), np.array([exact_logistic(0.4, 1.5, 0.5)])
    dt = 0.5

    def newton(resid, jac, u):
        for _ in range(60):
            u = u - resid(u) / jac(u)
        return u

    # independent backward Euler: U - dt F(U) = U1
    f = lambda u: 1.5 * u * (1 - u)
    df = lambda u: 1.5 * (1 - 2 * u)
    be = newton(lambda u: u - dt * f(u) - u1[0], lambda u: 1 - dt * df(u), u1[0])
    got = bdf_g_step(u0, u1, 0.0, dt, prob)
    assert abs(got[0] - be) < 1e-12
    # independent BDF2: 1.5 U - 2 U1 + 0.5 U0 = dt F(U)
    bdf2 = newton(lambda u: 1.5 * u - 2 * u1[0] + 0.5 * u0[0] - dt * f(u),
                  lambda u: 1.5 - dt * df(u), u1[0])
    got = bdf_g_step(u0, u1, 0.5, dt, prob)
    assert abs(got[0] - bdf2) < 1e-12


@pytest.mark.parametrize("g,lo,hi", [(0.5, 1.8, 2.2), (0.3, 0.8, 1.2)])
def test_convergence_order(g, lo, hi):
    # global error at T=1 for the decay problem, exact starting values
    c = 1.0
    errs, dts = [], []
    for k in range(4):
        dt = 0.05 / 2 ** k
        n = round(1.0 / dt)
        prob = decay_problem(c)
        traj = bdf_solve(prob, [g] * (n - 1), dt, [1.0], [np.exp(-c * dt)])
        errs.append(abs(traj[-1, 0] - np.exp(-c)))
        dts.append(dt)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert lo <= slope <= hi


def test_loss_scan_decay_fig1():
    gs = np.round(np.arange(0.0, 1.0 + 1e-9, 0.01), 10)
    for c, g_expect, ratio_expect in ((1.0, 0.35, 39.97), (5.0, 0.07, 677.95)):
        scan = loss_scan_decay(c, 0.5, 1.0, gs)
        k = int(np.argmin(scan[:, 1]))
        assert scan[k, 0] == pytest.approx(g_expect)
        err = np.sqrt(scan[:, 1])
        ratio = err[np.argmin(np.abs(gs - 0.5))] / err[k]
        assert ratio == pytest.approx(ratio_expect, rel=0.02)


def test_decay_continuous_minimizer():
    assert decay_optimal_g(1.0, 0.5) == pytest.approx(0.35340, abs=1e-4)
    assert decay_optimal_g(5.0, 0.5) == pytest.approx(0.069433, abs=1e-5)
    # optimal g zeroes the local error
    for c in (1.0, 5.0):
        g = decay_optimal_g(c, 0.5)
        assert abs(decay_u2(g, c, 0.5) - np.exp(-2 * c * 0.5)) < 1e-14


def test_decay_pole_raises():
    with pytest.raises(SingularParameterError):
        decay_u2(-1.5, 1.0, 0.5)
    with pytest.raises(SingularParameterError):
        loss_scan_decay(1.0, 0.5, 1.0, [-1.5])


def test_loss_scan_decay_convex_on_window():
    gs = np.arange(0.0, 1.0 + 1e-9, 0.01)
    for c in (1.0, 5.0):
        e2 = loss_scan_decay(c, 0.5, 1.0, gs)[:, 1]
        second = e2[2:] - 2 * e2[1:-1] + e2[:-2]
        assert second.min() >= -1e-12


def test_analytic_decay_derivative():
    # d(E2)/dg from the closed form, cross-checked by finite differences
    c, dt, g = 1.0, 0.5, 0.5
    e = np.exp(-2 * c * dt)
    analytic = 2 * (decay_u2(g, c, dt) - e) * decay_u2_dg(g, c, dt)
    h = 1e-6
    fd = (np.abs(decay_u2(g + h, c, dt) - e) ** 2
          - np.abs(decay_u2(g - h, c, dt) - e) ** 2) / (2 * h)
    assert fd == pytest.approx(analytic, rel=1e-5)


def test_loss_oscillator_empty_and_oracle():
    assert loss_oscillator(0.5, 0.5, [], 1.0) == 0.0
    # straight-line re-implementation for one sample
    c, dt, u0 = 1.0, 1.0 / 3.0, 1.0
    g = 0.5
    A = np.array([[0.0, -c], [c, 0.0]])
    eye = np.eye(2)
    U0 = np.array([u0, u0])
    U1 = np.array([u0 * np.cos(c * dt), u0 * np.sin(c * dt)])
    U2 = np.linalg.solve((1 + g) * eye - dt * A, (1 + 2 * g) * U1 - g * U0)
    U3 = np.linalg.solve((1 + g) * eye - dt * A, (1 + 2 * g) * U2 - g * U1)
    ref2 = np.array([np.cos(2 * c * dt), np.sin(2 * c * dt)])
    ref3 = np.array([np.cos(3 * c * dt), np.sin(3 * c * dt)])
    expected = 0.5 * (np.sum((U2 - ref2) ** 2) + np.sum((U3 - ref3) ** 2))
    assert loss_oscillator(g, g, [u0], c) == pytest.approx(expected, abs=1e-14)
    levels = oscillator_levels(g, g, u0, c)
    np.testing.assert_allclose(levels, [U2, U3], atol=1e-13)


def test_loss_logistic_equilibrium():
    for g in (-0.2, 0.0, 0.5, 1.3):
        assert loss_logistic(g, [1.0, 1.0], 2.0) == pytest.approx(0.0, abs=1e-11)


def test_loss_logistic_solver_failure_propagates():
    # BDF2 at c=5, dt=0.5 has no real root for large initial data
    with pytest.raises(SolverFailureError):
        loss_logistic(0.5, [5.0], 5.0)
