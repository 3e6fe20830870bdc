"""Generalized three-point BDF scheme for ODE systems and its model problems.

The scheme advances (1+g)U_{n+2} - (1+2g)U_{n+1} + g U_n = dt F(U_{n+2});
g = 0 is backward Euler and g = 1/2 the classical BDF2 method. Linear right
hand sides are solved directly, nonlinear ones by a damped-free Newton
iteration with analytic Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SingularParameterError, SolverFailureError

NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 50


@dataclass(frozen=True)
class OdeProblem:
    """Autonomous system u' = F(u) with Jacobian; linear systems carry a matrix."""

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    linear_matrix: np.ndarray | None = None


def decay_problem(c: float) -> OdeProblem:
    A = np.array([[-c]])
    return OdeProblem(1, lambda u: A @ u, lambda u: A, A)


def oscillator_problem(c: float) -> OdeProblem:
    # u' = -c v, v' = c u
    A = np.array([[0.0, -c], [c, 0.0]])
    return OdeProblem(2, lambda u: A @ u, lambda u: A, A)


def logistic_problem(c: float) -> OdeProblem:
    return OdeProblem(
        1,
        lambda u: c * u * (1.0 - u),
        lambda u: np.array([[c * (1.0 - 2.0 * u[0])]]),
    )


def bdf_g_step(u_n: np.ndarray, u_np1: np.ndarray, g: float, dt: float,
               problem: OdeProblem) -> np.ndarray:
    """One generalized BDF step: solve (1+g)U - dt F(U) = (1+2g)U_{n+1} - g U_n."""
    u_n = np.atleast_1d(np.asarray(u_n, dtype=float))
    u_np1 = np.atleast_1d(np.asarray(u_np1, dtype=float))
    rhs = (1.0 + 2.0 * g) * u_np1 - g * u_n
    if problem.linear_matrix is not None:
        A = (1.0 + g) * np.eye(problem.dim) - dt * problem.linear_matrix
        try:
            return np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"singular linear BDF system: {exc}") from exc
    u = u_np1.copy()
    eye = np.eye(problem.dim)
    for _ in range(NEWTON_MAX_ITERS):
        res = (1.0 + g) * u - dt * problem.f(u) - rhs
        if np.max(np.abs(res)) < NEWTON_TOL:
            return u
        J = (1.0 + g) * eye - dt * problem.jac(u)
        try:
            u = u - np.linalg.solve(J, res)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"singular Newton Jacobian: {exc}") from exc
    res = (1.0 + g) * u - dt * problem.f(u) - rhs
    resid = float(np.max(np.abs(res)))
    if resid < NEWTON_TOL:
        return u
    raise SolverFailureError(
        f"Newton did not converge in {NEWTON_MAX_ITERS} iterations", residual=resid)


def bdf_solve(problem: OdeProblem, g_schedule, dt: float, u0: np.ndarray,
              u1: np.ndarray) -> np.ndarray:
    """March the scheme; returns the trajectory (len(g_schedule)+2, dim).

    g_schedule[k] is the parameter used to produce level k+2.
    """
    traj = [np.atleast_1d(np.asarray(u0, dtype=float)),
            np.atleast_1d(np.asarray(u1, dtype=float))]
    for g in g_schedule:
        traj.append(bdf_g_step(traj[-2], traj[-1], float(g), dt, problem))
    return np.stack(traj)


def exact_decay(u0: float, c: float, t) -> np.ndarray | float:
    return u0 * np.exp(-c * np.asarray(t, dtype=float))


def exact_oscillator(u0: float, c: float, t) -> tuple:
    """(u, v) = (u0 cos(ct), u0 sin(ct))."""
    t = np.asarray(t, dtype=float)
    return u0 * np.cos(c * t), u0 * np.sin(c * t)


def exact_logistic(u0: float, c: float, t) -> np.ndarray | float:
    if np.any(np.asarray(u0) < 0):
        raise ValueError("logistic initial data must be non-negative")
    t = np.asarray(t, dtype=float)
    denom = u0 + (1.0 - u0) * np.exp(-c * t)
    if np.any(denom == 0) or not np.all(np.isfinite(denom)):
        raise ValueError("logistic solution formula degenerates for these arguments")
    return u0 / denom


def decay_u2(g, c: float, dt: float, u0: float = 1.0):
    """Closed-form second level of the scheme for u' = -cu."""
    g = np.asarray(g, dtype=float)
    pole = -(1.0 + c * dt)
    if np.any(np.isclose(g, pole, atol=1e-12)):
        raise SingularParameterError(f"g = {pole} is a pole of the decay update")
    u1 = u0 * np.exp(-c * dt)
    return ((1.0 + 2.0 * g) * u1 - g * u0) / (1.0 + g + c * dt)


def decay_u2_dg(g: float, c: float, dt: float, u0: float = 1.0) -> float:
    """Analytic d(U_2)/dg for the closed form (used to cross-check gradients)."""
    u1 = u0 * np.exp(-c * dt)
    den = 1.0 + g + c * dt
    return ((2.0 * u1 - u0) * den - ((1.0 + 2.0 * g) * u1 - g * u0)) / den ** 2


def loss_scan_decay(c: float, dt: float, u0: float, g_grid) -> np.ndarray:
    """(g, E2) pairs with E2(g) = |U_2(g) - u0 e^{-2 c dt}|^2."""
    g_grid = np.asarray(g_grid, dtype=float)
    err = decay_u2(g_grid, c, dt, u0) - u0 * np.exp(-2.0 * c * dt)
    return np.column_stack([g_grid, err ** 2])


def decay_optimal_g(c: float, dt: float, u0: float = 1.0) -> float:
    """g solving U_2(g) = u0 e^{-2 c dt} exactly (linear in g)."""
    u1 = u0 * np.exp(-c * dt)
    e2 = u0 * np.exp(-2.0 * c * dt)
    return (e2 * (1.0 + c * dt) - u1) / (2.0 * u1 - u0 - e2)


# -- experiment losses ------------------------------------------------------

OSC_DT = 1.0 / 3.0
LOGISTIC_DT = 0.5


def oscillator_levels(g2: float, g3: float, u0: float, c: float,
                      dt: float = OSC_DT) -> np.ndarray:
    """Levels U_2, U_3 of the scheme started from U_0 = (u0, u0) and the exact U_1.

    The first level follows the experiment's stated initialization
    U_0 = [u0, u0]; the reference values remain the exact solution
    (u0 cos, u0 sin), so the scheme must repair the inconsistent start.
    """
    problem = oscillator_problem(c)
    u0v = np.array([u0, u0])
    u1v = np.array(exact_oscillator(u0, c, dt))
    traj = bdf_solve(problem, [g2, g3], dt, u0v, u1v)
    return traj[2:]


def loss_oscillator(g2: float, g3: float, u0_samples, c: float,
                    dt: float = OSC_DT) -> float:
    """(1/2) sum_i sum_{n=2,3} |U^{n,i} - exact(n dt)|^2."""
    total = 0.0
    for u0 in np.atleast_1d(u0_samples):
        levels = oscillator_levels(g2, g3, float(u0), c, dt)
        for n, U in zip((2, 3), levels):
            ref = np.array(exact_oscillator(float(u0), c, n * dt))
            total += float(np.sum((U - ref) ** 2))
    return 0.5 * total


def loss_logistic(g2: float, u0_samples, c: float, dt: float = LOGISTIC_DT) -> float:
    """sum_i |U^{2,i}(g2) - exact(2 dt)| with U_1 set from the exact solution."""
    problem = logistic_problem(c)
    total = 0.0
    for u0 in np.atleast_1d(u0_samples):
        u1 = exact_logistic(float(u0), c, dt)
        u2 = bdf_g_step(np.array([u0]), np.array([u1]), g2, dt, problem)
        total += abs(float(u2[0]) - float(exact_logistic(float(u0), c, 2 * dt)))
    return total
