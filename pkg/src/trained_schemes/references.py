"""Fine-grid reference solvers whose projections supply training targets.

Heat: forward Euler in time with the classical three-point stencil, computed
exactly per sine mode (the scheme is linear and diagonal in the discrete sine
basis, so the modal form reproduces literal time stepping to round-off at a
fraction of the cost). Advection: explicit first-order upwind. Burgers and
Euler: the standard Rusanov scheme (w = 1/2) marched at a CFL-limited step,
with the final step before each output time shortened to land exactly on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.fft import dst

from .finite_volume import (ScalarFlux, cons_to_prim, euler_step_values,
                            fv_step_scalar_values, signal_speed)

HEAT_CFL_SAFETY = 0.9     # dt = safety * dx^2 / (2c)
HYPERBOLIC_CFL = 0.9


class Projection(Enum):
    POINTWISE = "pointwise"
    CELL_AVERAGE = "cell_average"


@dataclass(frozen=True)
class ReferenceConfig:
    fine_n: int = 1000
    cfl_safety: float = HYPERBOLIC_CFL
    projection: Projection = Projection.POINTWISE
    output_levels: tuple[int, ...] = field(default=(1,))


def _heat_mode_amplification(fine_J: int, c: float, T: float,
                             cfl_safety: float) -> np.ndarray:
    """Per-mode gain of the forward-Euler/central run, final step shortened."""
    dxf = 1.0 / (fine_J + 1)
    dtf = cfl_safety * dxf ** 2 / (2.0 * c)
    n_full = int(np.floor(T / dtf + 1e-12))
    rem = T - n_full * dtf
    k = np.arange(1, fine_J + 1)
    lam = -4.0 * np.sin(k * np.pi / (2.0 * (fine_J + 1))) ** 2
    return (1.0 + (c * dtf / dxf ** 2) * lam) ** n_full * (1.0 + (c * rem / dxf ** 2) * lam)


def heat_reference_values(u0_fine: np.ndarray, c: float, times,
                          cfl_safety: float = HEAT_CFL_SAFETY) -> np.ndarray:
    """Fine-grid forward-Euler solution at the given times; (..., nt, Jf).

    u0_fine samples the data at the interior Dirichlet nodes j/(Jf+1).
    """
    u0 = np.asarray(u0_fine, dtype=float)
    fine_J = u0.shape[-1]
    coef = dst(u0, type=1, axis=-1)
    outs = []
    for T in np.atleast_1d(times):
        amp = _heat_mode_amplification(fine_J, c, float(T), cfl_safety)
        outs.append(dst(coef * amp, type=1, axis=-1) / (2.0 * (fine_J + 1)))
    return np.stack(outs, axis=-2)


def heat_reference_stepping(u0_fine: np.ndarray, c: float, T: float,
                            cfl_safety: float = HEAT_CFL_SAFETY) -> np.ndarray:
    """Literal forward-Euler marching; the modal path must match this."""
    U = np.array(u0_fine, dtype=float)
    dxf = 1.0 / (U.shape[-1] + 1)
    dtf = cfl_safety * dxf ** 2 / (2.0 * c)
    n_full = int(np.floor(T / dtf + 1e-12))
    rem = T - n_full * dtf
    pad = [(0, 0)] * (U.ndim - 1) + [(1, 1)]
    for step in range(n_full + 1):
        mu = c * (dtf if step < n_full else rem) / dxf ** 2
        Ue = np.pad(U, pad)
        U = U + mu * (Ue[..., :-2] - 2.0 * Ue[..., 1:-1] + Ue[..., 2:])
    return U


def advection_reference_values(u0_fine: np.ndarray, c: float, times,
                               cfl_safety: float = HYPERBOLIC_CFL) -> np.ndarray:
    """Explicit upwind on a fine periodic grid at the given times; (..., nt, nf)."""
    U = np.array(u0_fine, dtype=float)
    nf = U.shape[-1]
    dxf = 1.0 / nf
    outs = []
    t = 0.0
    for T in np.atleast_1d(times):
        if c > 0:
            dtf = cfl_safety * dxf / c
            while t < T - 1e-13:
                step = min(dtf, T - t)
                nu = c * step / dxf
                U = U - nu * (U - np.roll(U, 1, axis=-1))
                t += step
        outs.append(U.copy())
    return np.stack(outs, axis=-2)


def burgers_reference_values(u0_fine: np.ndarray, flux: ScalarFlux, times,
                             cfl_safety: float = HYPERBOLIC_CFL) -> np.ndarray:
    """Standard Rusanov on a fine periodic cell grid; (nt, nf) for one sample."""
    U = np.array(u0_fine, dtype=float)
    nf = U.shape[-1]
    dxf = 1.0 / nf
    half = np.full(nf, 0.5)
    outs = []
    t = 0.0
    for T in np.atleast_1d(times):
        while t < T - 1e-13:
            speed = max(float(np.max(np.abs(flux.df(U)))), 1e-300)
            dt = min(cfl_safety * dxf / speed, T - t)
            U = fv_step_scalar_values(U, half, flux, dt, dxf, check_cfl=False)
            t += dt
        outs.append(U.copy())
    return np.stack(outs)


def euler_reference_values(U0_fine: np.ndarray, gamma: float, times,
                           cfl_safety: float = HYPERBOLIC_CFL,
                           convention: str = "standard") -> np.ndarray:
    """Standard Rusanov with transparent boundaries; (nt, nf, 3) for one sample."""
    U = np.array(U0_fine, dtype=float)
    nf = U.shape[0]
    dxf = 1.0 / nf
    half = np.full(nf + 1, 0.5)
    outs = []
    t = 0.0
    for T in np.atleast_1d(times):
        while t < T - 1e-13:
            speed = float(np.max(signal_speed(U, gamma, convention)))
            dt = min(cfl_safety * dxf / speed, T - t)
            U = euler_step_values(U, half, gamma, dt, dxf, convention, check_cfl=False)
            t += dt
        outs.append(U.copy())
    return np.stack(outs)


def euler_reference_primitives(U_levels: np.ndarray, gamma: float):
    return cons_to_prim(U_levels, gamma)


def ssprk2_solve(f, u0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    """Two-stage SSP-RK2 trajectory, shape (n_steps+1, dim)."""
    u = np.atleast_1d(np.asarray(u0, dtype=float))
    traj = [u.copy()]
    for _ in range(n_steps):
        star = u + dt * f(u)
        u = 0.5 * (u + star + dt * f(star))
        traj.append(u.copy())
    return np.stack(traj)
