"""Generalized implicit schemes for the 1-D heat and linear advection equations.

Heat: a two-level five-point scheme; consistency pins three of the five
stencil weights, leaving (g, b_{-2}, b_{-1}) free per time level. Advection:
a two-level three-point scheme with (g, b_{-1}) free. In both cases g blends
the new and old time levels (g = 0 backward Euler, g = 1/2 Crank-Nicolson,
g = 1 forward Euler).

Advection sign convention: the update is
    (U^{n+1} - U^n)/dt + (c/dx) [(1-g) S U^{n+1} + g S U^n] = 0
with stencil S constrained by sum(b) = 0 and b_1 - b_{-1} = 1, so S/dx is a
first-order approximation of d/dx and the scheme is consistent with
u_t + c u_x = 0. Upwind differencing is b_{-1} = -1, central is b_{-1} = -1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverFailureError
from .grids import Boundary, Layout, ScalarField

HEAT_UPPER_TRIPLES = {
    # (g, b_{-2}, b_{-1}) per time level
    "S1": (0.0, 0.0, 1.0),            # backward Euler, 2nd-order stencil
    "S2": (0.5, 0.0, 1.0),            # Crank-Nicolson, 2nd-order stencil
    "S3": (0.0, -1.0 / 12.0, 4.0 / 3.0),   # backward Euler, 4th-order stencil
    "S4": (0.5, -1.0 / 12.0, 4.0 / 3.0),   # Crank-Nicolson, 4th-order stencil
}

ADV_PAIRS = {
    # (g, b_{-1}) per time level; upwind = -1, central = -1/2
    "S1": (0.0, -1.0),
    "S2": (0.5, -1.0),
    "S3": (0.0, -0.5),
    "S4": (0.5, -0.5),
}


@dataclass(frozen=True)
class HeatLevelParams:
    g: float
    b_m2: float
    b_m1: float

    @property
    def stencil(self) -> np.ndarray:
        return heat_stencil(self.b_m2, self.b_m1)


@dataclass(frozen=True)
class AdvLevelParams:
    g: float
    b_m1: float

    @property
    def stencil(self) -> np.ndarray:
        return adv_stencil(self.b_m1)


def heat_stencil(b_m2: float, b_m1: float) -> np.ndarray:
    """Five weights (b_{-2}..b_2) with b_0, b_1, b_2 eliminated by consistency."""
    return np.array([
        b_m2,
        b_m1,
        1.0 - 3.0 * b_m1 - 6.0 * b_m2,
        3.0 * b_m1 + 8.0 * b_m2 - 2.0,
        1.0 - b_m1 - 3.0 * b_m2,
    ])


def adv_stencil(b_m1: float) -> np.ndarray:
    """Three weights (b_{-1}, b_0, b_1) with sum(b) = 0 and b_1 - b_{-1} = 1."""
    return np.array([b_m1, -1.0 - 2.0 * b_m1, 1.0 + b_m1])


def named_params(tag: str, equation: str) -> HeatLevelParams | AdvLevelParams:
    """Parameters of the named standard schemes S1..S4."""
    if equation == "heat":
        return HeatLevelParams(*HEAT_UPPER_TRIPLES[tag])
    if equation == "advection":
        return AdvLevelParams(*ADV_PAIRS[tag])
    raise ValueError(f"unknown equation '{equation}'")


def stencil_matrix(stencil: np.ndarray, n: int, boundary: Boundary) -> np.ndarray:
    """Dense matrix applying a centered stencil with the given boundary closure."""
    half = len(stencil) // 2
    B = np.zeros((n, n))
    for j in range(n):
        for k in range(-half, half + 1):
            i = j + k
            if boundary is Boundary.PERIODIC:
                B[j, i % n] += stencil[k + half]
            elif 0 <= i < n:
                B[j, i] = stencil[k + half]
            # Dirichlet ghosts are zero: out-of-range entries drop out
    return B


def _solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverFailureError(f"singular implicit system: {exc}") from exc


def heat_matrices(p: HeatLevelParams, n: int, c: float, dt: float,
                  dx: float) -> tuple[np.ndarray, np.ndarray]:
    """(A, M) with A U^{n+1} = M U^n for the five-point heat scheme."""
    B = stencil_matrix(p.stencil, n, Boundary.DIRICHLET_ZERO)
    mu = c * dt / dx ** 2
    eye = np.eye(n)
    return eye - mu * (1.0 - p.g) * B, eye + mu * p.g * B


def heat_step_values(values: np.ndarray, p: HeatLevelParams, c: float, dt: float,
                     dx: float) -> np.ndarray:
    """Advance raw values (..., n) one step (zero Dirichlet ghosts)."""
    v = np.asarray(values, dtype=float)
    A, M = heat_matrices(p, v.shape[-1], c, dt, dx)
    rhs = v @ M.T
    return np.moveaxis(_solve(A, np.moveaxis(rhs, -1, 0)), 0, -1)


def heat_step(U: ScalarField, p: HeatLevelParams, c: float, dt: float) -> ScalarField:
    """One implicit step of the generalized five-point heat scheme."""
    g = U.grid
    if g.layout is not Layout.NODE_CENTERED or g.boundary is not Boundary.DIRICHLET_ZERO:
        raise ValueError("heat scheme requires a node-centered Dirichlet grid")
    if c <= 0:
        raise ValueError(f"diffusion coefficient must be positive, got {c}")
    return ScalarField(g, heat_step_values(U.values, p, c, dt, g.spacing))


def adv_matrices(p: AdvLevelParams, n: int, c: float, dt: float,
                 dx: float) -> tuple[np.ndarray, np.ndarray]:
    """(A, M) with A U^{n+1} = M U^n for the periodic three-point scheme."""
    B = stencil_matrix(p.stencil, n, Boundary.PERIODIC)
    nu = c * dt / dx
    eye = np.eye(n)
    return eye + nu * (1.0 - p.g) * B, eye - nu * p.g * B


def adv_step_values(values: np.ndarray, p: AdvLevelParams, c: float, dt: float,
                    dx: float) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    A, M = adv_matrices(p, v.shape[-1], c, dt, dx)
    rhs = v @ M.T
    return np.moveaxis(_solve(A, np.moveaxis(rhs, -1, 0)), 0, -1)


def adv_step(U: ScalarField, p: AdvLevelParams, c: float, dt: float) -> ScalarField:
    """One implicit step of the generalized three-point advection scheme."""
    g = U.grid
    if g.boundary is not Boundary.PERIODIC:
        raise ValueError("advection scheme requires a periodic grid")
    if c < 0:
        raise ValueError(f"wave speed must be non-negative, got {c}")
    return ScalarField(g, adv_step_values(U.values, p, c, dt, g.spacing))
