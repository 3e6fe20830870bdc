"""Weight-modulated Rusanov finite-volume schemes for Burgers and 1-D Euler.

The numerical flux generalizes the local Lax-Friedrichs (Rusanov) flux by
scaling its diffusion term with a per-interface weight w; w = 1/2 recovers
the standard scheme and w >= 1/2 keeps the scalar scheme monotone under the
CFL condition. Weights are pooled: one trainable value per contiguous window
of interior interfaces, with boundary interfaces filled in by the boundary
rule (periodic wrap or nearest-group copy).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CflViolationError, PositivityError
from .grids import Boundary, Layout, ScalarField, SystemField

GAMMA_DIATOMIC = 1.4
CFL_SLACK = 1e-12


@dataclass(frozen=True)
class ScalarFlux:
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


def burgers_flux() -> ScalarFlux:
    return ScalarFlux(lambda u: 0.5 * u * u, lambda u: u)


def weighted_flux_scalar(uL, uR, w, flux: ScalarFlux):
    """(f(uL)+f(uR))/2 - w * max(|f'(uL)|, |f'(uR)|) * (uR - uL)."""
    a = np.maximum(np.abs(flux.df(uL)), np.abs(flux.df(uR)))
    return 0.5 * (flux.f(uL) + flux.f(uR)) - w * a * (uR - uL)


def check_cfl_scalar(values: np.ndarray, flux: ScalarFlux, dt: float, dx: float) -> None:
    number = float(np.max(np.abs(flux.df(values)))) * dt / dx
    if number > 1.0 + CFL_SLACK:
        raise CflViolationError(f"CFL number {number:.6g} exceeds 1", number)


def fv_step_scalar_values(values: np.ndarray, weights: np.ndarray, flux: ScalarFlux,
                          dt: float, dx: float, check_cfl: bool = True) -> np.ndarray:
    """One periodic finite-volume step on raw values (..., n).

    weights has length n; weights[i] belongs to the interface between cells
    i-1 and i (index 0 is the wrap-around interface).
    """
    U = np.asarray(values, dtype=float)
    if check_cfl:
        check_cfl_scalar(U, flux, dt, dx)
    Um = np.roll(U, 1, axis=-1)
    G = weighted_flux_scalar(Um, U, weights, flux)
    return U - dt / dx * (np.roll(G, -1, axis=-1) - G)


def fv_step_scalar(U: ScalarField, weights: np.ndarray, flux: ScalarFlux,
                   dt: float) -> ScalarField:
    g = U.grid
    if g.layout is not Layout.CELL_CENTERED or g.boundary is not Boundary.PERIODIC:
        raise ValueError("scalar finite-volume step requires a periodic cell-centered grid")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (g.n,):
        raise ValueError(f"expected {g.n} interface weights, got {weights.shape}")
    return ScalarField(g, fv_step_scalar_values(U.values, weights, flux, dt, g.spacing))


# -- pooled weight layout ----------------------------------------------------

@dataclass(frozen=True)
class WeightLayout:
    """Partition of interior interfaces into pooled groups.

    `groups[k]` lists interface indices sharing pooled weight k. For periodic
    grids interfaces are numbered 0..n-1 with 0 the wrap interface; for
    transparent grids 0..n with 0 and n at the domain edges. The boundary rule
    assigns the wrap interface the first group's weight (periodic pattern
    continuation) or copies the nearest group (transparent edges).
    """

    n_interfaces: int
    window: int
    groups: tuple[tuple[int, ...], ...]
    boundary: Boundary

    @property
    def n_groups(self) -> int:
        return len(self.groups)


def pooled_layout_periodic(n_cells: int, window: int) -> WeightLayout:
    interior = list(range(1, n_cells))          # wrap interface 0 excluded
    groups = [tuple(interior[s:s + window]) for s in range(0, len(interior), window)]
    if len(groups) > 1 and len(groups[-1]) < window:
        tail = groups.pop()
        groups[-1] = groups[-1] + tail
    return WeightLayout(n_cells, window, tuple(groups), Boundary.PERIODIC)


def pooled_layout_transparent(n_cells: int, window: int,
                              n_groups: int | None = None) -> WeightLayout:
    interior = list(range(1, n_cells))          # edges 0 and n_cells excluded
    groups = [tuple(interior[s:s + window]) for s in range(0, len(interior), window)]
    target = n_groups if n_groups is not None else len(groups)
    while len(groups) > target:
        tail = groups.pop()
        groups[-1] = groups[-1] + tail
    return WeightLayout(n_cells + 1, window, tuple(groups), Boundary.TRANSPARENT)


def expand_pooled(layout: WeightLayout, pooled: np.ndarray) -> np.ndarray:
    """Per-interface weights from pooled group values plus the boundary rule."""
    pooled = np.asarray(pooled, dtype=float)
    if pooled.shape != (layout.n_groups,):
        raise ValueError(f"expected {layout.n_groups} pooled weights, got {pooled.shape}")
    w = np.empty(layout.n_interfaces)
    for k, idxs in enumerate(layout.groups):
        w[list(idxs)] = pooled[k]
    w[0] = pooled[0]                      # wrap interface / left edge
    if layout.boundary is Boundary.TRANSPARENT:
        w[-1] = pooled[-1]                # right edge copies the last group
    return w


# -- Euler state handling ----------------------------------------------------

def prim_to_cons(rho, v, p, gamma: float = GAMMA_DIATOMIC) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_positive(rho, p)
    E = p / (gamma - 1.0) + 0.5 * rho * v * v
    return np.stack([rho, rho * v, E], axis=-1)


def cons_to_prim(U: np.ndarray, gamma: float = GAMMA_DIATOMIC):
    U = np.asarray(U, dtype=float)
    rho = U[..., 0]
    v = U[..., 1] / rho
    p = (gamma - 1.0) * (U[..., 2] - 0.5 * rho * v * v)
    _check_positive(rho, p)
    return rho, v, p


def _check_positive(rho: np.ndarray, p: np.ndarray) -> None:
    bad = (rho <= 0) | (p <= 0)
    if np.any(bad):
        cell = int(np.argmax(bad.reshape(-1)))
        raise PositivityError(f"non-positive density/pressure at flat index {cell}", cell)


def sound_speed(rho, p, gamma: float = GAMMA_DIATOMIC,
                convention: str = "standard") -> np.ndarray:
    """a = sqrt(gamma p / rho); convention='reciprocal' gives sqrt(p/(gamma rho))."""
    if convention == "standard":
        return np.sqrt(gamma * np.asarray(p) / np.asarray(rho))
    if convention == "reciprocal":
        return np.sqrt(np.asarray(p) / (gamma * np.asarray(rho)))
    raise ValueError(f"unknown sound-speed convention '{convention}'")


def euler_flux(U: np.ndarray, gamma: float = GAMMA_DIATOMIC) -> np.ndarray:
    rho, v, p = cons_to_prim(U, gamma)
    return np.stack([U[..., 1], rho * v * v + p, (U[..., 2] + p) * v], axis=-1)


def signal_speed(U: np.ndarray, gamma: float = GAMMA_DIATOMIC,
                 convention: str = "standard") -> np.ndarray:
    rho, v, p = cons_to_prim(U, gamma)
    return np.abs(v) + sound_speed(rho, p, gamma, convention)


def max_signal_euler(uL: np.ndarray, uR: np.ndarray, gamma: float = GAMMA_DIATOMIC,
                     convention: str = "standard") -> np.ndarray:
    return np.maximum(signal_speed(uL, gamma, convention),
                      signal_speed(uR, gamma, convention))


def cfl_max_dt(values: np.ndarray, dx: float, cfl_number: float,
               flux: ScalarFlux | None = None, gamma: float | None = None,
               convention: str = "standard") -> float:
    """Largest stable dt: cfl * dx / (max signal speed); inf when speeds vanish."""
    if not 0 < cfl_number <= 1:
        raise ValueError(f"cfl_number must lie in (0, 1], got {cfl_number}")
    if flux is not None:
        speed = float(np.max(np.abs(flux.df(np.asarray(values)))))
    elif gamma is not None:
        speed = float(np.max(signal_speed(np.asarray(values), gamma, convention)))
    else:
        raise ValueError("provide either a scalar flux or gamma")
    if speed == 0.0:
        return np.inf
    return cfl_number * dx / speed


def euler_step_values(U: np.ndarray, weights: np.ndarray, gamma: float, dt: float,
                      dx: float, convention: str = "standard",
                      check_cfl: bool = True) -> np.ndarray:
    """One transparent-boundary step on raw states (..., n, 3).

    weights has length n+1 (domain-edge interfaces included); ghost cells copy
    the edge states, so the edge fluxes reduce to physical fluxes.
    """
    U = np.asarray(U, dtype=float)
    if check_cfl:
        number = float(np.max(signal_speed(U, gamma, convention))) * dt / dx
        if number > 1.0 + CFL_SLACK:
            raise CflViolationError(f"CFL number {number:.6g} exceeds 1", number)
    Ue = np.concatenate([U[..., :1, :], U, U[..., -1:, :]], axis=-2)
    fe = euler_flux(Ue, gamma)
    se = signal_speed(Ue, gamma, convention)
    a = np.maximum(se[..., :-1], se[..., 1:])
    jump = Ue[..., 1:, :] - Ue[..., :-1, :]
    G = 0.5 * (fe[..., :-1, :] + fe[..., 1:, :]) - (weights * a)[..., None] * jump
    Unew = U - dt / dx * (G[..., 1:, :] - G[..., :-1, :])
    cons_to_prim(Unew, gamma)   # positivity check on the updated states
    return Unew


def fv_step_euler(U: SystemField, weights: np.ndarray, gamma: float,
                  dt: float, convention: str = "standard") -> SystemField:
    g = U.grid
    if g.layout is not Layout.CELL_CENTERED or g.boundary is not Boundary.TRANSPARENT:
        raise ValueError("Euler step requires a transparent cell-centered grid")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (g.n + 1,):
        raise ValueError(f"expected {g.n + 1} interface weights, got {weights.shape}")
    return SystemField(g, euler_step_values(U.values, weights, gamma, dt, g.spacing,
                                            convention))
