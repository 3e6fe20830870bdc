"""Uniform 1-D grids, field containers, ghost cells, and fine-to-coarse projections.

Two layouts are supported: node-centered grids (finite differences) and
cell-centered grids (finite volumes). Boundary handling covers homogeneous
Dirichlet (zero ghost values), periodic wrap-around, and transparent
(zeroth-order extrapolation) closures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import GridCompatibilityError


class Layout(Enum):
    NODE_CENTERED = "node_centered"
    CELL_CENTERED = "cell_centered"


class Boundary(Enum):
    DIRICHLET_ZERO = "dirichlet_zero"
    PERIODIC = "periodic"
    TRANSPARENT = "transparent"


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform spatial grid on [x_left, x_right] with n unknowns.

    Spacing conventions:
      - node-centered, Dirichlet: dx = (x_right - x_left)/(n+1), node j at
        x_left + (j+1)*dx for j = 0..n-1 (boundary nodes carry the data).
      - node-centered, periodic: dx = (x_right - x_left)/n, node j at
        x_left + j*dx.
      - cell-centered: dx = (x_right - x_left)/n, cell j spans
        (x_left + j*dx, x_left + (j+1)*dx).
    """

    x_left: float
    x_right: float
    n: int
    layout: Layout
    boundary: Boundary

    @property
    def spacing(self) -> float:
        width = self.x_right - self.x_left
        if self.layout is Layout.NODE_CENTERED and self.boundary is Boundary.DIRICHLET_ZERO:
            return width / (self.n + 1)
        return width / self.n

    def nodes(self) -> np.ndarray:
        """Coordinates of the n unknowns (node positions or cell centers)."""
        dx = self.spacing
        if self.layout is Layout.CELL_CENTERED:
            return self.x_left + (np.arange(self.n) + 0.5) * dx
        if self.boundary is Boundary.DIRICHLET_ZERO:
            return self.x_left + (np.arange(self.n) + 1) * dx
        return self.x_left + np.arange(self.n) * dx


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def final_time(self) -> float:
        return self.n_steps * self.dt


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    """Grid-attached vector of n real values."""

    grid: SpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _readonly(np.array(self.values, dtype=float))
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected shape ({self.grid.n},), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SystemField:
    """Grid-attached (n, m) array for m-component systems."""

    grid: SpaceGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _readonly(np.array(self.values, dtype=float))
        if v.ndim != 2 or v.shape[0] != self.grid.n:
            raise ValueError(f"expected shape ({self.grid.n}, m), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[1]


def make_grid(x_left: float, x_right: float, n: int, layout: Layout,
              boundary: Boundary) -> SpaceGrid:
    """Build a uniform grid, validating the interval and size."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not x_left < x_right:
        raise ValueError(f"degenerate interval [{x_left}, {x_right}]")
    return SpaceGrid(float(x_left), float(x_right), int(n), layout, boundary)


def extend_values(values: np.ndarray, boundary: Boundary, width: int) -> np.ndarray:
    """Pad the trailing-but-one axis (axis -1 for scalars, -2 for systems is the
    caller's concern; this pads axis 0 of a 1-D array or axis 0 of (n, m))."""
    if width < 1 or width > 2:
        raise ValueError(f"ghost width must be 1 or 2, got {width}")
    v = np.asarray(values)
    pad = [(width, width)] + [(0, 0)] * (v.ndim - 1)
    if boundary is Boundary.DIRICHLET_ZERO:
        return np.pad(v, pad)
    if boundary is Boundary.PERIODIC:
        return np.concatenate([v[-width:], v, v[:width]], axis=0)
    return np.concatenate([np.repeat(v[:1], width, axis=0), v,
                           np.repeat(v[-1:], width, axis=0)], axis=0)


def ghost_extend(fld: ScalarField | SystemField, width: int) -> np.ndarray:
    """Return the field values extended by `width` ghost entries per side."""
    return extend_values(fld.values, fld.grid.boundary, width)


def _check_same_interval(fine: SpaceGrid, coarse: SpaceGrid) -> None:
    if not (np.isclose(fine.x_left, coarse.x_left) and np.isclose(fine.x_right, coarse.x_right)):
        raise GridCompatibilityError(
            f"grids span [{fine.x_left}, {fine.x_right}] vs [{coarse.x_left}, {coarse.x_right}]")


def nearest_node_indices(fine: SpaceGrid, coarse: SpaceGrid) -> np.ndarray:
    """Index of the fine node nearest each coarse node."""
    fx = fine.nodes()
    idx = np.rint((coarse.nodes() - fx[0]) / fine.spacing).astype(int)
    return np.clip(idx, 0, fine.n - 1)


def project_pointwise(fine: ScalarField, coarse_grid: SpaceGrid) -> ScalarField:
    """Sample a fine node-centered field at the coarse node positions.

    Fine resolutions are chosen so that every coarse node coincides with a
    fine node; the nearest fine node is used in general.
    """
    _check_same_interval(fine.grid, coarse_grid)
    idx = nearest_node_indices(fine.grid, coarse_grid)
    return ScalarField(coarse_grid, fine.values[idx])


def project_cell_average(fine: ScalarField | SystemField,
                         coarse_grid: SpaceGrid) -> ScalarField | SystemField:
    """Average fine cells over the coarse cells containing them."""
    _check_same_interval(fine.grid, coarse_grid)
    nf, nc = fine.grid.n, coarse_grid.n
    if nf % nc != 0:
        raise GridCompatibilityError(f"refinement ratio {nf}/{nc} is not an integer")
    r = nf // nc
    v = fine.values
    if v.ndim == 1:
        out = v.reshape(nc, r).mean(axis=1)
        return ScalarField(coarse_grid, out)
    out = v.reshape(nc, r, v.shape[1]).mean(axis=1)
    return SystemField(coarse_grid, out)


def cell_average_array(values: np.ndarray, n_coarse: int, axis: int = -1) -> np.ndarray:
    """Cell-average a raw array along `axis` (fine count must divide evenly)."""
    v = np.asarray(values)
    axis = axis % v.ndim
    nf = v.shape[axis]
    if nf % n_coarse != 0:
        raise GridCompatibilityError(f"refinement ratio {nf}/{n_coarse} is not an integer")
    r = nf // n_coarse
    shape = v.shape[:axis] + (n_coarse, r) + v.shape[axis + 1:]
    return v.reshape(shape).mean(axis=axis + 1)


def matched_fine_n(coarse_n: int, nominal_fine_n: int) -> int:
    """Closest fine resolution to the nominal one that nests the coarse grid.

    For cell-centered and periodic node-centered grids the constraint is an
    integer cell ratio; the ratio is rounded to the nearest integer (at least 1).
    """
    ratio = max(1, round(nominal_fine_n / coarse_n))
    return ratio * coarse_n


def matched_fine_n_dirichlet(coarse_n: int, nominal_fine_n: int) -> int:
    """Fine interior-node count so Dirichlet node sets nest: (nf+1) = r*(nc+1)."""
    ratio = max(1, round((nominal_fine_n + 1) / (coarse_n + 1)))
    return ratio * (coarse_n + 1) - 1
