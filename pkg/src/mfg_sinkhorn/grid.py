"""Uniform grids on the d-torus (or a truncated box) and densities on them.

Arrays are stored with shape ``(m,) * d`` in C order, so the last dimension
varies fastest when flattened.  Cell ``i`` along an axis is centred at
``(i + 0.5) * L / m``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridMismatch, ZeroMass

PERIODIC = "periodic"
TRUNCATED = "truncated"
BOUNDARIES = (PERIODIC, TRUNCATED)

#: Flag value for obstacle cells in a potential.  ``exp(-w * OBSTACLE)`` is
#: exactly zero for any positive weight ``w``.
OBSTACLE = np.inf


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with ``points ** dims`` cells.

    Parameters
    ----------
    dims : int
        Spatial dimension, 1 to 3.
    points : int
        Cells per dimension.
    side : float
        Side length of the (cubic) domain.
    boundary : {"periodic", "truncated"}
        Periodic grids wrap index arithmetic modulo ``points``.
    """

    dims: int = 2
    points: int = 64
    side: float = 1.0
    boundary: str = PERIODIC

    def __post_init__(self):
        if not (1 <= int(self.dims) <= 3):
            raise ValueError(f"dims must be 1, 2 or 3, got {self.dims}")
        if int(self.points) < 1:
            raise ValueError(f"points must be positive, got {self.points}")
        if not (self.side > 0 and np.isfinite(self.side)):
            raise ValueError(f"side must be a positive real, got {self.side}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        object.__setattr__(self, "dims", int(self.dims))
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "side", float(self.side))

    @property
    def shape(self):
        return (self.points,) * self.dims

    @property
    def size(self):
        return self.points**self.dims

    @property
    def spacing(self):
        return self.side / self.points

    @property
    def cell_volume(self):
        return self.spacing**self.dims

    @property
    def volume(self):
        return self.side**self.dims

    @property
    def periodic(self):
        return self.boundary == PERIODIC

    def coordinates(self):
        """Cell centres along one axis."""
        return (np.arange(self.points) + 0.5) * self.spacing

    def mesh(self):
        """Tuple of ``dims`` coordinate arrays, each of shape ``self.shape``."""
        x = self.coordinates()
        return tuple(np.meshgrid(*([x] * self.dims), indexing="ij"))

    def displacement(self, a, b):
        """Displacement ``a - b`` along one axis, wrapped on periodic grids."""
        z = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.periodic:
            z = (z + 0.5 * self.side) % self.side - 0.5 * self.side
        return z

    def distance_to(self, point):
        """Euclidean (periodic) distance from every cell centre to ``point``."""
        point = np.broadcast_to(np.asarray(point, dtype=float), (self.dims,))
        sq = np.zeros(self.shape)
        for axis, x in enumerate(self.mesh()):
            sq += self.displacement(x, point[axis]) ** 2
        return np.sqrt(sq)


@dataclass(frozen=True)
class TimeAxis:
    """Horizon ``T`` split into ``N`` steps; marginals are indexed ``0..N``."""

    horizon: float = 1.0
    steps: int = 31

    def __post_init__(self):
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.steps) < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self):
        return self.horizon / self.steps

    def times(self):
        return np.arange(self.steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class Field:
    """An array of cell values tied to the grid it lives on."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.grid.size:
            raise GridMismatch(f"{values.size} values do not fit grid of {self.grid.size} cells")
        object.__setattr__(self, "values", values.reshape(self.grid.shape))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))

    @property
    def flat(self):
        """Row-major copy of the values."""
        return self.values.ravel()


def _values(f):
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def integrate(f, grid=None):
    """Total mass ``cell_volume * sum(values)`` of a field."""
    grid = f.grid if isinstance(f, Field) else grid
    if grid is None:
        raise TypeError("integrate() needs a grid when given a bare array")
    return float(grid.cell_volume * np.sum(_values(f)))


def normalize_to_probability(f):
    """Rescale a nonnegative field so that it integrates to one."""
    mass = integrate(f)
    if mass == 0:
        raise ZeroMass("cannot normalize a field with zero mass")
    return Field(f.grid, f.values / mass)


def hadamard(a, b):
    """Pointwise product of two fields on the same grid."""
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} != {b.grid}")
    return Field(a.grid, a.values * b.values)


def shift(f, offset):
    """Cyclically shift a field by ``offset`` cells (an int or one int per axis)."""
    offset = np.broadcast_to(np.asarray(offset, dtype=int), (f.grid.dims,))
    return Field(f.grid, np.roll(f.values, tuple(offset), axis=tuple(range(f.grid.dims))))
