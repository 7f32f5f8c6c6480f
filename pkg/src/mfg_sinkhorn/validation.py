"""Input checks shared by the estimator façade and the scenario builder."""

import numbers

import numpy as np

from .exceptions import GridMismatch, ValidationError, ZeroMass
from .functionals import CostSchedule
from .grid import Field, GridSpec, TimeAxis

MASS_TOLERANCE = 1e-12


def check_scalar(value, name, positive=True, finite=True):
    """Return ``value`` as a float after type, sign and finiteness checks."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if finite and not np.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")
    if positive and not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def check_grid(grid, shape=None):
    """Accept a :class:`GridSpec`, or infer a unit-side periodic grid from ``shape``."""
    if grid is None:
        if shape is None:
            raise ValidationError("a grid or an array shape is required")
        if len(set(shape)) != 1:
            raise ValidationError(f"arrays must be square, got shape {shape}")
        return GridSpec(dims=len(shape), points=shape[0])
    if not isinstance(grid, GridSpec):
        raise ValidationError(f"expected a GridSpec, got {type(grid).__name__}")
    if shape is not None and tuple(shape) != grid.shape:
        raise GridMismatch(f"array of shape {tuple(shape)} on grid of shape {grid.shape}")
    return grid


def check_field(f, grid):
    """Return the values of ``f`` as a finite array shaped like ``grid``."""
    if isinstance(f, Field):
        if f.grid != grid:
            raise GridMismatch(f"{f.grid} != {grid}")
        values = f.values
    else:
        values = np.asarray(f, dtype=float)
    if values.shape != grid.shape:
        try:
            values = values.reshape(grid.shape)
        except ValueError:
            raise GridMismatch(f"array of shape {values.shape} on grid of shape {grid.shape}") from None
    if not np.all(np.isfinite(values)):
        raise ValidationError("field has non-finite entries")
    return values


def check_probability_field(f, grid, tol=MASS_TOLERANCE, normalize=False):
    """Check nonnegativity and unit mass (or rescale when ``normalize``)."""
    values = check_field(f, grid)
    if np.any(values < 0):
        raise ValidationError("density has negative entries")
    mass = grid.cell_volume * values.sum()
    if not mass > 0:
        raise ZeroMass("density has zero mass")
    if normalize:
        return values / mass
    if abs(mass - 1.0) > tol:
        raise ValidationError(f"density has mass {mass:.17g}, expected 1")
    return values


def check_schedule(schedule, grid, time_axis=None):
    """Validate a cost schedule against a grid and (optionally) a time axis."""
    if not isinstance(schedule, CostSchedule):
        raise ValidationError(f"expected a CostSchedule, got {type(schedule).__name__}")
    if time_axis is not None:
        if not isinstance(time_axis, TimeAxis):
            raise ValidationError(f"expected a TimeAxis, got {type(time_axis).__name__}")
        if time_axis.steps != schedule.steps:
            raise ValidationError(f"schedule has {schedule.steps} steps, time axis {time_axis.steps}")
    return schedule.validate(grid)
