"""Quantities measured on converged runs.

Entropies are taken relative to Lebesgue measure, discretized with the cell
volume, so that they converge under grid refinement:

    Ent(rho) = sum_x rho(x) log(rho(x)) * cell_volume,    0 log 0 = 0
"""

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .functionals import CongestionPlusPotential, Potential
from .grid import Field
from .sinkhorn import dual_objective, plan_entropy_of, primal_objective


class DegenerateSupportWarning(UserWarning):
    """The density vanishes somewhere, so gradients of its log are undefined."""


def _grid_values(f, grid):
    if isinstance(f, Field):
        return f.values, f.grid
    if grid is None:
        raise TypeError("a grid is required for bare arrays")
    return np.asarray(f, dtype=float), grid


def entropy(f, grid=None):
    """Discrete ``int rho log rho`` of a probability density."""
    values, grid = _grid_values(f, grid)
    pos = values > 0
    return float(grid.cell_volume * np.sum(values[pos] * np.log(values[pos])))


def fisher_information(f, grid=None):
    """``4 * int |grad sqrt(rho)|^2`` with centred differences.

    Differences wrap around on periodic grids and become one-sided at the
    edges of truncated grids.  A :class:`DegenerateSupportWarning` is issued
    when the density has zeros.
    """
    values, grid = _grid_values(f, grid)
    if np.any(values <= 0):
        warnings.warn("density is not strictly positive", DegenerateSupportWarning, stacklevel=2)
    root = np.sqrt(np.maximum(values, 0.0))
    h = grid.spacing
    total = np.zeros_like(root)
    for axis in range(grid.dims):
        if grid.periodic:
            d = (np.roll(root, -1, axis) - np.roll(root, 1, axis)) / (2 * h)
        else:
            d = np.gradient(root, h, axis=axis, edge_order=1)
        total += d * d
    return float(4.0 * grid.cell_volume * np.sum(total))


def plan_entropy(state, schedule=None):
    """``H(gamma | R^N)`` of the converged plan, ``sum_k int u_k dmu_k``."""
    return plan_entropy_of(state)


def kinetic_energy_estimate(state, schedule=None):
    """Discrete kinetic energy ``H(gamma | R^N) - Ent(mu_0)``.

    In units of the reference process: multiply by ``epsilon`` to compare
    with ``1/2 int |v|^2`` of the underlying transport.
    """
    return plan_entropy_of(state) - entropy(state.marginal_at(0), state.grid)


def congestion_violation(state, schedule):
    """Largest pointwise excess ``max(mu_k - cap, 0)`` over capped slices."""
    worst = 0.0
    for k, cost in enumerate(schedule.costs):
        cap = getattr(cost, "cap", None)
        if cap is not None:
            worst = max(worst, float(np.max(state.marginal_at(k) - cap)))
    return max(worst, 0.0)


def obstacle_mass(state, schedule):
    """Largest mass found inside obstacles (``+inf`` potential) at any slice."""
    worst = 0.0
    vol = state.grid.cell_volume
    for k, cost in enumerate(schedule.costs):
        if isinstance(cost, (Potential, CongestionPlusPotential)):
            blocked = np.isinf(cost.potential)
            if np.any(blocked):
                worst = max(worst, float(vol * np.sum(state.marginal_at(k)[blocked])))
    return worst


def duality_gap(state, schedule, K, dt):
    """``primal - dual`` and its relative size ``|gap| / max(1, |primal|)``."""
    primal = primal_objective(state, schedule, dt)
    dual = dual_objective(state, schedule, K, dt)
    gap = primal - dual
    return gap, abs(gap) / max(1.0, abs(primal))


@dataclass
class RunMetrics:
    entropies: list = field(default_factory=list)
    fisher: list = field(default_factory=list)
    plan_entropy: float = np.nan
    kinetic_energy: float = np.nan
    primal: float = np.nan
    dual: float = np.nan
    duality_gap: float = np.nan
    relative_gap: float = np.nan
    congestion_violation: float = 0.0
    obstacle_mass: float = 0.0

    def to_dict(self):
        return asdict(self)


def compute_metrics(state, schedule, K, dt):
    """Evaluate every diagnostic on a converged state.

    ``schedule`` must be convex (nonlocal costs already linearized).
    """
    marginals = state.marginals()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSupportWarning)
        fisher = [fisher_information(mu, state.grid) for mu in marginals]
    gap, rel = duality_gap(state, schedule, K, dt)
    primal = primal_objective(state, schedule, dt)
    return RunMetrics(
        entropies=[entropy(mu, state.grid) for mu in marginals],
        fisher=fisher,
        plan_entropy=plan_entropy(state),
        kinetic_energy=kinetic_energy_estimate(state),
        primal=primal,
        dual=primal - gap,
        duality_gap=gap,
        relative_gap=rel,
        congestion_violation=congestion_violation(state, schedule),
        obstacle_mass=obstacle_mass(state, schedule),
    )
