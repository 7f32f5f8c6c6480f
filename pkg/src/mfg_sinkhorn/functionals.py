"""Per-time-slice costs and their closed-form scaling updates.

A multi-marginal Sinkhorn sweep updates one log-scaling ``u_k`` at a time.
Holding the other scalings fixed, the dual objective restricted to ``u_k`` is

    -(w F)^*(-u) - sum_x c(x) exp(u(x)) * cell_volume

where ``c = alpha_k * beta_k`` is the product of chain messages and ``w`` is
the time weight of the slice (``dt`` for running costs, ``1`` for the terminal
cost).  Every cost below has a pointwise maximizer in closed form.  All maps
are implemented on log arrays (``log_c -> log_a``); :func:`prox_update` is the
linear-domain wrapper.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import GridMismatch, Infeasible, NonConvexDirect, ValidationError
from .grid import Field, integrate

_PROB_TOL = 1e-12


def _arr(x):
    return x.values if isinstance(x, Field) else np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class Free:
    """No cost: the slice is left unconstrained."""


@dataclass(frozen=True, eq=False)
class FixedMarginal:
    """Indicator forcing the slice marginal to equal ``target``."""

    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", _arr(self.target))


@dataclass(frozen=True, eq=False)
class Congestion:
    """Hard cap ``rho <= cap`` on the density."""

    cap: float


@dataclass(frozen=True, eq=False)
class Potential:
    """Linear cost ``int V rho``; ``+inf`` entries of ``V`` are obstacles."""

    potential: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "potential", _arr(self.potential))


@dataclass(frozen=True, eq=False)
class CongestionPlusPotential:
    cap: float
    potential: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "potential", _arr(self.potential))


@dataclass(frozen=True, eq=False)
class Nonlocal:
    """Pairwise interaction ``-1/2 int int K(x - y) rho(y) rho(x)``.

    ``kernel`` is indexed by displacement: entry ``j`` (per axis) holds
    ``K(j * h)`` with indices wrapped modulo ``m``.  The cost is not convex
    and is only usable after :func:`linearize_nonlocal`.
    """

    kernel: np.ndarray
    symmetric: bool = False
    cap: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kernel", _arr(self.kernel))


CostSpec = Union[Free, FixedMarginal, Congestion, Potential, CongestionPlusPotential, Nonlocal]


@dataclass
class CostSchedule:
    """One cost per time index ``0..N``; index 0 must be a fixed marginal."""

    costs: list

    def __post_init__(self):
        self.costs = list(self.costs)
        if len(self.costs) < 2:
            raise ValidationError("a schedule needs at least two time indices")
        if not isinstance(self.costs[0], FixedMarginal):
            raise ValidationError("index 0 must be FixedMarginal (the initial density)")

    def __len__(self):
        return len(self.costs)

    def __getitem__(self, k):
        return self.costs[k]

    @property
    def steps(self):
        return len(self.costs) - 1

    @property
    def has_nonlocal(self):
        return any(isinstance(c, Nonlocal) for c in self.costs)

    def validate(self, grid):
        """Check every cost against ``grid``; raise :class:`ValidationError`."""
        for k, cost in enumerate(self.costs):
            for name in ("target", "potential", "kernel"):
                arr = getattr(cost, name, None)
                if arr is not None and arr.shape != grid.shape:
                    raise GridMismatch(f"index {k}: {name} has shape {arr.shape}, grid is {grid.shape}")
            if isinstance(cost, FixedMarginal):
                t = cost.target
                if np.any(~np.isfinite(t)) or np.any(t < 0):
                    raise ValidationError(f"index {k}: target must be finite and nonnegative")
                mass = integrate(t, grid)
                if abs(mass - 1.0) > _PROB_TOL:
                    raise ValidationError(f"index {k}: target has mass {mass!r}, expected 1")
            cap = getattr(cost, "cap", None)
            if cap is not None:
                if not cap > 0:
                    raise ValidationError(f"index {k}: congestion cap must be positive")
                if cap * grid.volume < 1.0:
                    raise ValidationError(
                        f"index {k}: cap {cap} times domain volume {grid.volume} is below 1")
            pot = getattr(cost, "potential", None)
            if pot is not None and (np.any(np.isnan(pot)) or np.any(pot == -np.inf)):
                raise ValidationError(f"index {k}: potential must be real or +inf")
        return self


def _weight(dt, terminal):
    return 1.0 if terminal else dt


def _scaled_potential(V, w):
    # keeps w * inf == inf and never produces nan
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(V), np.inf, w * V)


def prox_log(cost, log_c, dt, terminal=False):
    """Maximize the restricted dual pointwise; log arrays in and out.

    Parameters
    ----------
    cost : CostSpec
    log_c : ndarray
        Log of the message product ``alpha_k * beta_k``.
    dt : float
        Time step; the weight of running costs.
    terminal : bool
        Use weight 1 (the terminal cost) instead of ``dt``.
    """
    log_c = np.asarray(log_c, dtype=float)
    w = _weight(dt, terminal)
    if isinstance(cost, Free):
        return np.zeros_like(log_c)
    if isinstance(cost, FixedMarginal):
        t = cost.target
        pos = t > 0
        if np.any(pos & (log_c == -np.inf)):
            raise Infeasible("target has mass where the reference chain puts none")
        out = np.full_like(log_c, -np.inf)
        with np.errstate(divide="ignore"):
            out[pos] = np.log(t[pos]) - log_c[pos]
        return out
    if isinstance(cost, Congestion):
        return np.minimum(0.0, np.log(cost.cap) - log_c)
    if isinstance(cost, Potential):
        return -_scaled_potential(cost.potential, w) + np.zeros_like(log_c)
    if isinstance(cost, CongestionPlusPotential):
        return np.minimum(-_scaled_potential(cost.potential, w), np.log(cost.cap) - log_c)
    if isinstance(cost, Nonlocal):
        raise NonConvexDirect("linearize the nonlocal cost before the prox step")
    raise TypeError(f"unknown cost {cost!r}")


def prox_update(cost, c, dt, terminal=False):
    """Linear-domain scaling ``a = exp(u)`` maximizing the restricted dual.

    ===========================  ======================================
    cost                         returned scaling
    ===========================  ======================================
    Free                         ``1``
    FixedMarginal(rho)           ``rho / c`` where ``rho > 0``, else 0
    Congestion(cap)              ``min(1, cap / c)``
    Potential(V)                 ``exp(-w V)``, 0 on obstacles
    CongestionPlusPotential      ``min(exp(-w V), cap / c)``
    ===========================  ======================================
    """
    c = _arr(c)
    if np.any(c < 0):
        raise ValueError("message product must be nonnegative")
    with np.errstate(divide="ignore"):
        log_c = np.log(c)
    return np.exp(prox_log(cost, log_c, dt, terminal))


def restricted_dual(cost, u, c, dt, terminal=False, cell_volume=1.0):
    """Pointwise value of ``-(wF)^*(-u) - c exp(u)``, times ``cell_volume``.

    Used to check prox maximality by scanning ``u``.
    """
    u = np.asarray(u, dtype=float)
    c = np.asarray(c, dtype=float)
    return cell_volume * (_conjugate_pointwise(cost, u, dt, terminal) - c * np.exp(u))


def _conjugate_pointwise(cost, u, dt, terminal):
    w = _weight(dt, terminal)
    if isinstance(cost, Free):
        return np.where(u >= 0, 0.0, -np.inf)
    if isinstance(cost, FixedMarginal):
        t = np.broadcast_to(cost.target, u.shape)
        with np.errstate(invalid="ignore"):
            return np.where(t > 0, t * u, 0.0)
    if isinstance(cost, Congestion):
        return -cost.cap * np.maximum(-u, 0.0)
    wV = np.broadcast_to(_scaled_potential(cost.potential, w), u.shape)
    if isinstance(cost, Potential):
        with np.errstate(invalid="ignore"):
            ok = (u >= -wV) | np.isinf(wV)
        return np.where(ok, 0.0, -np.inf)
    if isinstance(cost, CongestionPlusPotential):
        with np.errstate(invalid="ignore"):
            gap = np.where(np.isinf(wV), 0.0, np.maximum(-u - wV, 0.0))
        return -cost.cap * gap
    if isinstance(cost, Nonlocal):
        raise NonConvexDirect("the nonlocal cost has no closed-form conjugate")
    raise TypeError(f"unknown cost {cost!r}")


def conjugate_term(cost, log_a, dt, terminal=False, cell_volume=1.0):
    """Dual contribution ``-(wF)^*(-u_k)`` of one slice, integrated."""
    vals = _conjugate_pointwise(cost, np.asarray(log_a, dtype=float), dt, terminal)
    if np.any(vals == -np.inf):
        return -np.inf
    return float(cell_volume * np.sum(vals))


def primal_cost(cost, mu, dt, terminal=False, cell_volume=1.0):
    """Weighted primal cost ``w F(mu)`` of one slice.

    Indicator costs (fixed marginals, congestion) contribute zero; their
    violations are reported separately as residuals.  Mass on an obstacle
    yields ``+inf``.
    """
    if isinstance(cost, (Potential, CongestionPlusPotential)):
        mu = np.asarray(mu, dtype=float)
        wV = _scaled_potential(cost.potential, _weight(dt, terminal))
        blocked = np.isinf(wV)
        if np.any(mu[blocked] > 0):
            return np.inf
        return float(cell_volume * np.sum(wV[~blocked] * mu[~blocked]))
    if isinstance(cost, Nonlocal):
        raise NonConvexDirect("evaluate nonlocal costs with nonlocal_energy")
    return 0.0


def interaction_potential(kernel, rho, grid):
    """``-sum_y K(x - y) rho(y) * cell_volume`` by periodic FFT convolution."""
    kernel, rho = _arr(kernel), _arr(rho)
    if kernel.shape != grid.shape or rho.shape != grid.shape:
        raise GridMismatch("kernel and density must match the grid shape")
    axes = tuple(range(kernel.ndim))
    conv = np.fft.irfftn(np.fft.rfftn(kernel, axes=axes) * np.fft.rfftn(rho, axes=axes), s=grid.shape, axes=axes)
    return -grid.cell_volume * conv


def linearize_nonlocal(spec, rho, grid):
    """Freeze a nonlocal cost into a potential computed from ``rho``.

    Returns ``Potential(f2)`` or ``CongestionPlusPotential(cap, f2)`` with
    ``f2 = interaction_potential(spec.kernel, rho, grid)``.  The factor 1/2 of
    the interaction energy is not applied.
    """
    if not isinstance(spec, Nonlocal):
        raise TypeError("linearize_nonlocal expects a Nonlocal cost")
    if isinstance(rho, Field) and rho.grid != grid:
        raise GridMismatch(f"{rho.grid} != {grid}")
    f2 = interaction_potential(spec.kernel, rho, grid)
    if spec.cap is None:
        return Potential(f2)
    return CongestionPlusPotential(spec.cap, f2)


def nonlocal_energy(kernel, rho, grid):
    """Interaction energy ``-1/2 int int K(x - y) rho(y) rho(x)``."""
    rho = _arr(rho)
    return float(0.5 * grid.cell_volume * np.sum(interaction_potential(kernel, rho, grid) * rho))
