"""Multi-marginal Sinkhorn over a Markov chain of heat kernels.

The reference coupling on ``N + 1`` time slices is the chain

    R(x_0, ..., x_N) = prod_k P(x_k, x_{k-1})

and the optimal plan is ``prod_k a_k(x_k) * R`` for scalings ``a_k = exp(u_k)``.
Integrating the plan against every slice but ``k`` factorizes into
``a_k * alpha_k * beta_k`` with

    alpha_0 = 1,  alpha_k = K (a_{k-1} alpha_{k-1})
    beta_N  = 1,  beta_k  = K^T (a_{k+1} beta_{k+1})

so a Gauss-Seidel sweep over ``k = 0..N`` costs ``2N`` kernel applications.
Scalings and messages are stored as logs throughout.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from .exceptions import GridMismatch, MaxIterations, StaleMessages, ValidationError
from .functionals import (
    CongestionPlusPotential, CostSchedule, Congestion, FixedMarginal, Nonlocal, Potential,
    conjugate_term, interaction_potential, primal_cost, prox_log,
)
from .grid import TimeAxis
from .kernel import apply_kernel_log, build_heat_kernel

logger = logging.getLogger(__name__)

STABILIZATION = ("auto", "linear", "log")
INNER_LOOSEN_MAX = 1e4
INNER_LOOSEN_RATIO = 1e-2


@dataclass
class SolverConfig:
    """Iteration controls.

    ``potential_tolerance`` defaults to ``marginal_tolerance``.  ``damping``
    is the relaxation factor of the outer fixed-point loop (1 = plain
    replacement of the linearized interaction potential).
    """

    max_sweeps: int = 20000
    marginal_tolerance: float = 1e-8
    potential_tolerance: Optional[float] = None
    fixed_point_tolerance: float = 1e-6
    stabilization: str = "auto"
    outer_max_iters: int = 200
    damping: float = 1.0

    def __post_init__(self):
        if self.stabilization not in STABILIZATION:
            raise ValueError(f"stabilization must be one of {STABILIZATION}")
        for name in ("marginal_tolerance", "fixed_point_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.potential_tolerance is not None and not self.potential_tolerance > 0:
            raise ValueError("potential_tolerance must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_sweeps < 1 or self.outer_max_iters < 1:
            raise ValueError("iteration limits must be positive")

    @property
    def potential_tol(self):
        return self.marginal_tolerance if self.potential_tolerance is None else self.potential_tolerance


@dataclass
class ConvergenceReport:
    sweeps: int = 0
    converged: bool = False
    residuals: dict = field(default_factory=dict)
    potential_change: float = np.inf
    dual_trace: list = field(default_factory=list)
    primal: float = np.nan
    dual: float = np.nan
    outer_residuals: list = field(default_factory=list)
    inner_sweeps: list = field(default_factory=list)
    route: str = ""

    @property
    def gap(self):
        return self.primal - self.dual

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    def to_dict(self):
        return {
            "sweeps": self.sweeps,
            "converged": self.converged,
            "residuals": {str(k): v for k, v in sorted(self.residuals.items())},
            "potential_change": self.potential_change,
            "primal": self.primal,
            "dual": self.dual,
            "gap": self.gap,
            "dual_trace_tail": self.dual_trace[-5:],
            "outer_residuals": self.outer_residuals,
            "inner_sweeps": self.inner_sweeps,
            "route": self.route,
        }


class SolverState:
    """Log-scalings and chain messages for ``N + 1`` slices.

    Attributes
    ----------
    log_a, log_alpha, log_beta : ndarray, shape ``(N + 1,) + grid.shape``
    alpha_valid, beta_valid : ndarray of bool
        Dirty flags; a message is valid when it reflects the current scalings.
    """

    def __init__(self, grid, steps):
        self.grid = grid
        self.steps = int(steps)
        shape = (self.steps + 1,) + grid.shape
        self.log_a = np.zeros(shape)
        self.log_alpha = np.zeros(shape)
        self.log_beta = np.zeros(shape)
        self.alpha_valid = np.zeros(self.steps + 1, dtype=bool)
        self.beta_valid = np.zeros(self.steps + 1, dtype=bool)
        self.schedule = None

    @property
    def messages_valid(self):
        return bool(self.alpha_valid.all() and self.beta_valid.all())

    def copy(self):
        other = SolverState.__new__(SolverState)
        other.grid, other.steps = self.grid, self.steps
        for name in ("log_a", "log_alpha", "log_beta", "alpha_valid", "beta_valid"):
            setattr(other, name, getattr(self, name).copy())
        other.schedule = self.schedule
        return other

    def set_log_scaling(self, k, values):
        """Overwrite ``u_k`` and mark the messages that depend on it stale."""
        self.log_a[k] = values
        self.alpha_valid[k + 1:] = False
        self.beta_valid[:k] = False

    def refresh(self, K, method="auto"):
        """Recompute every message from the current scalings."""
        self.log_alpha[0] = 0.0
        for k in range(1, self.steps + 1):
            self.log_alpha[k] = apply_kernel_log(K, self.log_a[k - 1] + self.log_alpha[k - 1], method=method)
        self.alpha_valid[:] = True
        self._backward(K, method)
        return self

    def _backward(self, K, method):
        self.log_beta[self.steps] = 0.0
        for k in range(self.steps - 1, -1, -1):
            self.log_beta[k] = apply_kernel_log(
                K, self.log_a[k + 1] + self.log_beta[k + 1], transpose=True, method=method)
        self.beta_valid[:] = True

    def _check(self, k=None):
        ok = self.messages_valid if k is None else (self.alpha_valid[k] and self.beta_valid[k])
        if not ok:
            raise StaleMessages("messages are stale; call refresh() or run a sweep")

    def log_marginal(self, k):
        self._check(k)
        return self.log_a[k] + self.log_alpha[k] + self.log_beta[k]

    def marginal_at(self, k):
        """Density of the ``k``-th marginal of the current plan."""
        return np.exp(self.log_marginal(k))

    def marginals(self):
        return [self.marginal_at(k) for k in range(self.steps + 1)]

    def total_mass(self):
        """``int exp(sum u_k) dR``, read off the last slice."""
        self._check(self.steps)
        lm = self.log_a[self.steps] + self.log_alpha[self.steps]
        return float(self.grid.cell_volume * np.sum(np.exp(lm)))

    def pair_marginal(self, K, k):
        """Joint density of slices ``k`` and ``k + 1`` as an ``M x M`` matrix.

        Rows index ``x_k`` and columns ``x_{k+1}`` in row-major cell order.
        Intended for small grids only.
        """
        self._check()
        if not 0 <= k < self.steps:
            raise IndexError(k)
        left = (self.log_a[k] + self.log_alpha[k]).ravel()
        right = (self.log_a[k + 1] + self.log_beta[k + 1]).ravel()
        log_dense = reduce(lambda p, q: (p[:, None, :, None] + q[None, :, None, :]).reshape(
            p.shape[0] * q.shape[0], -1), K.log_matrices)
        return np.exp(left[:, None] + log_dense.T + right[None, :])


def initial_state(grid, steps):
    """All-zero log-scalings (``a_k = 1``)."""
    return SolverState(grid, steps)


def sweep(state, schedule, K, dt, method="auto"):
    """One Gauss-Seidel pass ``k = 0..N`` of closed-form dual updates.

    Each update sees the current sweep's scalings for ``i < k`` (through the
    forward message) and the previous sweep's for ``i > k`` (through the
    backward message).  Messages are left valid on return.
    """
    N = state.steps
    if schedule.steps != N:
        raise ValidationError(f"schedule has {schedule.steps} steps, state has {N}")
    if not state.beta_valid.all():
        state._backward(K, method)
    state.log_alpha[0] = 0.0
    state.alpha_valid[0] = True
    for k in range(N + 1):
        if k > 0:
            state.log_alpha[k] = apply_kernel_log(
                K, state.log_a[k - 1] + state.log_alpha[k - 1], method=method)
            state.alpha_valid[k] = True
        log_c = state.log_alpha[k] + state.log_beta[k]
        state.log_a[k] = prox_log(schedule[k], log_c, dt, terminal=(k == N))
    state.beta_valid[:N] = False
    state._backward(K, method)
    return state


def marginal_at(state, k):
    return state.marginal_at(k)


def dual_objective(state, schedule, K, dt):
    """Dual value ``sum_k -(w_k F_k)^*(-u_k) - (int exp(+u) dR - 1)``."""
    state._check()
    vol = state.grid.cell_volume
    N = state.steps
    total = sum(conjugate_term(schedule[k], state.log_a[k], dt, k == N, vol) for k in range(N + 1))
    return float(total - (state.total_mass() - 1.0))


def plan_entropy_of(state):
    """``H(gamma | R) = sum_k int u_k dmu_k`` for the product-form plan."""
    state._check()
    vol = state.grid.cell_volume
    total = 0.0
    for k in range(state.steps + 1):
        mu = state.marginal_at(k)
        pos = mu > 0
        total += float(np.sum(state.log_a[k][pos] * mu[pos]))
    return vol * total


def primal_objective(state, schedule, dt):
    """Plan entropy plus the weighted linear costs (indicators count as 0)."""
    vol = state.grid.cell_volume
    N = state.steps
    costs = sum(primal_cost(schedule[k], state.marginal_at(k), dt, k == N, vol) for k in range(N + 1))
    return plan_entropy_of(state) + costs


def marginal_residuals(state, schedule):
    """L1 violation (mass units) of every constrained slice."""
    vol = state.grid.cell_volume
    out = {}
    for k, cost in enumerate(schedule.costs):
        if isinstance(cost, FixedMarginal):
            out[k] = float(vol * np.sum(np.abs(state.marginal_at(k) - cost.target)))
        elif isinstance(cost, (Congestion, CongestionPlusPotential)):
            out[k] = float(vol * np.sum(np.maximum(state.marginal_at(k) - cost.cap, 0.0)))
    return out


def _log_change(new, old):
    same = new == old  # covers matching infinities
    with np.errstate(invalid="ignore"):
        diff = np.abs(new - old)
    diff[same] = 0.0
    diff[np.isnan(diff)] = np.inf
    return float(diff.max()) if diff.size else 0.0


def _inner_loop(state, schedule, K, dt, config, report, method, loosen=1.0):
    tol, ptol = loosen * config.marginal_tolerance, loosen * config.potential_tol
    if not state.messages_valid:
        state.refresh(K, method)
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        old = state.log_a.copy()
        sweep(state, schedule, K, dt, method)
        report.sweeps += 1
        report.residuals = marginal_residuals(state, schedule)
        report.potential_change = _log_change(state.log_a, old)
        report.dual_trace.append(dual_objective(state, schedule, K, dt))
        if sweeps % 100 == 0:
            logger.debug("sweep %d: residual %.3e, potential change %.3e",
                         sweeps, report.max_residual, report.potential_change)
        if report.max_residual < tol and report.potential_change < ptol:
            report.inner_sweeps.append(sweeps)
            return True
    report.inner_sweeps.append(sweeps)
    return False


def _outer_loop(state, schedule, grid, K, dt, config, report, method):
    # Inner solves run to a tolerance tied to the current fixed-point residual
    # (never looser than INNER_LOOSEN_MAX times the configured one); the
    # loop only terminates after a full-tolerance inner solve.
    f2 = {k: np.zeros(grid.shape) for k, c in enumerate(schedule.costs) if isinstance(c, Nonlocal)}
    active = _linearized_from(schedule, f2)
    loosen = INNER_LOOSEN_MAX
    if not _inner_loop(state, active, K, dt, config, report, method, loosen):
        return False, active
    for it in range(config.outer_max_iters):
        new = {k: interaction_potential(schedule[k].kernel, state.marginal_at(k), grid) for k in f2}
        res = max(float(np.max(np.abs(new[k] - f2[k]))) for k in f2)
        report.outer_residuals.append(res)
        logger.debug("outer iteration %d: fixed-point residual %.3e", it, res)
        if res < config.fixed_point_tolerance:
            if loosen == 1.0:
                return True, active
            loosen = 1.0
        else:
            f2 = {k: f2[k] + config.damping * (new[k] - f2[k]) for k in f2}
            active = _linearized_from(schedule, f2)
            loosen = min(INNER_LOOSEN_MAX, max(1.0, INNER_LOOSEN_RATIO * res / config.marginal_tolerance))
        if not _inner_loop(state, active, K, dt, config, report, method, loosen):
            return False, active
    return False, active


def _linearized_from(schedule, f2):
    costs = list(schedule.costs)
    for k, pot in f2.items():
        cap = schedule[k].cap
        costs[k] = Potential(pot) if cap is None else CongestionPlusPotential(cap, pot)
    return CostSchedule(costs)


def solve(schedule, grid, time_axis, epsilon, config=None, state=None, K=None):
    """Run Sinkhorn sweeps (and the outer linearization loop if needed).

    Parameters
    ----------
    schedule : CostSchedule
    grid : GridSpec
    time_axis : TimeAxis
    epsilon : float
        Viscosity of the reference Brownian motion.
    config : SolverConfig, optional
    state : SolverState, optional
        Warm start; defaults to all-zero log-scalings.
    K : SeparableKernel, optional
        Prebuilt kernel for ``tau = time_axis.dt``.

    Returns
    -------
    state : SolverState
    report : ConvergenceReport
    frames : list of ndarray
        The ``N + 1`` marginal densities.

    Raises
    ------
    MaxIterations
        With ``state``, ``report`` and ``frames`` attached.
    """
    config = SolverConfig() if config is None else config
    if not isinstance(time_axis, TimeAxis):
        raise TypeError("time_axis must be a TimeAxis")
    if schedule.steps != time_axis.steps:
        raise ValidationError(f"schedule has {schedule.steps} steps, time axis {time_axis.steps}")
    schedule.validate(grid)
    dt = time_axis.dt
    if K is None:
        K = build_heat_kernel(grid, dt, epsilon,
                              mode="linear" if config.stabilization == "linear" else "auto")
    elif K.grid != grid:
        raise GridMismatch("kernel grid differs from problem grid")
    method = config.stabilization
    state = initial_state(grid, time_axis.steps) if state is None else state
    report = ConvergenceReport(route="log" if method == "log" or (method == "auto" and K.use_log) else "linear")

    if not schedule.has_nonlocal:
        ok = _inner_loop(state, schedule, K, dt, config, report, method)
        active = schedule
    else:
        ok, active = _outer_loop(state, schedule, grid, K, dt, config, report, method)

    report.converged = ok
    report.dual = dual_objective(state, active, K, dt)
    report.primal = primal_objective(state, active, dt)
    frames = state.marginals()
    state.schedule = active
    if not ok:
        raise MaxIterations(
            f"no convergence after {report.sweeps} sweeps "
            f"(residual {report.max_residual:.3e}, potential change {report.potential_change:.3e})",
            state=state, report=report, frames=frames)
    return state, report, frames
