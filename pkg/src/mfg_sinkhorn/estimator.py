"""Estimator-style façade over :func:`mfg_sinkhorn.sinkhorn.solve`.

Only the parameter handling of scikit-learn estimators carries over (the
``get_params``/``set_params``/``clone`` protocol): a "fit" here solves one
transport problem and there is no ``predict``.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import MaxIterations
from .functionals import CostSchedule, FixedMarginal, Free
from .grid import TimeAxis
from .kernel import build_heat_kernel
from .sinkhorn import SolverConfig, solve
from .validation import check_grid, check_probability_field, check_scalar, check_schedule


class MeanFieldSinkhorn(BaseEstimator):
    """Entropic mean-field game / Schrödinger bridge solver.

    Parameters
    ----------
    epsilon : float
        Viscosity of the reference Brownian motion.
    horizon : float
        Final time ``T``.
    steps : int
        Number of time steps ``N``, used when fitting from two densities.
    grid : GridSpec, optional
        Inferred from the data shape (unit-side periodic) when omitted.
    max_sweeps, tol, potential_tol, fixed_point_tol, stabilization, outer_max_iters, damping
        Forwarded to :class:`SolverConfig`.
    raise_on_max_iter : bool
        Re-raise :class:`MaxIterations`; otherwise the partial solution is
        kept and ``converged_`` is False.

    Attributes
    ----------
    marginals_ : ndarray, shape ``(N + 1,) + grid.shape``
    log_scalings_ : ndarray, same shape
    state_, report_, schedule_, grid_, kernel_
    n_iter_ : int
        Total Sinkhorn sweeps.
    converged_ : bool
    """

    def __init__(self, epsilon=1.0, horizon=1.0, steps=31, grid=None, max_sweeps=20000, tol=1e-8,
                 potential_tol=None, fixed_point_tol=1e-6, stabilization="auto", outer_max_iters=200,
                 damping=1.0, raise_on_max_iter=True):
        self.epsilon = epsilon
        self.horizon = horizon
        self.steps = steps
        self.grid = grid
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.potential_tol = potential_tol
        self.fixed_point_tol = fixed_point_tol
        self.stabilization = stabilization
        self.outer_max_iters = outer_max_iters
        self.damping = damping
        self.raise_on_max_iter = raise_on_max_iter

    def _config(self):
        return SolverConfig(max_sweeps=self.max_sweeps, marginal_tolerance=self.tol,
                            potential_tolerance=self.potential_tol,
                            fixed_point_tolerance=self.fixed_point_tol,
                            stabilization=self.stabilization, outer_max_iters=self.outer_max_iters,
                            damping=self.damping)

    def fit(self, X, y=None):
        """Solve the problem described by ``X`` (and ``y``).

        Parameters
        ----------
        X : CostSchedule or array_like
            A full cost schedule, or the initial density.
        y : array_like, optional
            Terminal density when ``X`` is a density (planning problem); a
            free terminal time when omitted.
        """
        epsilon = check_scalar(self.epsilon, "epsilon")
        horizon = check_scalar(self.horizon, "horizon")
        if isinstance(X, CostSchedule):
            grid = check_grid(self.grid, X[0].target.shape)
            schedule = X
        else:
            X = np.asarray(X, dtype=float)
            grid = check_grid(self.grid, X.shape)
            steps = int(self.steps)
            if steps < 1:
                raise ValueError("steps must be positive")
            rho0 = check_probability_field(X, grid, normalize=True)
            last = Free() if y is None else FixedMarginal(check_probability_field(y, grid, normalize=True))
            schedule = CostSchedule([FixedMarginal(rho0)] + [Free()] * (steps - 1) + [last])
        axis = TimeAxis(horizon, schedule.steps)
        check_schedule(schedule, grid, axis)
        config = self._config()
        K = build_heat_kernel(grid, axis.dt, epsilon,
                              mode="linear" if config.stabilization == "linear" else "auto")
        try:
            state, report, frames = solve(schedule, grid, axis, epsilon, config, K=K)
        except MaxIterations as exc:
            if self.raise_on_max_iter:
                raise
            state, report, frames = exc.state, exc.report, exc.frames

        self.grid_, self.kernel_, self.schedule_ = grid, K, schedule
        self.state_, self.report_ = state, report
        self.marginals_ = np.stack(frames)
        self.log_scalings_ = state.log_a.copy()
        self.n_iter_ = report.sweeps
        self.converged_ = report.converged
        return self

    def marginal(self, k):
        """Density at time index ``k`` of the fitted solution."""
        check_is_fitted(self, "marginals_")
        return self.marginals_[k]

    def fit_transform(self, X, y=None):
        """Fit and return the ``N + 1`` marginals."""
        return self.fit(X, y).marginals_
