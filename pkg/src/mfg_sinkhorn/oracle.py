"""Brute-force reference solvers for tiny instances.

Nothing here goes through the separable kernel or the message-passing
solver: the heat kernel is assembled as a dense ``M x M`` matrix from the
full image lattice, the reference chain is an explicit ``(N + 1)``-way tensor,
and every marginal is an explicit sum.  Used to validate the fast path.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SizeExceeded
from .functionals import (
    CongestionPlusPotential, Congestion, FixedMarginal, Free, Nonlocal, Potential,
)

MAX_CELLS = 16
MAX_STEPS = 3
MAX_PAIR_CELLS = 256


def dense_heat_matrix(grid, variance):
    """``M x M`` transition density between cells (rows: destination).

    Columns are normalized so that ``sum_i D[i, j] * cell_volume == 1``.
    """
    pts = np.stack([x.ravel() for x in grid.mesh()], axis=1)
    diff = pts[:, None, :] - pts[None, :, :]
    if grid.periodic:
        reach = math.ceil(math.sqrt(2.0 * variance * 45.0) / grid.side) + 1
        shifts = range(-reach, reach + 1)
        D = np.zeros(diff.shape[:2])
        for w in itertools.product(shifts, repeat=grid.dims):
            z = diff + grid.side * np.asarray(w, dtype=float)
            D += np.exp(-np.sum(z * z, axis=2) / (2.0 * variance))
    else:
        D = np.exp(-np.sum(diff * diff, axis=2) / (2.0 * variance))
    return D / (D.sum(axis=0, keepdims=True) * grid.cell_volume)


def _weighted_prox(cost, c, dt, terminal):
    w = 1.0 if terminal else dt
    if isinstance(cost, Free):
        return np.ones_like(c)
    if isinstance(cost, FixedMarginal):
        t = cost.target.ravel()
        out = np.zeros_like(c)
        out[t > 0] = t[t > 0] / c[t > 0]
        return out
    if isinstance(cost, Congestion):
        return np.where(c > cost.cap, cost.cap / np.where(c > 0, c, 1.0), 1.0)
    if isinstance(cost, (Potential, CongestionPlusPotential)):
        V = cost.potential.ravel()
        base = np.zeros_like(c)
        finite = np.isfinite(V)
        base[finite] = np.exp(-w * V[finite])
        if isinstance(cost, Potential):
            return base
        with np.errstate(divide="ignore"):
            return np.minimum(base, cost.cap / c)
    raise TypeError(f"the dense oracle does not handle {type(cost).__name__}")


@dataclass
class DensePlan:
    """Explicit coupling tensor over ``N + 1`` slices of ``M`` cells."""

    grid: object
    plan: np.ndarray
    reference: np.ndarray
    scalings: list
    iterations: int = 0

    @property
    def steps(self):
        return self.plan.ndim - 1

    def marginal(self, k):
        others = tuple(i for i in range(self.plan.ndim) if i != k)
        vol = self.grid.cell_volume
        return (self.plan.sum(axis=others) * vol**self.steps).reshape(self.grid.shape)

    def pair_marginal(self, k, l):
        others = tuple(i for i in range(self.plan.ndim) if i not in (k, l))
        vol = self.grid.cell_volume
        return self.plan.sum(axis=others) * vol ** (self.steps - 1)

    def relative_entropy(self):
        """``H(plan | reference)`` by direct summation."""
        vol = self.grid.cell_volume
        pos = self.plan > 0
        return float(np.sum(self.plan[pos] * np.log(self.plan[pos] / self.reference[pos]))
                     * vol ** (self.steps + 1))

    def mass(self):
        return float(self.plan.sum() * self.grid.cell_volume ** (self.steps + 1))


def reference_chain(grid, steps, variance):
    """Dense ``R^N(x_0..x_N) = prod_k D(x_k, x_{k-1})``."""
    D = dense_heat_matrix(grid, variance)
    M = grid.size
    R = np.ones((M,))
    for k in range(1, steps + 1):
        # R[..., x_{k-1}] * D[x_k, x_{k-1}] -> R[..., x_{k-1}, x_k]
        R = R[..., None] * D.T.reshape((1,) * (k - 1) + (M, M))
    return R


def dense_solve(schedule, grid, time_axis, epsilon, tol=1e-13, max_iter=200000):
    """Solve the multi-marginal problem by explicit tensor contractions.

    Raises
    ------
    SizeExceeded
        If the grid has more than 16 cells or there are more than 3 steps.
    """
    N = schedule.steps
    if grid.size > MAX_CELLS or N > MAX_STEPS:
        raise SizeExceeded(f"dense oracle limited to {MAX_CELLS} cells and {MAX_STEPS} steps")
    if any(isinstance(c, Nonlocal) for c in schedule.costs):
        raise TypeError("the dense oracle does not handle nonlocal costs")
    dt = time_axis.dt
    vol = grid.cell_volume
    M = grid.size
    R = reference_chain(grid, N, epsilon * dt)
    a = [np.ones(M) for _ in range(N + 1)]

    def weighted(skip):
        W = R
        for i in range(N + 1):
            if i != skip:
                shape = [1] * (N + 1)
                shape[i] = M
                W = W * a[i].reshape(shape)
        return W

    for it in range(1, max_iter + 1):
        change = 0.0
        for k in range(N + 1):
            others = tuple(i for i in range(N + 1) if i != k)
            c = weighted(k).sum(axis=others) * vol**N
            new = _weighted_prox(schedule[k], c, dt, k == N)
            both = (new > 0) & (a[k] > 0)
            if np.any((new > 0) != (a[k] > 0)):
                change = np.inf
            elif np.any(both):
                change = max(change, float(np.max(np.abs(np.log(new[both] / a[k][both])))))
            a[k] = new
        if change < tol:
            break
    plan = weighted(-1)
    return DensePlan(grid, plan, R, [x.reshape(grid.shape) for x in a], it)


def _entropy(mu, vol):
    pos = mu > 0
    return float(np.sum(mu[pos] * np.log(mu[pos])) * vol)


def bridge(mu, nu, grid, epsilon, dt, tol=1e-14, max_iter=200000):
    """Two-marginal entropic bridge between ``mu`` and ``nu`` over one step.

    Returns the ``M x M`` pair density ``gamma(x, y)`` and the value
    ``S = H(gamma | R_{0, dt})``.
    """
    if grid.size > MAX_PAIR_CELLS:
        raise SizeExceeded(f"pairwise oracle limited to {MAX_PAIR_CELLS} cells")
    vol = grid.cell_volume
    D = dense_heat_matrix(grid, epsilon * dt)
    mu, nu = np.ravel(mu), np.ravel(nu)
    a, b = np.ones_like(mu), np.ones_like(nu)
    for _ in range(max_iter):
        a_old = a
        a = np.where(mu > 0, mu / np.where(mu > 0, D.T @ b * vol, 1.0), 0.0)
        b = np.where(nu > 0, nu / np.where(nu > 0, D @ a * vol, 1.0), 0.0)
        pos = a > 0
        if np.max(np.abs(np.log(a[pos] / a_old[pos]))) < tol:
            break
    gamma = a[:, None] * D.T * b[None, :]
    pos = gamma > 0
    S = float(np.sum(gamma[pos] * np.log(gamma[pos] / D.T[pos])) * vol**2)
    return gamma, S


def pairwise_bridge_objective(marginals, grid, epsilon, dt, tol=1e-14):
    """``sum_i S_dt(mu_i, mu_{i+1}) - sum_{0 < i < N} Ent(mu_i)``."""
    marginals = [np.asarray(m, dtype=float) for m in marginals]
    vol = grid.cell_volume
    total = sum(bridge(marginals[i], marginals[i + 1], grid, epsilon, dt, tol)[1]
                for i in range(len(marginals) - 1))
    return total - sum(_entropy(m, vol) for m in marginals[1:-1])
