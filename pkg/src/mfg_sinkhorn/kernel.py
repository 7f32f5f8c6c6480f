"""Separable heat kernels on a uniform grid.

The transition density of a Brownian motion with variance ``epsilon`` over a
time ``tau`` is a Gaussian of variance ``epsilon * tau``.  On a tensor grid it
factorizes into one ``m x m`` matrix per axis, so applying it to a field costs
``d`` small matrix products instead of one ``M x M`` product.

Matrices are stored as transition *densities*: column ``j`` sums to one after
multiplication by the cell width ``h``.  Applying the kernel therefore reads
``(K f)_i = h * sum_j p_ij f_j`` per axis and preserves total mass.
"""

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .exceptions import DegenerateKernel, GridMismatch
from .grid import Field, GridSpec

#: Images of the periodic sum are dropped once they fall below this fraction
#: of the running total.
IMAGE_CUTOFF = 1e-18
#: Smallest kernel entry for which the linear route is trusted in ``auto`` mode.
LINEAR_FLOOR = 1e-300
#: Outputs of the shifted linear route below this value are recomputed exactly.
_TINY = 1e-280
_MAX_BLOCK = 1 << 22

MODES = ("auto", "linear", "log")


def _log_column_periodic(points, side, variance):
    h = side / points
    k = np.arange(points)
    # signed offsets so that offset(m - k) == -offset(k) exactly
    signed = np.where(k < points - k, k, k - points)
    z = signed * h
    log_col = -(z**2) / (2.0 * variance)
    log_cut = np.log(IMAGE_CUTOFF)
    n = 1
    while True:
        ring = np.logaddexp(-((z + n * side) ** 2) / (2.0 * variance),
                            -((z - n * side) ** 2) / (2.0 * variance))
        if np.max(ring - log_col) < log_cut:
            break
        log_col = np.logaddexp(log_col, ring)
        n += 1
    return log_col, n - 1


def _log_matrix(grid, variance):
    m, h = grid.points, grid.spacing
    if grid.periodic:
        log_col, images = _log_column_periodic(m, grid.side, variance)
        log_col = log_col - (np.logaddexp.reduce(log_col) + np.log(h))
        idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
        return log_col[idx], images
    x = grid.coordinates()
    logp = -((x[:, None] - x[None, :]) ** 2) / (2.0 * variance)
    logp = logp - (np.logaddexp.reduce(logp, axis=0, keepdims=True) + np.log(h))
    return logp, 0


@dataclass(frozen=True, eq=False)
class SeparableKernel:
    """Heat kernel ``P_{epsilon * tau}`` stored as one matrix per axis.

    Attributes
    ----------
    grid : GridSpec
    tau, epsilon : float
        Time step and viscosity; the Gaussian variance is ``epsilon * tau``.
    log_matrices : tuple of ndarray
        Per-axis ``m x m`` log transition densities (always finite).
    matrices : tuple of ndarray
        ``exp`` of the above; entries may underflow to zero.
    images : int
        Number of periodic image rings kept on each side.
    """

    grid: GridSpec
    tau: float
    epsilon: float
    log_matrices: tuple = field(repr=False)
    matrices: tuple = field(repr=False)
    images: int = 0

    @property
    def variance(self):
        return self.epsilon * self.tau

    @property
    def boundary(self):
        return self.grid.boundary

    @property
    def min_log_entry(self):
        return float(min(lm.min() for lm in self.log_matrices))

    @property
    def use_log(self):
        """True when ``auto`` mode routes applications through the log domain."""
        return self.min_log_entry < np.log(LINEAR_FLOOR)

    @property
    def degenerate(self):
        """True when every off-diagonal entry underflows to zero."""
        m = self.grid.points
        if m == 1:
            return False
        off = ~np.eye(m, dtype=bool)
        return all(not np.any(p[off] > 0) for p in self.matrices)

    def dense_matrix(self):
        """Full ``M x M`` transition density (Kronecker product of the axes)."""
        return reduce(np.kron, self.matrices)


def build_heat_kernel(grid, tau, epsilon, mode="auto"):
    """Build the separable heat kernel for one time step.

    Parameters
    ----------
    grid : GridSpec
    tau : float
        Time step, positive.
    epsilon : float
        Viscosity (variance of the Brownian motion per unit time), positive.
    mode : {"auto", "linear", "log"}
        Intended application route.  ``"linear"`` refuses kernels whose
        off-diagonal entries all underflow.

    Returns
    -------
    SeparableKernel
    """
    if not (tau > 0 and np.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau}")
    if not (epsilon > 0 and np.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    logp, images = _log_matrix(grid, epsilon * tau)
    logp.setflags(write=False)
    p = np.exp(logp)
    p.setflags(write=False)
    K = SeparableKernel(grid, float(tau), float(epsilon),
                        (logp,) * grid.dims, (p,) * grid.dims, images)
    if mode == "linear" and K.degenerate:
        raise DegenerateKernel(
            f"variance {epsilon * tau:g} is too small for linear application "
            f"at spacing {grid.spacing:g}; use the log-domain route")
    return K


def _unwrap(K, f):
    if isinstance(f, Field):
        if f.grid != K.grid:
            raise GridMismatch(f"{f.grid} != {K.grid}")
        return f.values, True
    values = np.asarray(f, dtype=float)
    if values.shape != K.grid.shape:
        raise GridMismatch(f"array of shape {values.shape} on grid of shape {K.grid.shape}")
    return values, False


def _axes(K, transpose, order):
    order = range(K.grid.dims) if order is None else order
    return [(axis, K.matrices[axis].T if transpose else K.matrices[axis],
             K.log_matrices[axis].T if transpose else K.log_matrices[axis]) for axis in order]


def apply_kernel(K, f, transpose=False, order=None):
    """Apply the kernel in linear arithmetic, one axis at a time.

    ``transpose`` applies the adjoint; it only differs from the forward
    operator on truncated grids.  ``order`` permutes the axis sequence.
    """
    values, wrap = _unwrap(K, f)
    if K.degenerate:
        raise DegenerateKernel("kernel underflows in linear arithmetic; use apply_kernel_log")
    h = K.grid.spacing
    out = values
    for axis, p, _ in _axes(K, transpose, order):
        out = np.moveaxis(h * np.tensordot(p, out, axes=([1], [axis])), 0, axis)
    return Field(K.grid, out) if wrap else out


#: Terms this far (in log units) below the running maximum are below double
#: precision rounding of the sum and are skipped.
_LSE_DROP = -60.0


def _lse_rows_numpy(logp, g, h):
    out = np.empty((g.shape[0], logp.shape[0]))
    block = max(1, _MAX_BLOCK // (logp.size or 1))
    for start in range(0, g.shape[0], block):
        a = g[start:start + block, None, :] + logp[None, :, :]
        mx = np.max(a, axis=2)
        safe = np.where(np.isfinite(mx), mx, 0.0)
        with np.errstate(divide="ignore"):
            s = np.log(np.sum(np.exp(a - safe[..., None]), axis=2))
        out[start:start + block] = np.where(np.isfinite(mx), s + safe + np.log(h), -np.inf)
    return out


try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

if numba is not None:

    @numba.njit(cache=True)
    def _lse_rows_compiled(logp, g, logh):
        rows, m_in = g.shape
        m_out = logp.shape[0]
        out = np.empty((rows, m_out))
        for r in range(rows):
            for i in range(m_out):
                mx = -np.inf
                for j in range(m_in):
                    v = logp[i, j] + g[r, j]
                    if v > mx:
                        mx = v
                if mx == -np.inf:
                    out[r, i] = -np.inf
                    continue
                s = 0.0
                for j in range(m_in):
                    v = logp[i, j] + g[r, j] - mx
                    if v > _LSE_DROP:
                        s += np.exp(v)
                out[r, i] = np.log(s) + mx + logh
        return out


def _lse_rows(logp, g, h):
    """Exact ``log(h * sum_j exp(logp[i, j] + g[r, j]))`` for every ``(r, i)``."""
    if numba is None:
        return _lse_rows_numpy(logp, g, h)
    return _lse_rows_compiled(np.ascontiguousarray(logp), np.ascontiguousarray(g), np.log(h))


def _shifted_linear_rows(p, logp, g, h):
    mx = np.max(g, axis=1)
    finite = np.isfinite(mx)
    safe = np.where(finite, mx, 0.0)
    y = h * (np.exp(g - safe[:, None]) @ p.T)
    with np.errstate(divide="ignore"):
        out = np.log(y) + safe[:, None]
    out[~finite] = -np.inf
    bad = finite & np.any(y < _TINY, axis=1)
    if np.any(bad):
        out[bad] = _lse_rows(logp, g[bad], h)
    return out


def apply_kernel_log(K, log_f, transpose=False, order=None, method="auto"):
    """Return ``log(K exp(log_f))`` without underflow.

    Parameters
    ----------
    K : SeparableKernel
    log_f : Field or ndarray
        Log of a nonnegative field; ``-inf`` marks zeros.
    method : {"auto", "log", "linear"}
        ``"log"`` evaluates a max-shifted log-sum-exp for every output cell.
        ``"linear"`` shifts each one-dimensional slice by its maximum and
        multiplies in linear arithmetic, recomputing any slice whose output
        lands near the underflow threshold.  ``"auto"`` picks ``"log"`` when
        the kernel has entries below ``LINEAR_FLOOR``.
    """
    values, wrap = _unwrap(K, log_f)
    if method not in MODES:
        raise ValueError(f"method must be one of {MODES}, got {method!r}")
    exact = method == "log" or (method == "auto" and K.use_log)
    h = K.grid.spacing
    out = values
    for axis, p, logp in _axes(K, transpose, order):
        moved = np.moveaxis(out, axis, -1)
        g = moved.reshape(-1, moved.shape[-1])
        rows = _lse_rows(logp, g, h) if exact else _shifted_linear_rows(p, logp, g, h)
        out = np.moveaxis(rows.reshape(moved.shape[:-1] + (logp.shape[0],)), -1, axis)
    out = np.ascontiguousarray(out)
    return Field(K.grid, out) if wrap else out
