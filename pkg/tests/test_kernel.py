import time

import numpy as np
import pytest

from mfg_sinkhorn.exceptions import DegenerateKernel, GridMismatch
from mfg_sinkhorn.grid import Field, GridSpec
from mfg_sinkhorn.kernel import apply_kernel, apply_kernel_log, build_heat_kernel
from mfg_sinkhorn.oracle import dense_heat_matrix


def test_columns_normalized_and_symmetric():
    g = GridSpec(dims=1, points=32)
    K = build_heat_kernel(g, 0.05, 1.0)
    p = K.matrices[0]
    np.testing.assert_allclose(p.sum(axis=0) * g.spacing, 1.0, atol=1e-12)
    assert np.array_equal(p, p.T)
    assert np.all(p > 0)


def test_matches_independent_image_sum():
    g = GridSpec(dims=1, points=16)
    K = build_heat_kernel(g, 0.3, 0.5)
    np.testing.assert_allclose(K.matrices[0], dense_heat_matrix(g, 0.15), rtol=1e-12)


def test_large_variance_is_uniform():
    g = GridSpec(dims=1, points=32)
    K = build_heat_kernel(g, 1e3, 1.0)
    assert np.max(np.abs(K.matrices[0] - 1.0 / g.side)) < 1e-10


def test_unit_viscosity_kernel_strictly_positive():
    g = GridSpec(dims=2, points=64)
    K = build_heat_kernel(g, 1 / 31, 1.0)
    assert all(np.all(p > 0) for p in K.matrices)
    assert not K.use_log


def test_small_variance_goes_log_and_linear_refuses():
    g = GridSpec(dims=2, points=64)
    K = build_heat_kernel(g, 1e-7, 1e-3)
    assert K.use_log
    with pytest.raises(DegenerateKernel):
        build_heat_kernel(g, 1e-9, 1e-6, mode="linear")


def test_rejects_bad_arguments():
    g = GridSpec(dims=1, points=8)
    for tau, eps in [(0.0, 1.0), (1.0, -1.0), (np.inf, 1.0)]:
        with pytest.raises(ValueError):
            build_heat_kernel(g, tau, eps)
    with pytest.raises(ValueError):
        build_heat_kernel(g, 1.0, 1.0, mode="fast")


def test_delta_gives_column():
    g = GridSpec(dims=1, points=16)
    K = build_heat_kernel(g, 0.01, 1.0)
    delta = np.zeros(16)
    delta[5] = 1 / g.spacing
    np.testing.assert_allclose(apply_kernel(K, delta), K.matrices[0][:, 5], rtol=1e-13)


def test_uniform_is_invariant():
    g = GridSpec(dims=2, points=32)
    K = build_heat_kernel(g, 0.02, 1.0)
    np.testing.assert_allclose(apply_kernel(K, np.ones(g.shape)), 1.0, atol=1e-12)
    np.testing.assert_allclose(apply_kernel_log(K, np.full(g.shape, -3.0)), -3.0, atol=1e-12)


def test_matches_dense_kronecker(rng):
    g = GridSpec(dims=2, points=8)
    K = build_heat_kernel(g, 0.01, 1.0)
    f = rng.random(g.shape)
    dense = dense_heat_matrix(g, 0.01) @ f.ravel() * g.cell_volume
    np.testing.assert_allclose(apply_kernel(K, f).ravel(), dense, rtol=1e-12)


def test_axis_order_does_not_matter(rng):
    g = GridSpec(dims=3, points=6)
    K = build_heat_kernel(g, 0.01, 1.0)
    f = rng.random(g.shape)
    np.testing.assert_allclose(apply_kernel(K, f, order=(2, 0, 1)), apply_kernel(K, f), rtol=1e-13)
    np.testing.assert_allclose(apply_kernel_log(K, np.log(f), order=(1, 2, 0)),
                               apply_kernel_log(K, np.log(f)), rtol=1e-13)


def test_transpose_on_truncated_grid(rng):
    g = GridSpec(dims=1, points=12, boundary="truncated")
    K = build_heat_kernel(g, 0.02, 1.0)
    f, h = rng.random(12), rng.random(12)
    # <K f, h> == <f, K^T h>
    assert np.dot(apply_kernel(K, f), h) == pytest.approx(np.dot(f, apply_kernel(K, h, transpose=True)), rel=1e-13)
    assert not np.allclose(K.matrices[0], K.matrices[0].T)
    np.testing.assert_allclose(K.matrices[0].sum(axis=0) * g.spacing, 1.0, atol=1e-12)


@pytest.mark.parametrize("method", ["log", "linear"])
def test_log_route_agrees_with_linear(rng, method):
    g = GridSpec(dims=2, points=16)
    K = build_heat_kernel(g, 0.005, 1.0)
    f = rng.random(g.shape) + 0.1
    np.testing.assert_allclose(np.exp(apply_kernel_log(K, np.log(f), method=method)),
                               apply_kernel(K, f), rtol=1e-12)


def test_log_of_delta_is_log_column():
    g = GridSpec(dims=1, points=32)
    K = build_heat_kernel(g, 0.001, 1.0)
    log_delta = np.full(32, -np.inf)
    log_delta[7] = -np.log(g.spacing)
    out = apply_kernel_log(K, log_delta, method="log")
    np.testing.assert_allclose(out, K.log_matrices[0][:, 7], rtol=1e-12)
    linear = apply_kernel(K, np.exp(log_delta))
    representable = linear > 1e-290
    np.testing.assert_allclose(np.exp(out[representable]), linear[representable], rtol=1e-12)


@pytest.mark.parametrize("horizon", [1.0, 40.0])
def test_small_viscosity_has_no_underflow(horizon):
    g = GridSpec(dims=2, points=64, side=2.0)
    K = build_heat_kernel(g, horizon / 41, 1e-3)
    assert K.use_log == (horizon == 1.0)
    log_f = np.full(g.shape, -np.inf)
    log_f[20, 40] = 0.0
    out = apply_kernel_log(K, log_f)
    assert not np.any(np.isnan(out))
    assert np.isfinite(out).any()
    assert np.argmax(out) == np.ravel_multi_index((20, 40), g.shape)
    mass = np.exp(out).sum() * g.cell_volume
    assert mass == pytest.approx(g.cell_volume, rel=1e-12)


def test_grid_mismatch():
    K = build_heat_kernel(GridSpec(dims=1, points=8), 0.1, 1.0)
    with pytest.raises(GridMismatch):
        apply_kernel(K, np.ones(9))
    with pytest.raises(GridMismatch):
        apply_kernel(K, Field.constant(GridSpec(dims=1, points=8, side=2.0), 1.0))


def test_mass_conservation_random_fields(rng):
    start = time.perf_counter()
    worst = 0.0
    for trial in range(100):
        d = int(rng.choice([1, 2]))
        m = int(rng.choice([16, 64]))
        var = 10 ** rng.uniform(-4, 1)
        g = GridSpec(dims=d, points=m)
        K = build_heat_kernel(g, var, 1.0)
        f = rng.random(g.shape)
        out = apply_kernel_log(K, np.log(f)) if K.use_log else apply_kernel(K, f)
        out = np.exp(out) if K.use_log else out
        worst = max(worst, abs(out.sum() / f.sum() - 1))
    assert worst <= 1e-12
    assert time.perf_counter() - start < 5


def test_semigroup_property():
    g = GridSpec(dims=1, points=64)
    K1 = build_heat_kernel(g, 0.001, 1.0)
    K2 = build_heat_kernel(g, 0.002, 1.0)
    two = K1.matrices[0] @ K1.matrices[0] * g.spacing
    assert np.max(np.abs(two - K2.matrices[0])) / K2.matrices[0].max() < 1e-3
