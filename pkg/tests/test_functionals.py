import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfg_sinkhorn.exceptions import GridMismatch, Infeasible, NonConvexDirect, ValidationError
from mfg_sinkhorn.functionals import (
    Congestion, CongestionPlusPotential, CostSchedule, FixedMarginal, Free, Nonlocal, Potential,
    conjugate_term, interaction_potential, linearize_nonlocal, nonlocal_energy, primal_cost,
    prox_log, prox_update, restricted_dual,
)
from mfg_sinkhorn.grid import OBSTACLE, GridSpec


def scan_beats(cost, c, dt, terminal=False, half_width=12.0, points=4001):
    """Largest amount by which a 1-D scan of the restricted dual beats the prox."""
    with np.errstate(divide="ignore"):
        u_star = prox_log(cost, np.log(np.array([c])), dt, terminal)[0]
    centre = u_star if np.isfinite(u_star) else 0.0
    grid = np.linspace(centre - half_width, centre + half_width, points)
    # a zero scaling is the limit u -> -inf; evaluate it just above underflow
    u_eval = u_star if np.isfinite(u_star) else -745.0
    best = float(restricted_dual(cost, np.array([u_eval]), c, dt, terminal)[0])
    return float(np.max(restricted_dual(cost, grid, c, dt, terminal)) - best)


def test_congestion_examples():
    c = np.full(4, 2.0)
    np.testing.assert_allclose(prox_update(Congestion(1.0), c, 0.1), 0.5)
    np.testing.assert_allclose(prox_update(Congestion(1.0), np.full(4, 0.7), 0.1), 1.0)


def test_fixed_marginal_matched_gives_ones():
    rho = np.array([0.5, 1.5, 1.0, 1.0])
    np.testing.assert_allclose(prox_update(FixedMarginal(rho), rho, 0.1), 1.0)


def test_fixed_marginal_zero_target_and_infeasible():
    rho = np.array([0.0, 2.0])
    np.testing.assert_array_equal(prox_update(FixedMarginal(rho), np.array([1.0, 1.0]), 0.1), [0.0, 2.0])
    with pytest.raises(Infeasible):
        prox_log(FixedMarginal(rho), np.array([0.0, -np.inf]), 0.1)


def test_obstacle_gives_zero_scaling():
    V = np.zeros((8, 8))
    V[2:4, 2:4] = OBSTACLE
    a = prox_update(Potential(V), np.ones((8, 8)), 0.1)
    assert np.all(a[2:4, 2:4] == 0)
    np.testing.assert_allclose(a[V == 0], 1.0)
    b = prox_update(CongestionPlusPotential(1.0, V), np.full((8, 8), 3.0), 0.1)
    assert np.all(b[2:4, 2:4] == 0)
    np.testing.assert_allclose(b[V == 0], 1 / 3)


def test_potential_weight_depends_on_terminal():
    V = np.full(3, 2.0)
    np.testing.assert_allclose(prox_update(Potential(V), np.ones(3), 0.25), np.exp(-0.5))
    np.testing.assert_allclose(prox_update(Potential(V), np.ones(3), 0.25, terminal=True), np.exp(-2.0))


def test_free_and_nonlocal():
    np.testing.assert_array_equal(prox_update(Free(), np.array([0.3, 7.0]), 0.1), 1.0)
    with pytest.raises(NonConvexDirect):
        prox_update(Nonlocal(np.zeros(4)), np.ones(4), 0.1)


costs = st.sampled_from(["free", "fixed", "congestion", "potential", "both"])


@settings(max_examples=200, deadline=None)
@given(kind=costs, log_c=st.floats(-8, 8), cap=st.floats(0.05, 20), V=st.floats(-5, 5),
       dt=st.floats(1e-3, 1.0), terminal=st.booleans(), target=st.floats(1e-3, 10))
def test_prox_beats_scan(kind, log_c, cap, V, dt, terminal, target):
    cost = {"free": Free(), "fixed": FixedMarginal(np.array([target])), "congestion": Congestion(cap),
            "potential": Potential(np.array([V])), "both": CongestionPlusPotential(cap, np.array([V]))}[kind]
    assert scan_beats(cost, np.exp(log_c), dt, terminal) <= 1e-9


def test_conjugate_and_primal_terms():
    assert conjugate_term(Free(), np.zeros(3), 0.1) == 0.0
    assert conjugate_term(Free(), np.array([-1.0, 0.0]), 0.1) == -np.inf
    rho = np.array([0.5, 1.5])
    assert conjugate_term(FixedMarginal(rho), np.array([1.0, 2.0]), 0.1, cell_volume=0.5) == pytest.approx(1.75)
    V = np.array([OBSTACLE, 1.0])
    assert primal_cost(Potential(V), np.array([0.0, 2.0]), 0.5, cell_volume=0.5) == pytest.approx(0.5)
    assert primal_cost(Potential(V), np.array([1e-3, 2.0]), 0.5) == np.inf
    assert primal_cost(Congestion(1.0), np.array([5.0]), 0.5) == 0.0


def test_interaction_potential_double_sum(rng):
    g = GridSpec(dims=2, points=8, side=1.5)
    K = rng.normal(size=g.shape)
    rho = rng.random(g.shape)
    brute = np.zeros(g.shape)
    for i in range(8):
        for j in range(8):
            for p in range(8):
                for q in range(8):
                    brute[i, j] -= K[(i - p) % 8, (j - q) % 8] * rho[p, q] * g.cell_volume
    np.testing.assert_allclose(interaction_potential(K, rho, g), brute, rtol=1e-12, atol=1e-14)
    energy = 0.5 * np.sum(brute * rho) * g.cell_volume
    assert nonlocal_energy(K, rho, g) == pytest.approx(energy, rel=1e-12)


def test_linearize_zero_and_delta_kernel():
    g = GridSpec(dims=2, points=8)
    rho = np.ones(g.shape)
    out = linearize_nonlocal(Nonlocal(np.zeros(g.shape)), rho, g)
    assert isinstance(out, Potential)
    np.testing.assert_allclose(out.potential, 0.0, atol=1e-15)
    delta = np.zeros(g.shape)
    delta[0, 0] = 3.0
    out = linearize_nonlocal(Nonlocal(delta, cap=2.0), rho, g)
    assert isinstance(out, CongestionPlusPotential) and out.cap == 2.0
    np.testing.assert_allclose(out.potential, -3.0 * g.cell_volume, rtol=1e-13)
    with pytest.raises(GridMismatch):
        interaction_potential(delta, np.ones((4, 4)), g)


def test_schedule_validation():
    g = GridSpec(dims=1, points=8)
    rho = np.full(8, 1.0)
    with pytest.raises(ValidationError):
        CostSchedule([Free(), Free()])
    with pytest.raises(ValidationError):
        CostSchedule([FixedMarginal(rho)])
    with pytest.raises(ValidationError):
        CostSchedule([FixedMarginal(2 * rho), Free()]).validate(g)
    with pytest.raises(ValidationError):
        CostSchedule([FixedMarginal(rho), Congestion(0.5)]).validate(g)
    with pytest.raises(GridMismatch):
        CostSchedule([FixedMarginal(rho), Potential(np.zeros(4))]).validate(g)
    with pytest.raises(ValidationError):
        CostSchedule([FixedMarginal(rho), Potential(np.full(8, -np.inf))]).validate(g)
    s = CostSchedule([FixedMarginal(rho), Nonlocal(np.zeros(8)), Free()]).validate(g)
    assert s.steps == 2 and s.has_nonlocal
