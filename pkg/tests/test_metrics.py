"""Tests for SINR, rates, backhaul, revenue and constraint residuals."""

import math
from dataclasses import replace

import numpy as np
import pytest

from saginshare.components.solution import SolutionState
from saginshare.factories.scenario_factory import with_overrides
from saginshare.factories.state_factory import mrt_beamformer
from saginshare.models.enums import OperatorId
from saginshare.systems.metrics_system import NetworkMetrics, alpha_coefficient

GNO, SNO = OperatorId.GNO, OperatorId.SNO
DELTA = (0.6, 0.6)


def random_state(scenario, channels, seed=0):
    rng = np.random.default_rng(seed)
    state = SolutionState.empty(scenario)
    state.x = rng.uniform(0.0, 1.0, state.x.shape)
    state.x /= np.maximum(state.x.sum(axis=0), 1.0)
    shape = state.w.shape
    state.w = 0.3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    state.p = np.full(scenario.n_beams, scenario.sat_max_power / scenario.n_beams)
    state.t = np.full(scenario.n_terminals, 0.5)
    return state


def brute_force_interference(scenario, channels, state, n, i, k):
    intra = inter = 0.0
    for j, node in enumerate(scenario.nodes):
        for other in range(scenario.n_users):
            if (j, other) == (i, k):
                continue
            power = abs(np.dot(channels.h[n, j, k], state.w[n, j, other])) ** 2
            if node.operator is scenario.nodes[i].operator:
                intra += power
            else:
                inter += power
    return intra, inter


def test_alpha_cases():
    assert alpha_coefficient(GNO, GNO, GNO, DELTA) == 1.0
    assert alpha_coefficient(GNO, GNO, SNO, DELTA) == pytest.approx(0.6)
    assert alpha_coefficient(SNO, GNO, SNO, DELTA) == pytest.approx(0.4)
    assert alpha_coefficient(SNO, GNO, GNO, DELTA) == 0.0
    for node in (GNO, SNO):
        for user in (GNO, SNO):
            total = sum(alpha_coefficient(z, node, user, (0.3, 0.8)) for z in (GNO, SNO))
            assert total == pytest.approx(1.0)


def test_zero_beamformers(micro_scenario, micro_channels):
    metrics = NetworkMetrics(micro_scenario, micro_channels)
    state = SolutionState.empty(micro_scenario)
    assert metrics.interference_terms(state, 0, 0, 0) == (0.0, 0.0)
    assert metrics.user_rate(state, 0, 0) == 0.0
    assert metrics.revenue(state).revenue == (0.0, 0.0)


def test_interference_matches_brute_force(desk_scenario, desk_channels):
    metrics = NetworkMetrics(desk_scenario, desk_channels)
    state = random_state(desk_scenario, desk_channels)
    for n in range(2):
        for i in range(desk_scenario.n_nodes):
            for k in range(desk_scenario.n_users):
                expected = brute_force_interference(desk_scenario, desk_channels, state, n, i, k)
                assert metrics.interference_terms(state, i, k, n) == pytest.approx(expected, rel=1e-9)


def test_mrt_single_user_sinr(micro_scenario, make_channels):
    h = np.zeros((2, 2, 2, 2), dtype=complex)
    h[0, 0, 0] = [1.0, 1.0j]
    channels = make_channels(micro_scenario, h, sigma_t2=1e-3)
    state = SolutionState.empty(micro_scenario)
    state.w[0, 0, 0] = mrt_beamformer(h[0, 0, 0], 2.0)
    metrics = NetworkMetrics(micro_scenario, channels)
    assert metrics.sinr(state, 0, 0, 0) == pytest.approx(2.0 * 2.0 / 1e-3)


def test_sinr_scale_invariant_without_noise(desk_scenario, desk_channels):
    channels = replace(desk_channels, sigma_t2=0.0)
    metrics = NetworkMetrics(desk_scenario, channels)
    state = random_state(desk_scenario, channels, seed=3)
    scaled = state.with_updates(w=state.w * 3.7)
    np.testing.assert_allclose(metrics.sinr_all(state), metrics.sinr_all(scaled), rtol=1e-9)


def test_unit_sinr_on_both_bands(micro_scenario, make_channels):
    h = np.zeros((2, 2, 2, 2), dtype=complex)
    h[:, 0, 0] = [1.0, 0.0]
    channels = make_channels(micro_scenario, h, sigma_t2=1.0)
    state = SolutionState.empty(micro_scenario)
    state.w[:, 0, 0] = [1.0, 0.0]
    metrics = NetworkMetrics(micro_scenario, channels)
    assert metrics.user_rate(state, 0, 0) == pytest.approx(2.0)


def test_rates_match_composition(desk_scenario, desk_channels):
    metrics = NetworkMetrics(desk_scenario, desk_channels)
    state = random_state(desk_scenario, desk_channels, seed=1)
    rates = metrics.rates(state)
    i, k = 3, 5
    expected = sum(math.log2(1.0 + metrics.sinr(state, i, k, n)) for n in range(2))
    assert rates[i, k] == pytest.approx(expected)


def test_backhaul_single_beam(micro_scenario, make_channels):
    channels = make_channels(micro_scenario, np.zeros((2, 2, 2, 2)))
    metrics = NetworkMetrics(micro_scenario, channels)
    state = SolutionState.empty(micro_scenario)
    state.p = np.array([3.0])
    state.t = np.array([1.0])
    node = micro_scenario.terminal_nodes[0]
    expected = micro_scenario.backhaul_bandwidth * math.log2(1.0 + 3.0)
    assert metrics.backhaul_capacity(state, 0, node) == pytest.approx(expected)
    state.t = np.array([0.0])
    assert metrics.backhaul_capacity(state, 0, node) == 0.0


def test_revenue_identity(desk_scenario, desk_channels):
    metrics = NetworkMetrics(desk_scenario, desk_channels)
    state = random_state(desk_scenario, desk_channels, seed=2)
    report = metrics.revenue(state)
    assert report.total == pytest.approx(float(np.sum(state.x * metrics.rates(state))))


def test_full_retention_counts_own_users(desk_scenario, desk_channels):
    scenario = with_overrides(desk_scenario, delta=(1.0, 1.0))
    metrics = NetworkMetrics(scenario, desk_channels)
    state = random_state(scenario, desk_channels, seed=4)
    own = np.zeros_like(state.x)
    for z in (GNO, SNO):
        own[np.ix_(scenario.nodes_of(z), scenario.users_of(z))] = 1.0
    state.x = state.x * own
    rates = metrics.rates(state)
    report = metrics.revenue(state, rates=rates)
    gno_rows = scenario.nodes_of(GNO)
    assert report.u_g == pytest.approx(float(np.sum(state.x[gno_rows] * rates[gno_rows])))


def test_wsr_bilinear(micro_scenario, micro_channels):
    metrics = NetworkMetrics(micro_scenario, micro_channels)
    state = SolutionState.empty(micro_scenario)
    rates = np.array([[3.0, 0.0], [0.0, 3.0]])
    state.x = np.eye(2)
    assert metrics.wsr(state, rates) == pytest.approx(6.0)
    state.x = 0.5 * np.eye(2)
    assert metrics.wsr(state, rates) == pytest.approx(3.0)


def test_residuals_feasible_and_sat_power(micro_scenario, micro_channels):
    metrics = NetworkMetrics(micro_scenario, micro_channels)
    state = SolutionState.empty(micro_scenario)
    state.p = np.array([micro_scenario.sat_max_power])
    state.t = np.array([1.0])
    residuals = metrics.constraint_residuals(state)
    assert all(value == 0.0 for value in residuals.values())
    state.p = np.array([micro_scenario.sat_max_power + 1.0])
    residuals = metrics.constraint_residuals(state)
    assert residuals["sat_power"] == pytest.approx(1.0)


def test_residuals_backhaul_only(micro_scenario, micro_channels):
    metrics = NetworkMetrics(micro_scenario, micro_channels)
    st, user = micro_scenario.terminal_nodes[0], micro_scenario.users_of(SNO)[0]
    state = SolutionState.empty(micro_scenario)
    state.x[st, user] = 1.0
    state.w[1, st, user] = mrt_beamformer(micro_channels.h[1, st, user], 1.0)
    state.p = np.array([micro_scenario.sat_max_power])
    state.t = np.array([1e-9])
    residuals = metrics.constraint_residuals(state)
    assert residuals["backhaul"] > 0.0
    assert all(value == 0.0 for key, value in residuals.items() if key != "backhaul")


def test_refresh_aux(desk_scenario, desk_channels):
    metrics = NetworkMetrics(desk_scenario, desk_channels)
    state = metrics.refresh_aux(random_state(desk_scenario, desk_channels))
    np.testing.assert_allclose(state.gamma, metrics.sinr_all(state))
    np.testing.assert_allclose(state.beta, metrics.interference_plus_noise(state))
