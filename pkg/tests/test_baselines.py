import math

import numpy as np
import pytest

from saginshare.factories.state_factory import (closest_association, equal_power_state,
                                                mrt_beamformer)
from saginshare.models.enums import OPERATORS, Algorithm
from saginshare.services.baseline_service import (delivered_rates, fit_backhaul,
                                                  run_baseline_ca_era,
                                                  run_baseline_ca_era_nosharing,
                                                  run_baseline_ca_opw, run_baseline_ca_otw)
from saginshare.systems.metrics_system import NetworkMetrics
from saginshare.utils.geometry import distance


def test_mrt_beamformer():
    h = np.array([3.0 + 0j, 4.0j])
    w = mrt_beamformer(h, 2.0)
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0)
    assert np.dot(h, w) == pytest.approx(5.0 * math.sqrt(2.0))
    assert np.all(mrt_beamformer(np.zeros(2), 1.0) == 0.0)


def test_equal_split(micro_scenario, micro_channels):
    x = np.eye(2)
    state = equal_power_state(micro_scenario, micro_channels, x,
                              bands=[z.band for z in OPERATORS])
    for i in range(2):
        budget = micro_scenario.nodes[i].max_power
        for n in range(2):
            h = micro_channels.h[n, i, i]
            expected = math.sqrt(budget / 2.0) * np.conj(h) / np.linalg.norm(h)
            np.testing.assert_allclose(state.w[n, i, i], expected)
    np.testing.assert_allclose(state.p, [micro_scenario.sat_max_power])
    np.testing.assert_allclose(state.t, [1.0])


def test_closest_association(desk_scenario):
    x = closest_association(desk_scenario)
    assert np.all(x.sum(axis=0) == 1.0)
    for k, user in enumerate(desk_scenario.users):
        chosen = int(np.argmax(x[:, k]))
        gaps = [distance(node.position, user.position) for node in desk_scenario.nodes]
        assert gaps[chosen] == pytest.approx(min(gaps))


def starved_state(scenario, channels):
    """BS serves the GNO user, ST the SNO user, with almost no backhaul time."""
    metrics = NetworkMetrics(scenario, channels)
    state = equal_power_state(scenario, channels, np.eye(2), bands=[z.band for z in OPERATORS])
    state.t[:] = 1e-6
    return metrics, metrics.refresh_aux(state)


def test_fit_backhaul_removes_overflow(micro_scenario, micro_channels):
    metrics, state = starved_state(micro_scenario, micro_channels)
    fitted = fit_backhaul(metrics, state)
    loads = metrics.backhaul_loads(fitted)
    capacities = metrics.backhaul_capacities(fitted)
    assert np.all(loads <= capacities + micro_scenario.access_bandwidth * 1e-8)
    np.testing.assert_array_equal(fitted.w[:, 0], state.w[:, 0])


def test_delivered_rates_scale_overflow(micro_scenario, micro_channels):
    metrics, state = starved_state(micro_scenario, micro_channels)
    rates = metrics.rates(state)
    delivered = delivered_rates(metrics, state)
    np.testing.assert_allclose(delivered[0], rates[0])
    capacity = metrics.backhaul_capacities(state)[0]
    assert metrics.backhaul_loads(state, delivered)[0] == pytest.approx(capacity)


def test_ca_era(micro_scenario, micro_channels):
    result = run_baseline_ca_era(micro_scenario, micro_channels)
    assert result.algorithm is Algorithm.CA_ERA
    assert result.wsr >= 0.0
    assert result.iterations == 0
    nosharing = run_baseline_ca_era_nosharing(micro_scenario, micro_channels)
    assert np.all(nosharing.state.w[OPERATORS[1].band, 0] == 0.0)


def test_optimized_benchmarks_beat_equal_split(micro_scenario, micro_channels, fast_settings):
    era = run_baseline_ca_era(micro_scenario, micro_channels)
    opw = run_baseline_ca_opw(micro_scenario, micro_channels, settings=fast_settings)
    otw = run_baseline_ca_otw(micro_scenario, micro_channels, settings=fast_settings)
    assert opw.wsr >= era.wsr - 1e-6
    assert otw.wsr >= era.wsr - 1e-6
    np.testing.assert_array_equal(opw.state.x, closest_association(micro_scenario))
