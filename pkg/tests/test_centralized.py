from dataclasses import replace

import numpy as np
import pytest

from saginshare.models.enums import OperatorId
from saginshare.models.errors import InfeasibleModel, NoFeasiblePoint
from saginshare.services.centralized_service import (find_initial_point, round_association,
                                                     run_nosharing, run_wsrm_centralized)
from saginshare.systems.metrics_system import NetworkMetrics


@pytest.fixture
def nosharing(micro_scenario, micro_channels, fast_settings):
    return run_nosharing(micro_scenario, micro_channels, fast_settings)


def test_round_association():
    x = np.array([[0.6, 0.0, 0.2], [0.4, 1e-12, 0.7]])
    np.testing.assert_array_equal(round_association(x), [[1, 0, 0], [0, 0, 1]])
    allowed = np.array([[False, True, True], [True, True, True]])
    np.testing.assert_array_equal(round_association(x, allowed)[:, 0], [0, 1])


def test_nosharing_keeps_operators_apart(nosharing, micro_scenario):
    embedded = nosharing.embedded
    # GNO node 0 only serves GNO user 0 on the GNO band
    assert embedded.x[0, 1] == 0.0 and embedded.x[1, 0] == 0.0
    assert np.all(embedded.w[OperatorId.SNO.band, 0] == 0.0)
    assert np.all(embedded.w[OperatorId.GNO.band, 1] == 0.0)
    assert nosharing.wsr == pytest.approx(sum(nosharing.baseline))
    assert all(value >= 0.0 for value in nosharing.baseline)
    assert set(nosharing.traces) == {OperatorId.GNO, OperatorId.SNO}


def test_initial_point_is_feasible(micro_scenario, micro_channels, nosharing, fast_settings):
    state = find_initial_point(micro_scenario, micro_channels, nosharing.baseline,
                               settings=fast_settings, fallback=nosharing.embedded)
    metrics = NetworkMetrics(micro_scenario, micro_channels)
    residuals = metrics.constraint_residuals(metrics.refresh_aux(state), nosharing.baseline)
    assert NetworkMetrics.max_violation(residuals) <= fast_settings.feasibility_tol
    assert np.all(state.slack == 0.0)


def test_unreachable_thresholds(micro_scenario, micro_channels, nosharing, fast_settings):
    baseline = tuple(100.0 * max(u, 1.0) for u in nosharing.baseline)
    with pytest.raises(NoFeasiblePoint):
        find_initial_point(micro_scenario, micro_channels, baseline, settings=fast_settings)


def test_centralized_micro(micro_scenario, micro_channels, nosharing, fast_settings):
    result = run_wsrm_centralized(micro_scenario, micro_channels, settings=fast_settings,
                                  nosharing=nosharing)
    x = result.state.x
    assert np.all((x == 0.0) | (x == 1.0))
    assert np.all(x.sum(axis=0) <= 1.0)
    assert result.trace.is_monotone()
    assert result.max_residual <= fast_settings.feasibility_tol
    assert result.revenue.u_g >= nosharing.baseline[0] - 1e-6
    assert result.floored is False
    assert result.revenue.u_s >= nosharing.baseline[1] - 1e-6
    assert result.wsr >= nosharing.wsr - 1e-6


def test_centralized_without_mbc(micro_scenario, micro_channels, nosharing, fast_settings):
    result = run_wsrm_centralized(micro_scenario, micro_channels, settings=fast_settings,
                                  nosharing=nosharing, mbc=False)
    assert result.baseline == (0.0, 0.0)
    assert result.max_residual <= fast_settings.feasibility_tol


@pytest.mark.slow
def test_centralized_desk(desk_scenario, desk_channels):
    nosharing = run_nosharing(desk_scenario, desk_channels)
    result = run_wsrm_centralized(desk_scenario, desk_channels, nosharing=nosharing)
    assert result.trace.is_monotone()
    assert result.floored is False
    assert result.max_residual <= 1e-6
    assert result.wsr >= nosharing.wsr - 1e-6


def test_start_violating_thresholds_surfaces_infeasible(micro_scenario, micro_channels,
                                                        nosharing, fast_settings):
    unreachable = replace(nosharing, baseline=(1e4, 1e4))
    with pytest.raises(InfeasibleModel):
        run_wsrm_centralized(micro_scenario, micro_channels, settings=fast_settings,
                             nosharing=unreachable, initial=nosharing.embedded)
