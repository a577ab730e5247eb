import numpy as np
import pytest

from saginshare.models.settings import AlgorithmSettings
from saginshare.systems.association_system import (dual_objective, run_dual_ua, ua_decisions,
                                                   ua_dual_update, ua_user_decision)
from saginshare.ui.oracles import scored_association_example


def shares(n_nodes, n_users, gno_nodes):
    """Full retention: each operator keeps the revenue of its own nodes."""
    alpha = np.zeros((2, n_nodes, n_users))
    for i in range(n_nodes):
        alpha[0 if i in gno_nodes else 1, i, :] = 1.0
    return alpha


def test_zero_multipliers_pick_best_rate():
    rates = np.array([[1.0, 4.0], [3.0, 2.0]])
    x = ua_decisions(rates, np.ones_like(rates), shares(2, 2, {0}), (0.0, 0.0))
    np.testing.assert_array_equal(x, [[0.0, 1.0], [1.0, 0.0]])


def test_scored_example():
    values = scored_association_example()
    assert values["score_bs1"] == pytest.approx(1.5)
    assert values["score_bs2"] == pytest.approx(1.8)
    assert values["score_st"] == pytest.approx(1.5)
    assert values["decided_choice"] == values["enumerated_choice"] == 1.0


def test_ties_pick_lowest_index():
    rates = np.array([[2.0], [2.0]])
    assert ua_user_decision(0, rates, np.ones_like(rates), shares(2, 1, {0, 1}), (0.0, 0.0)) == 0


def test_no_nodes():
    assert ua_user_decision(0, np.zeros((0, 1)), np.zeros((0, 1)), np.zeros((2, 0, 1)),
                            (0.0, 0.0)) is None


def test_decisions_ignore_rate_scale():
    rng = np.random.default_rng(0)
    rates = rng.uniform(0.1, 5.0, (4, 6))
    alpha = shares(4, 6, {0, 1})
    weights = np.ones_like(rates)
    for lam in ((0.0, 0.0), (0.4, 1.3)):
        np.testing.assert_array_equal(ua_decisions(rates, weights, alpha, lam),
                                      ua_decisions(7.5 * rates, weights, alpha, lam))


def test_dual_update():
    np.testing.assert_allclose(ua_dual_update((1.0, 0.0), 0.1, (3.0, 5.0), (5.0, 5.0)),
                               [1.2, 0.0])
    np.testing.assert_allclose(ua_dual_update((0.7, 0.3), 0.1, (2.0, 2.0), (2.0, 2.0)),
                               [0.7, 0.3])
    np.testing.assert_allclose(ua_dual_update((0.0, 0.0), 0.5, (9.0, 9.0), (1.0, 1.0)),
                               [0.0, 0.0])
    with pytest.raises(ValueError):
        ua_dual_update((0.0, 0.0), 0.0, (1.0, 1.0), (0.0, 0.0))


def test_dual_objective_bounds_feasible_wsr():
    rates = np.array([[1.0, 2.0], [2.5, 1.0]])
    alpha = shares(2, 2, {0})
    weights = np.ones_like(rates)
    baseline = (1.0, 1.0)
    # x = identity is feasible: revenues (1, 1)
    wsr = 2.0
    for lam in ((0.0, 0.0), (0.5, 0.2), (2.0, 3.0)):
        assert dual_objective(rates, weights, alpha, lam, baseline) >= wsr - 1e-12


def test_single_user_converges():
    rates = np.array([[1.0]])
    result = run_dual_ua(rates, np.ones_like(rates), shares(1, 1, {0}), (0.5, 0.0))
    assert result.converged and result.feasible
    assert result.iterations == 1
    np.testing.assert_array_equal(result.x, [[1.0]])
    assert result.wsr == pytest.approx(1.0)


def test_multipliers_steer_toward_threshold():
    # Node 1 (SNO) has the better rate, but the GNO threshold needs node 0
    rates = np.array([[1.0], [1.5]])
    settings = AlgorithmSettings(ua_step=0.5, ua_cap=200)
    result = run_dual_ua(rates, np.ones_like(rates), shares(2, 1, {0}), (0.8, 0.0), settings)
    assert result.feasible
    np.testing.assert_array_equal(result.x, [[1.0], [0.0]])
    assert all(np.all(lam >= 0.0) for lam in result.lam_history)
    assert result.duality_gap >= -1e-9


def test_broadcaster_supplies_multipliers():
    rates = np.array([[1.0], [2.0]])
    seen = []

    def broadcaster(iteration, lam, x, revenue):
        seen.append(iteration)
        return lam

    result = run_dual_ua(rates, np.ones_like(rates), shares(2, 1, {0}), (0.0, 0.0),
                         broadcaster=broadcaster)
    assert seen == [1]
    assert result.converged
