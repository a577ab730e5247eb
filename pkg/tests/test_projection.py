import numpy as np
import pytest

from saginshare.systems.projection_system import (project_association,
                                                  project_association_with_slack,
                                                  project_capped_simplex)


def test_feasible_point_is_fixed():
    v = np.array([0.2, 0.3, 0.1])
    np.testing.assert_allclose(project_capped_simplex(v), v)


def test_negative_entries_clip():
    np.testing.assert_allclose(project_capped_simplex(np.array([-0.4, 0.5])), [0.0, 0.5])


def test_active_sum_constraint():
    np.testing.assert_allclose(project_capped_simplex(np.array([0.9, 0.9])), [0.5, 0.5])
    np.testing.assert_allclose(project_capped_simplex(np.array([2.0, 0.0, -1.0])), [1.0, 0.0, 0.0])


def test_projection_is_nearest_point():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.normal(0.3, 1.0, 4)
        y = project_capped_simplex(v)
        assert np.all(y >= 0.0) and y.sum() <= 1.0 + 1e-12
        for _ in range(20):
            other = project_capped_simplex(rng.uniform(0.0, 1.0, 4))
            assert np.linalg.norm(v - y) <= np.linalg.norm(v - other) + 1e-12


def test_association_mask():
    v = np.array([[0.7, 0.8], [0.6, 0.9]])
    allowed = np.array([[True, False], [True, True]])
    x = project_association(v, allowed)
    assert x[0, 1] == 0.0
    np.testing.assert_allclose(x[:, 0], [0.55, 0.45])
    assert x[1, 1] == pytest.approx(0.9)


def test_slack_projection_meets_thresholds():
    rates = np.array([[2.0, 1.0], [1.0, 3.0]])
    alpha = np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]])
    baseline = (1.5, 2.5)
    x, s = project_association_with_slack(np.full((2, 2), 0.1), np.zeros(2), rates, alpha,
                                          baseline)
    assert np.all(x >= 0.0) and np.all(x.sum(axis=0) <= 1.0 + 1e-8)
    assert np.all(s >= 0.0)
    for z in range(2):
        assert np.sum(x * alpha[z] * rates) + s[z] >= baseline[z] - 1e-8


def test_slack_projection_leaves_feasible_point():
    rates = np.ones((1, 1))
    alpha = np.array([[[1.0]], [[0.0]]])
    x, s = project_association_with_slack(np.array([[0.6]]), np.array([0.1, 0.2]), rates,
                                          alpha, (0.5, 0.0))
    assert x[0, 0] == pytest.approx(0.6, abs=1e-6)
    np.testing.assert_allclose(s, [0.1, 0.2], atol=1e-6)


def test_slack_projection_far_negative_target():
    # A long penalty escalation leaves the slack target around -2e4
    rates = np.ones((2, 2))
    alpha = np.full((2, 2, 2), 0.5)
    x, s = project_association_with_slack(np.full((2, 2), 0.3), np.full(2, -2e4), rates,
                                          alpha, (0.1, 0.1))
    np.testing.assert_allclose(x, np.full((2, 2), 0.3), atol=1e-6)
    np.testing.assert_allclose(s, [0.0, 0.0], atol=1e-6)


def test_slack_projection_far_negative_target_unreachable_thresholds():
    rates = np.ones((2, 2))
    alpha = np.full((2, 2, 2), 0.5)
    x, s = project_association_with_slack(np.full((2, 2), 0.3), np.full(2, -2e4), rates,
                                          alpha, (5.0, 5.0))
    np.testing.assert_allclose(x, np.full((2, 2), 0.5), atol=1e-5)
    np.testing.assert_allclose(s, [4.0, 4.0], atol=1e-5)
