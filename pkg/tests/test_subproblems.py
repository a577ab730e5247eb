import numpy as np
import pytest

from saginshare.factories.state_factory import spread_state
from saginshare.models.enums import OperatorId, StepKind
from saginshare.models.errors import DomainError, InfeasibleModel
from saginshare.services.centralized_service import StepRunner
from saginshare.systems.metrics_system import fit_backhaul
from saginshare.systems.subproblem_system import IteratePoint, Scope


@pytest.fixture
def runner(micro_scenario, micro_channels, fast_settings):
    return StepRunner(micro_scenario, micro_channels, fast_settings)


@pytest.fixture
def start(runner, micro_scenario, micro_channels):
    return runner.refresh(fit_backhaul(runner.metrics, spread_state(micro_scenario, micro_channels)))


def test_scopes(micro_scenario):
    gno = Scope.nosharing(micro_scenario, OperatorId.GNO)
    assert gno.nodes == (0,) and gno.users == (0,) and gno.bands == (OperatorId.GNO.band,)
    agent = Scope.agent(micro_scenario, OperatorId.SNO)
    assert agent.nodes == (1,) and agent.users == (0, 1) and len(agent.bands) == 2
    mask = gno.allowed(micro_scenario)
    assert mask.tolist() == [[True, False], [False, False]]


def test_expansion_point_domain(start):
    point = IteratePoint.from_state(start)
    with pytest.raises(DomainError):
        IteratePoint(**{**point.__dict__, "beta": np.zeros_like(point.beta)})
    with pytest.raises(DomainError):
        IteratePoint.from_state(start.with_updates(beta=None))


def test_p_step_keeps_budgets_and_improves(runner, start, micro_scenario):
    problem = runner.builder.build_p_step(runner.point(start))
    assert problem.kind is StepKind.P_STEP
    candidate = runner.run(problem, start)
    assert candidate is not None
    assert np.all(candidate.node_powers() <= micro_scenario.max_powers * (1 + 1e-9))
    assert candidate.p.sum() <= micro_scenario.sat_max_power * (1 + 1e-9)
    before = runner.metrics.wsr(start)
    assert runner.metrics.wsr(candidate) >= before - 1e-6 * max(1.0, before)
    np.testing.assert_array_equal(candidate.x, start.x)


def test_t_step_keeps_beam_powers(runner, start):
    candidate = runner.run(runner.builder.build_t_step(runner.point(start)), start)
    assert candidate is not None
    np.testing.assert_allclose(candidate.p, start.p)
    assert np.all(candidate.t >= 0.0) and candidate.t.sum() <= 1.0 + 1e-9


def test_ground_nosharing_step_has_no_satellite_variables(runner, micro_scenario,
                                                         micro_channels):
    scope = Scope.nosharing(micro_scenario, OperatorId.GNO)
    state = runner.refresh(spread_state(micro_scenario, micro_channels, scope))
    problem = runner.builder.build_nosharing_step(runner.point(state), OperatorId.GNO)
    assert "p" not in problem.variable_index
    assert "t" not in problem.variable_index
    candidate = runner.run(problem, state)
    assert candidate is not None
    # Nothing leaves the operator's own band and nodes
    assert np.all(candidate.w[OperatorId.SNO.band] == 0.0)
    assert np.all(candidate.w[:, 1] == 0.0)


def test_initpoint_step_rejects_negative_penalty(runner, start):
    with pytest.raises(DomainError):
        runner.builder.build_initpoint_step(runner.point(start), (0.0, 0.0), -1.0)


def test_x_step(runner, start):
    rates = runner.metrics.rates(start)
    baseline = (0.0, 0.0)
    problem = runner.builder.build_x_step(rates, runner.point(start), baseline, penalty=1.0)
    assert problem.kind is StepKind.X_STEP
    candidate = runner.run(problem, start)
    assert candidate is not None
    assert np.all(candidate.x >= 0.0) and np.all(candidate.x <= 1.0)
    assert np.all(candidate.x.sum(axis=0) <= 1.0 + 1e-9)
    np.testing.assert_array_equal(candidate.w, start.w)
    with pytest.raises(DomainError):
        runner.builder.build_x_step(rates, runner.point(start), baseline, penalty=0.0)


def test_resource_step_kind_checked(runner, start):
    with pytest.raises(ValueError):
        runner.builder.build_nosharing_step(runner.point(start), OperatorId.SNO, StepKind.X_STEP)


def test_p_step_from_mbc_violating_start_is_infeasible(runner, start):
    # No power allocation reaches 1e4 bits/s/Hz of revenue on two users
    unreachable = (1e4, 1e4)
    assert not runner.is_feasible(start, unreachable)
    problem = runner.builder.build_p_step(runner.point(start), unreachable)
    with pytest.raises(InfeasibleModel):
        runner.run(problem, start)


def test_x_step_enforces_thresholds_as_given(runner, start):
    rates = runner.metrics.rates(start)
    problem = runner.builder.build_x_step(rates, runner.point(start), (1e4, 1e4), penalty=1.0)
    with pytest.raises(InfeasibleModel):
        runner.run(problem, start)


def test_x_step_lifts_revenue_to_thresholds(runner, start):
    rates = runner.metrics.rates(start)
    full = start.with_updates(x=np.eye(*start.x.shape))
    reachable = runner.metrics.revenue(full, rates=rates).revenue
    empty = start.with_updates(x=np.zeros_like(start.x))
    baseline = tuple(0.5 * r for r in reachable)
    problem = runner.builder.build_x_step(rates, runner.point(runner.refresh(empty)), baseline,
                                          penalty=1.0)
    candidate = runner.run(problem, start)
    assert candidate is not None
    revenue = runner.metrics.revenue(candidate, rates=rates).revenue
    for z in range(2):
        assert revenue[z] >= baseline[z] - 1e-6
