"""Benchmark schemes: closest association with equal or partially optimized resources."""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import RevenueReport, SolutionState
from ..components.trace import SolverTrace
from ..factories.scenario_factory import with_overrides
from ..factories.state_factory import closest_association, equal_power_state
from ..models.enums import OPERATORS, Algorithm, StepKind
from ..models.errors import NoFeasiblePoint
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from ..systems.metrics_system import NetworkMetrics, fit_backhaul
from .centralized_service import Guard, StepRunner, optimize_resources, repair_state


@dataclass
class BaselineResult:
    """A benchmark solution and how it is reported."""
    algorithm: Algorithm
    state: SolutionState
    wsr: float
    revenue: RevenueReport
    residuals: Dict[str, float]
    trace: Optional[SolverTrace] = None

    @property
    def max_residual(self) -> float:
        return NetworkMetrics.max_violation(self.residuals)

    @property
    def iterations(self) -> int:
        return self.trace.iterations if self.trace is not None else 0


def delivered_rates(metrics: NetworkMetrics, state: SolutionState) -> np.ndarray:
    """Rates with every overflowing ST's users scaled down to its backhaul capacity."""
    rates = metrics.rates(state)
    loads = metrics.backhaul_loads(state, rates)
    capacities = metrics.backhaul_capacities(state)
    delivered = rates.copy()
    for s, node in enumerate(metrics.scenario.terminal_nodes):
        if loads[s] > capacities[s] and loads[s] > 0.0:
            delivered[node] *= capacities[s] / loads[s]
    return delivered


def delivered_wsr(metrics: NetworkMetrics, state: SolutionState) -> float:
    """WSR counting only the traffic each ST can forward."""
    return metrics.wsr(state, delivered_rates(metrics, state))


def _report(algorithm: Algorithm, metrics: NetworkMetrics, state: SolutionState,
            baseline: Sequence[float], rates: Optional[np.ndarray] = None,
            trace: Optional[SolverTrace] = None) -> BaselineResult:
    rates = metrics.rates(state) if rates is None else rates
    return BaselineResult(
        algorithm=algorithm,
        state=state,
        wsr=metrics.wsr(state, rates),
        revenue=metrics.revenue(state, baseline, rates),
        residuals=metrics.constraint_residuals(state, baseline),
        trace=trace,
    )


def ca_era_state(scenario: ScenarioInstance, channels: ChannelRealization) -> SolutionState:
    """Closest node, equal power over users and both bands, MRT, equal satellite resources."""
    x = closest_association(scenario)
    return equal_power_state(scenario, channels, x, bands=[z.band for z in OPERATORS])


def run_baseline_ca_era(scenario: ScenarioInstance, channels: ChannelRealization,
                        baseline: Sequence[float] = (0.0, 0.0)) -> BaselineResult:
    """
    Closest association with equal resource allocation.

    Backhaul overflow stays in the residuals; the reported WSR only counts
    the traffic each ST can forward.
    """
    metrics = NetworkMetrics(scenario, channels)
    state = metrics.refresh_aux(ca_era_state(scenario, channels))
    return _report(Algorithm.CA_ERA, metrics, state, baseline, delivered_rates(metrics, state))


def run_baseline_ca_era_nosharing(scenario: ScenarioInstance, channels: ChannelRealization,
                                  baseline: Sequence[float] = (0.0, 0.0)) -> BaselineResult:
    """Equal-resource benchmark where each operator keeps to its own nodes, users and band."""
    metrics = NetworkMetrics(scenario, channels)
    x = np.zeros((scenario.n_nodes, scenario.n_users))
    w = np.zeros_like(SolutionState.empty(scenario).w)
    state = None
    for z in OPERATORS:
        own_x = closest_association(scenario, scenario.nodes_of(z), scenario.users_of(z))
        own = equal_power_state(scenario, channels, own_x, bands=[z.band])
        x, w = x + own.x, w + own.w
        state = own
    state = metrics.refresh_aux(state.with_updates(x=x, w=w))
    return _report(Algorithm.CA_ERA_NOSHARING, metrics, state, baseline,
                   delivered_rates(metrics, state))


def _frozen_association(algorithm: Algorithm, scenario: ScenarioInstance,
                        channels: ChannelRealization, kind: StepKind,
                        delta: Optional[Sequence[float]], settings: Optional[AlgorithmSettings],
                        baseline: Optional[Sequence[float]]) -> BaselineResult:
    if delta is not None:
        scenario = with_overrides(scenario, delta=tuple(delta))
    runner = StepRunner(scenario, channels, settings)
    start = runner.refresh(fit_backhaul(runner.metrics, ca_era_state(scenario, channels)))
    target = (0.0, 0.0) if baseline is None else baseline
    trace = SolverTrace()
    if baseline is not None:
        start = repair_state(runner, start, baseline, trace, phase=0, kinds=(kind,))
        if not runner.is_feasible(start, baseline):
            raise NoFeasiblePoint(f"{algorithm.value}: mutual benefit fails under closest association")
    guard = Guard(runner, target, 0.0, trace, phase=1)
    state = optimize_resources(runner, start, baseline, guard, kinds=(kind,))
    return _report(algorithm, runner.metrics, state, target, trace=trace)


def run_baseline_ca_opw(scenario: ScenarioInstance, channels: ChannelRealization,
                        delta: Optional[Sequence[float]] = None,
                        settings: Optional[AlgorithmSettings] = None,
                        baseline: Optional[Sequence[float]] = None) -> BaselineResult:
    """
    Closest association; beam powers and beamformers optimized, time shares equal.

    Args:
        scenario: Network layout
        channels: Channel draw
        delta: Sharing coefficients, the scenario's by default
        settings: Algorithm constants
        baseline: MBC thresholds to enforce, None to run without them

    Raises:
        NoFeasiblePoint: The thresholds cannot hold under the frozen association
    """
    return _frozen_association(Algorithm.CA_OPW, scenario, channels, StepKind.P_STEP,
                               delta, settings, baseline)


def run_baseline_ca_otw(scenario: ScenarioInstance, channels: ChannelRealization,
                        delta: Optional[Sequence[float]] = None,
                        settings: Optional[AlgorithmSettings] = None,
                        baseline: Optional[Sequence[float]] = None) -> BaselineResult:
    """Closest association; time shares and beamformers optimized, beam powers equal."""
    return _frozen_association(Algorithm.CA_OTW, scenario, channels, StepKind.T_STEP,
                               delta, settings, baseline)
