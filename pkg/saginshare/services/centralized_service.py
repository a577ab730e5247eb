"""Centralized pipeline: no-sharing benchmark, feasible start and the penalized BSM loop."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import RevenueReport, SolutionState
from ..components.trace import SolverTrace
from ..core.solver import SolverSettings, solve
from ..factories.scenario_factory import with_overrides
from ..factories.state_factory import spread_state
from ..models.enums import OPERATORS, ConeStatus, OperatorId, StepKind
from ..models.errors import InfeasibleModel, NoFeasiblePoint
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from ..systems.metrics_system import NetworkMetrics, fit_backhaul
from ..systems.projection_system import project_association, project_association_with_slack
from ..systems.subproblem_system import (X_ACTIVE, IteratePoint, Scope, SubproblemBuilder,
                                         SurrogateProblem)

logger = logging.getLogger(__name__)

RESOURCE_STEPS = (StepKind.P_STEP, StepKind.T_STEP)


def penalized_objective(metrics: NetworkMetrics, state: SolutionState, penalty: float) -> float:
    """WSR + penalty * sum(x^2 - x)."""
    return metrics.wsr(state) + penalty * float(np.sum(state.x ** 2 - state.x))


def round_association(x: np.ndarray, allowed: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Largest-value rounding of a fractional association.

    Args:
        x: (nodes, users) association
        allowed: Optional mask of admissible pairs

    Returns:
        Binary matrix with a single 1 at each user's largest allowed entry;
        users whose entries are all below the activity threshold stay unserved
    """
    x = np.asarray(x, dtype=float)
    masked = x if allowed is None else np.where(allowed, x, -np.inf)
    rounded = np.zeros_like(x)
    for k in range(x.shape[1]):
        column = masked[:, k]
        if column.size and np.max(column) > X_ACTIVE:
            rounded[int(np.argmax(column)), k] = 1.0
    return rounded


# ========================================================================
# Step execution
# ========================================================================

class StepRunner:
    """Solves subproblems and evaluates candidates for one scenario and draw."""

    def __init__(self, scenario: ScenarioInstance, channels: ChannelRealization,
                 settings: Optional[AlgorithmSettings] = None,
                 solver_settings: Optional[SolverSettings] = None):
        self.scenario = scenario
        self.channels = channels
        self.settings = settings or AlgorithmSettings()
        self.metrics = NetworkMetrics(scenario, channels)
        self.builder = SubproblemBuilder(scenario, channels)
        self.solver_settings = solver_settings or SolverSettings.from_algorithm(self.settings)

    @property
    def has_terminals(self) -> bool:
        return self.scenario.n_terminals > 0

    def refresh(self, state: SolutionState) -> SolutionState:
        """Clip round-off and recompute exact auxiliaries."""
        return self.metrics.refresh_aux(state.sanitized(self.scenario))

    def point(self, state: SolutionState) -> IteratePoint:
        return IteratePoint.from_state(state)

    def run(self, problem: SurrogateProblem, base: SolutionState) -> Optional[SolutionState]:
        """
        Solve and map back onto a state.

        Returns:
            The refreshed candidate, or None when the solver stopped short

        Raises:
            InfeasibleModel: The subproblem was certified infeasible
        """
        solution = solve(problem.program, self.solver_settings)
        if solution.status is ConeStatus.MAX_ITERATIONS:
            solution = solve(problem.program, self.solver_settings.relaxed())
        if solution.status is ConeStatus.INFEASIBLE:
            raise InfeasibleModel(f"{problem.kind.value} step certified infeasible")
        if not solution.is_optimal:
            logger.warning("%s step stopped with %s", problem.kind.value, solution.status.name)
            return None
        return self.refresh(self.builder.extract(problem, solution, base))

    def violation(self, state: SolutionState, baseline: Sequence[float]) -> float:
        return NetworkMetrics.max_violation(self.metrics.constraint_residuals(state, baseline))

    def is_feasible(self, state: SolutionState, baseline: Sequence[float]) -> bool:
        return self.violation(state, baseline) <= self.settings.feasibility_tol


@dataclass
class Guard:
    """Acceptance test of one phase: penalized objective and constraint violation."""
    runner: StepRunner
    baseline: Sequence[float]
    penalty: float
    trace: SolverTrace
    phase: int

    def objective(self, state: SolutionState) -> float:
        return penalized_objective(self.runner.metrics, state, self.penalty)

    def consider(self, current: SolutionState, candidate: Optional[SolutionState],
                 step: StepKind) -> Tuple[SolutionState, bool]:
        """Keep the candidate if it neither lowers the objective nor adds violation."""
        settings = self.runner.settings
        if candidate is None:
            return current, False
        value = self.objective(candidate)
        reference = self.objective(current)
        violation = self.runner.violation(candidate, self.baseline)
        allowed = max(settings.feasibility_tol, self.runner.violation(current, self.baseline))
        accepted = (value >= reference - settings.monotone_tol * max(1.0, abs(reference))
                    and violation <= allowed)
        self.trace.record(self.phase, step, value, self.runner.metrics.wsr(candidate), violation,
                          self.penalty, accepted)
        if not accepted:
            logger.info("Rejected %s step in phase %d: objective %.6g -> %.6g, violation %.3g",
                        step.value, self.phase, reference, value, violation)
            return current, False
        return candidate, True


def optimize_resources(runner: StepRunner, state: SolutionState, baseline: Optional[Sequence[float]],
                       guard: Guard, kinds: Sequence[StepKind] = RESOURCE_STEPS,
                       scope: Optional[Scope] = None, cap: Optional[int] = None) -> SolutionState:
    """
    Alternate resource steps with x fixed until the objective settles.

    Args:
        runner: Step runner
        state: Starting state (auxiliaries populated)
        baseline: MBC thresholds, None to drop the MBCs
        guard: Acceptance test and trace of the phase
        kinds: Blocks to cycle through
        scope: Optional restriction of the subproblems
        cap: Iteration cap, inner cap by default

    Returns:
        The last accepted state
    """
    settings = runner.settings
    value = guard.objective(state)
    calm = 0
    for _ in range(cap or settings.inner_cap):
        for kind in kinds:
            if kind is StepKind.T_STEP and not runner.has_terminals:
                continue
            build = runner.builder.build_p_step if kind is StepKind.P_STEP else runner.builder.build_t_step
            problem = build(runner.point(state), baseline, scope)
            state, accepted = guard.consider(state, runner.run(problem, state), kind)
            if not accepted:
                return state
        updated = guard.objective(state)
        change = abs(updated - value) / max(1.0, abs(value))
        value = updated
        calm = calm + 1 if change < settings.inner_tol else 0
        if calm >= settings.inner_patience:
            break
    return state


# ========================================================================
# No-sharing benchmark
# ========================================================================

@dataclass
class NoSharingResult:
    """Per-operator optimum without sharing and its embedding in the shared model."""
    baseline: Tuple[float, float]
    states: Dict[OperatorId, SolutionState]
    embedded: SolutionState
    traces: Dict[OperatorId, SolverTrace] = field(default_factory=dict)

    @property
    def wsr(self) -> float:
        return float(self.baseline[0] + self.baseline[1])


def _operator_nosharing(runner: StepRunner, operator: OperatorId) -> Tuple[SolutionState, SolverTrace]:
    """Own nodes, users and band: resource steps then gradient-projection x updates."""
    scenario, settings = runner.scenario, runner.settings
    scope = Scope.nosharing(scenario, operator)
    trace = SolverTrace()
    state = runner.refresh(fit_backhaul(runner.metrics, spread_state(scenario, runner.channels, scope)))
    if not scope.nodes or not scope.users:
        return state, trace

    kinds = RESOURCE_STEPS if operator is OperatorId.SNO else (StepKind.P_STEP,)
    allowed = scope.allowed(scenario)
    guard = Guard(runner, (0.0, 0.0), 0.0, trace, phase=0)
    weights = scenario.weight_matrix
    value = guard.objective(state)
    calm = 0
    for iteration in range(settings.nosharing_cap):
        state = optimize_resources(runner, state, None, guard, kinds, scope, cap=1)
        rates = runner.metrics.rates(state)
        x = project_association(state.x + settings.step_size * weights * rates, allowed)
        state, _ = guard.consider(state, runner.refresh(state.with_updates(x=x)), StepKind.X_STEP)
        updated = guard.objective(state)
        change = abs(updated - value) / max(1.0, abs(value))
        value = updated
        calm = calm + 1 if change < settings.inner_tol else 0
        if calm >= settings.inner_patience:
            logger.debug("%s no-sharing loop settled after %d iterations", operator.name, iteration + 1)
            break

    rounded = runner.refresh(state.with_updates(x=round_association(state.x, allowed)))
    polish = Guard(runner, (0.0, 0.0), 0.0, trace, phase=1)
    state = optimize_resources(runner, rounded, None, polish, kinds, scope)
    return state, trace


def embed_nosharing(runner: StepRunner, states: Dict[OperatorId, SolutionState]) -> SolutionState:
    """Combine the disjoint per-operator states into one shared-model state."""
    gno, sno = states[OperatorId.GNO], states[OperatorId.SNO]
    combined = SolutionState(x=gno.x + sno.x, w=gno.w + sno.w, p=sno.p.copy(), t=sno.t.copy())
    return runner.refresh(combined)


def run_nosharing(scenario: ScenarioInstance, channels: ChannelRealization,
                  settings: Optional[AlgorithmSettings] = None) -> NoSharingResult:
    """
    Revenue each operator earns on its own.

    The two per-operator problems share nothing and run concurrently.

    Args:
        scenario: Network layout
        channels: Channel draw
        settings: Algorithm constants

    Returns:
        NoSharingResult with the MBC thresholds (U_G^0, U_S^0)
    """
    runner = StepRunner(scenario, channels, settings)
    with ThreadPoolExecutor(max_workers=len(OPERATORS), thread_name_prefix="nosharing") as pool:
        futures = {z: pool.submit(_operator_nosharing, runner, z) for z in OPERATORS}
        outcomes = {z: futures[z].result() for z in OPERATORS}
    states = {z: outcome[0] for z, outcome in outcomes.items()}
    embedded = embed_nosharing(runner, states)
    report = runner.metrics.revenue(embedded)
    logger.info("No-sharing revenue U0 = (%.4f, %.4f)", report.u_g, report.u_s)
    return NoSharingResult(baseline=report.revenue, states=states, embedded=embedded,
                           traces={z: outcome[1] for z, outcome in outcomes.items()})


# ========================================================================
# Feasible initial point
# ========================================================================

def find_initial_point(scenario: ScenarioInstance, channels: ChannelRealization,
                       baseline: Sequence[float], delta: Optional[Sequence[float]] = None,
                       slack_penalty: Optional[float] = None,
                       settings: Optional[AlgorithmSettings] = None,
                       fallback: Optional[SolutionState] = None) -> SolutionState:
    """
    Drive the slack-relaxed problem until every slack vanishes.

    Args:
        scenario: Network layout
        channels: Channel draw
        baseline: MBC thresholds (U_G^0, U_S^0)
        delta: Sharing coefficients, the scenario's by default
        slack_penalty: Initial slack weight, the settings' by default
        settings: Algorithm constants
        fallback: Known feasible state returned when the search stalls

    Returns:
        A state satisfying every constraint with zero slack

    Raises:
        NoFeasiblePoint: The search stalled and no feasible fallback exists
    """
    settings = settings or AlgorithmSettings()
    if delta is not None:
        scenario = with_overrides(scenario, delta=tuple(delta))
    runner = StepRunner(scenario, channels, settings)
    metrics = runner.metrics
    xi = settings.slack_penalty if slack_penalty is None else float(slack_penalty)
    weights = scenario.weight_matrix

    state = runner.refresh(spread_state(scenario, channels))
    slack_mbc = np.zeros(len(OPERATORS))
    worst_prev = np.inf
    for iteration in range(settings.init_cap):
        if runner.is_feasible(state, baseline):
            logger.info("Feasible start found after %d iterations", iteration)
            return state.with_updates(slack=np.zeros(len(OPERATORS) + scenario.n_terminals))

        backhaul_slack = 0.0
        for kind in RESOURCE_STEPS:
            if kind is StepKind.T_STEP and not runner.has_terminals:
                continue
            problem = runner.builder.build_initpoint_step(runner.point(state), baseline, xi, kind)
            candidate = runner.run(problem, state)
            if candidate is None:
                continue
            state = candidate
            if state.slack is not None:
                backhaul_slack = float(np.max(state.slack[len(OPERATORS):], initial=0.0))

        rates = metrics.rates(state)
        report = metrics.revenue(state, baseline, rates)
        slack_mbc = np.maximum(np.asarray(baseline, float) - np.asarray(report.revenue), 0.0)
        x, slack_mbc = project_association_with_slack(
            state.x + settings.step_size * weights * rates,
            slack_mbc - settings.step_size * xi,
            rates, metrics.alpha, baseline,
        )
        state = runner.refresh(state.with_updates(x=x))

        worst = max(float(np.max(slack_mbc, initial=0.0)), backhaul_slack)
        logger.debug("Initial-point iteration %d: slack %.3g, xi %.3g", iteration, worst, xi)
        if worst > 0.5 * worst_prev and worst > settings.slack_tol:
            xi = min(xi * settings.slack_penalty_growth, settings.slack_penalty_cap)
        worst_prev = worst

    if runner.is_feasible(state, baseline):
        return state.with_updates(slack=np.zeros(len(OPERATORS) + scenario.n_terminals))
    if fallback is not None and runner.is_feasible(fallback, baseline):
        logger.info("Initial-point search stalled; starting from the no-sharing state")
        return runner.refresh(fallback).with_updates(
            slack=np.zeros(len(OPERATORS) + scenario.n_terminals))
    raise NoFeasiblePoint("no state meets the mutual benefit and backhaul constraints",
                          slack=float(np.max(slack_mbc, initial=0.0)))


# ========================================================================
# Penalized block successive maximization
# ========================================================================

@dataclass
class CentralizedResult:
    """Outcome of the centralized algorithm."""
    state: SolutionState
    trace: SolverTrace
    baseline: Tuple[float, float]
    revenue: RevenueReport
    residuals: Dict[str, float]
    wsr: float
    floored: bool = False
    retried: bool = False

    @property
    def max_residual(self) -> float:
        return NetworkMetrics.max_violation(self.residuals)


def _penalty_phases(runner: StepRunner, start: SolutionState, baseline: Sequence[float],
                    trace: SolverTrace) -> Tuple[SolutionState, int]:
    """Inner p/t/x loops under a growing binariness penalty."""
    settings = runner.settings
    state = start
    penalty = settings.penalty_init
    phase = 0
    for phase in range(settings.outer_cap):
        guard = Guard(runner, baseline, penalty, trace, phase)
        value = guard.objective(state)
        calm = 0
        for _ in range(settings.inner_cap):
            state = optimize_resources(runner, state, baseline, guard, cap=1)
            problem = runner.builder.build_x_step(runner.metrics.rates(state), runner.point(state),
                                                  baseline, penalty)
            state, accepted = guard.consider(state, runner.run(problem, state), StepKind.X_STEP)
            updated = guard.objective(state)
            change = abs(updated - value) / max(1.0, abs(value))
            value = updated
            calm = calm + 1 if change < settings.inner_tol else 0
            if not accepted or calm >= settings.inner_patience:
                break
        logger.info("Penalty phase %d (rho=%.3g): WSR %.6g, binariness %.3g",
                    phase, penalty, runner.metrics.wsr(state), state.binariness)
        if state.binariness <= settings.binary_tol:
            break
        penalty *= settings.penalty_growth
    return state, phase + 1


def repair_state(runner: StepRunner, state: SolutionState, baseline: Sequence[float],
                 trace: SolverTrace, phase: int,
                 kinds: Sequence[StepKind] = RESOURCE_STEPS) -> SolutionState:
    """Slack-penalized resource steps with x frozen until the violation is gone."""
    settings = runner.settings
    xi = settings.slack_penalty
    violation = runner.violation(state, baseline)
    for _ in range(settings.init_cap):
        if violation <= settings.feasibility_tol:
            break
        for kind in kinds:
            if kind is StepKind.T_STEP and not runner.has_terminals:
                continue
            problem = runner.builder.build_initpoint_step(runner.point(state), baseline, xi, kind)
            candidate = runner.run(problem, state)
            if candidate is None:
                continue
            candidate_violation = runner.violation(candidate, baseline)
            accepted = candidate_violation <= violation
            trace.record(phase, kind, -candidate_violation, runner.metrics.wsr(candidate),
                         candidate_violation, 0.0, accepted)
            if accepted:
                state, violation = candidate, candidate_violation
        xi = min(xi * settings.slack_penalty_growth, settings.slack_penalty_cap)
    return state


def finalize(runner: StepRunner, state: SolutionState, baseline: Sequence[float],
             trace: SolverTrace, phase: int) -> SolutionState:
    """Round x, repair the constraints and polish (p, t) with x fixed."""
    rounded = runner.refresh(state.with_updates(x=round_association(state.x)))
    rounded = repair_state(runner, rounded, baseline, trace, phase)
    if not runner.is_feasible(rounded, baseline):
        logger.warning("Rounded association stays infeasible after repair; skipping the polish")
        return rounded
    guard = Guard(runner, baseline, 0.0, trace, phase + 1)
    return optimize_resources(runner, rounded, baseline, guard)


def apply_floor(runner: StepRunner, state: SolutionState, baseline: Sequence[float],
                floor: Optional[SolutionState]) -> Tuple[SolutionState, bool]:
    """Fall back to a feasible reference state when it is better or the result is infeasible."""
    if floor is None or not runner.is_feasible(floor, baseline):
        return state, False
    if not runner.is_feasible(state, baseline) or runner.metrics.wsr(state) < runner.metrics.wsr(floor):
        logger.info("Reporting the no-sharing state: it beats or replaces the optimized one")
        return runner.refresh(floor), True
    return state, False


def run_wsrm_centralized(scenario: ScenarioInstance, channels: ChannelRealization,
                         delta: Optional[Sequence[float]] = None,
                         settings: Optional[AlgorithmSettings] = None,
                         nosharing: Optional[NoSharingResult] = None,
                         mbc: bool = True,
                         initial: Optional[SolutionState] = None) -> CentralizedResult:
    """
    Maximize the weighted sum rate of the shared network.

    Args:
        scenario: Network layout
        channels: Channel draw
        delta: Sharing coefficients, the scenario's by default
        settings: Algorithm constants
        nosharing: Precomputed no-sharing benchmark (computed when omitted)
        mbc: Enforce the mutual benefit constraints; False sets U^0 = 0
        initial: Feasible starting state, searched for when omitted

    Returns:
        CentralizedResult with a binary association

    Raises:
        NoFeasiblePoint: No feasible starting point exists
    """
    settings = settings or AlgorithmSettings()
    if delta is not None:
        scenario = with_overrides(scenario, delta=tuple(delta))
    nosharing = nosharing or run_nosharing(scenario, channels, settings)
    baseline = nosharing.baseline if mbc else (0.0, 0.0)
    runner = StepRunner(scenario, channels, settings)

    start = initial
    if start is None:
        start = find_initial_point(scenario, channels, baseline, settings=settings,
                                   fallback=nosharing.embedded)
    start = runner.refresh(start)

    trace = SolverTrace()
    retried = False
    try:
        state, phases = _penalty_phases(runner, start, baseline, trace)
        state = finalize(runner, state, baseline, trace, phases)
    except InfeasibleModel as exc:
        logger.warning("Subproblem infeasible (%s); retrying from the initial point", exc)
        retried = True
        runner = StepRunner(scenario, channels, settings,
                            SolverSettings.from_algorithm(settings).relaxed())
        trace = SolverTrace()
        state, phases = _penalty_phases(runner, start, baseline, trace)
        state = finalize(runner, state, baseline, trace, phases)

    state, floored = apply_floor(runner, state, baseline, nosharing.embedded)
    return summarize(runner, state, trace, baseline, floored, retried)


def summarize(runner: StepRunner, state: SolutionState, trace: SolverTrace,
              baseline: Sequence[float], floored: bool = False,
              retried: bool = False) -> CentralizedResult:
    metrics = runner.metrics
    rates = metrics.rates(state)
    wsr = metrics.wsr(state, rates)
    if wsr > metrics.rate_upper_bound() * float(np.max(runner.scenario.weight_matrix, initial=1.0)) + 1e-6:
        raise ValueError(f"WSR {wsr} exceeds the interference-free cap")
    return CentralizedResult(
        state=state,
        trace=trace,
        baseline=(float(baseline[0]), float(baseline[1])),
        revenue=metrics.revenue(state, baseline, rates),
        residuals=metrics.constraint_residuals(state, baseline),
        wsr=wsr,
        floored=floored,
        retried=retried,
    )
