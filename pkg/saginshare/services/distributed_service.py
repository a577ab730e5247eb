"""Distributed pipeline: consensus-ADMM resource blocks and dual user association.

Two operator agents own their beamformers (the SNO also owns p and t) and
talk to the orchestrator only through Envelopes. Agents run concurrently
between the orchestrator's barriers.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import SolutionState
from ..components.trace import SolverTrace
from ..factories.scenario_factory import with_overrides
from ..models.enums import OPERATORS, EnvelopeKind, StepKind
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from ..systems.association_system import DualUAResult, run_dual_ua
from ..systems.consensus_system import (AgentBlock, ConsensusState, Coordinator, InProcessTransport,
                                        OperatorAgent, SocketTransport, admm_global_average,
                                        consensus_residual)
from ..systems.subproblem_system import ConsensusLayout, Scope
from .centralized_service import (RESOURCE_STEPS, CentralizedResult, NoSharingResult, StepRunner,
                                  apply_floor, find_initial_point, round_association,
                                  run_nosharing, summarize)

logger = logging.getLogger(__name__)

TRANSPORTS = {
    "inprocess": InProcessTransport,
    "socket": SocketTransport,
}


@dataclass
class AdmmBlockResult:
    """Outcome of one consensus-ADMM block."""
    state: SolutionState
    accepted: bool
    rounds: int
    residuals: List[float] = field(default_factory=list)
    consensus: Optional[ConsensusState] = None
    failures: int = 0

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")


@dataclass
class DistributedResult(CentralizedResult):
    """Centralized result fields plus the messaging record."""
    digest: str = ""
    frames: int = 0
    admm_iterations: int = 0
    agent_failures: int = 0
    associations: List[DualUAResult] = field(default_factory=list)


def initial_consensus(runner: StepRunner, state: SolutionState,
                      layout: ConsensusLayout) -> np.ndarray:
    """Exact SINRs and delivered powers of a state in layout order (unscaled)."""
    point = runner.point(state)
    gamma = np.array([point.gamma[tri] for tri in layout.rate_triples])
    delivered = np.stack([runner.builder.delivered_power(point, z) for z in OPERATORS])
    return layout.pack(gamma, delivered, delivered.copy())


def block_margins(runner: StepRunner, state: SolutionState, baseline: Optional[Sequence[float]],
                  cap: float):
    """
    Feasibility margins kept by the local steps.

    Returns:
        (per-operator MBC margins, per-ST backhaul margins in units of B_C);
        each margin is at most half the slack the expansion point already has
    """
    metrics = runner.metrics
    mbc = np.zeros(len(OPERATORS))
    if baseline is not None:
        slack = np.maximum(np.asarray(metrics.revenue(state, baseline).slack), 0.0)
        mbc = np.minimum(cap, slack / 2.0)
    headroom = (metrics.backhaul_capacities(state) - metrics.backhaul_loads(state)) \
        / runner.scenario.access_bandwidth
    backhaul = np.minimum(cap, np.maximum(headroom, 0.0) / 2.0)
    return mbc, backhaul


def assemble(runner: StepRunner, state: SolutionState,
             agents: Dict[int, OperatorAgent]) -> Optional[SolutionState]:
    """Each operator's beamformers from its own agent, p and t from the SNO agent."""
    scenario = runner.scenario
    candidate = state.copy()
    for z in OPERATORS:
        local = agents[z.value].candidate
        if local is None:
            return None
        nodes = scenario.nodes_of(z)
        candidate.w[:, nodes] = local.w[:, nodes]
        if scenario.n_terminals and any(scenario.nodes[i].is_terminal for i in nodes):
            candidate.p = local.p.copy()
            candidate.t = local.t.copy()
    return runner.refresh(candidate)


def run_admm_block(coordinator: Coordinator, agents: Dict[int, OperatorAgent], runner: StepRunner,
                   state: SolutionState, kind: StepKind, baseline: Optional[Sequence[float]],
                   iterations: int, trace: Optional[SolverTrace] = None,
                   phase: int = 0) -> AdmmBlockResult:
    """
    One p- or t-block: local steps, global averages and dual updates.

    Args:
        coordinator: Orchestrator side of the transport
        agents: Operator agents keyed by operator value
        runner: Step runner of the shared model
        state: Current iterate (auxiliaries populated); x stays fixed
        kind: P_STEP or T_STEP
        baseline: MBC thresholds, None to drop the MBCs
        iterations: ADMM rounds I_ADMM >= 1
        trace: Optional trace receiving the block outcome
        phase: Trace phase

    Returns:
        AdmmBlockResult; a rejected block returns the incoming state untouched
    """
    if iterations < 1:
        raise ValueError("an ADMM block needs at least one round")
    settings = runner.settings
    point = runner.point(state)
    layout = ConsensusLayout(runner.builder.rate_triples(point, Scope.shared(runner.scenario)),
                             runner.scenario.n_users)
    start = initial_consensus(runner, state, layout)
    scales = np.maximum(1.0, np.abs(start))
    consensus = start / scales
    mbc_margin, backhaul_margin = block_margins(runner, state, baseline, settings.admm_margin)

    for z, agent in agents.items():
        agent.begin_block(AgentBlock(
            state=state, kind=kind, baseline=baseline, layout=layout, scales=scales,
            mbc_margin=float(mbc_margin[z]), backhaul_margin=backhaul_margin,
        ))

    residuals: List[float] = []
    last_good: Dict[int, np.ndarray] = {}
    failed: Set[int] = set()
    failures = 0
    rounds = 0
    for rounds in range(1, iterations + 1):
        replies = coordinator.broadcast(EnvelopeKind.GLOBAL_BROADCAST, consensus, sorted(agents),
                                        EnvelopeKind.LOCAL_SHARE)
        locals_by_agent, duals_by_agent = {}, {}
        failed = set()
        for z, reply in replies.items():
            duals_by_agent[z] = reply.payload[layout.size:2 * layout.size]
            if reply.payload[2 * layout.size] > 0.5:
                last_good[z] = reply.payload[:layout.size]
                locals_by_agent[z] = last_good[z]
            else:
                # A failed local step holds its last solved share, or the consensus itself
                failed.add(z)
                locals_by_agent[z] = last_good.get(z, consensus)
        failures += len(failed)
        consensus = admm_global_average(locals_by_agent, duals_by_agent, settings.admm_penalty,
                                        sorted(agents))
        residuals.append(consensus_residual(locals_by_agent, consensus))
        if residuals[-1] <= settings.admm_consensus_tol:
            break
    coordinator.broadcast(EnvelopeKind.BARRIER, consensus, sorted(agents), EnvelopeKind.BARRIER)

    final = ConsensusState.from_vector(layout, consensus * scales)
    candidate = None if failed else assemble(runner, state, agents)
    if failed:
        logger.warning("ADMM %s block rejected: agents %s failed their last local step (%d failures)",
                       kind.value, sorted(failed), failures)
    metrics = runner.metrics
    reference = metrics.wsr(state)
    allowed = max(settings.feasibility_tol, runner.violation(state, baseline or (0.0, 0.0)))
    accepted = False
    if candidate is not None:
        value = metrics.wsr(candidate)
        violation = runner.violation(candidate, baseline or (0.0, 0.0))
        accepted = (value >= reference - settings.monotone_tol * max(1.0, abs(reference))
                    and violation <= allowed)
        if trace is not None:
            trace.record(phase, kind, value, value, violation, 0.0, accepted)
    logger.debug("ADMM %s block: %d rounds, residual %.3g, %s", kind.value, rounds,
                 residuals[-1] if residuals else float("nan"), "accepted" if accepted else "rejected")
    if not accepted:
        return AdmmBlockResult(state, False, rounds, residuals, final, failures)
    return AdmmBlockResult(candidate, True, rounds, residuals, final, failures)


def association_broadcaster(coordinator: Coordinator, agents: Dict[int, OperatorAgent]):
    """Carries (lambda, x) to the operators; each returns its own updated multiplier."""
    def broadcast(iteration: int, lam: np.ndarray, x: np.ndarray, revenue: np.ndarray) -> np.ndarray:
        payload = np.concatenate([np.asarray(lam, float), np.asarray(x, float).ravel()])
        replies = coordinator.broadcast(EnvelopeKind.LAMBDA_BROADCAST, payload, sorted(agents),
                                        EnvelopeKind.LOCAL_SHARE)
        return np.array([float(replies[z.value].payload[0]) for z in OPERATORS])
    return broadcast


class DistributedOptimizer:
    """Runs the outer loop of the distributed algorithm over one transport."""

    def __init__(self, runner: StepRunner, baseline: Optional[Sequence[float]],
                 transport: str = "inprocess"):
        if transport not in TRANSPORTS:
            raise ValueError(f"unknown transport '{transport}'")
        self.runner = runner
        self.settings = runner.settings
        self.baseline = baseline
        self.agents = {z.value: OperatorAgent(z, runner.builder, runner.settings) for z in OPERATORS}
        self.transport = TRANSPORTS[transport](self.agents)
        self.coordinator = Coordinator(self.transport)
        self.iterations = self.settings.admm_iterations
        self.trace = SolverTrace()
        self.associations: List[DualUAResult] = []
        self.lam = np.zeros(len(OPERATORS))
        self.failures = 0

    def close(self) -> None:
        self.transport.close()

    def resource_blocks(self, state: SolutionState, phase: int) -> SolutionState:
        """p-block then t-block, growing I_ADMM after every rejection."""
        for kind in RESOURCE_STEPS:
            if kind is StepKind.T_STEP and not self.runner.has_terminals:
                continue
            result = run_admm_block(self.coordinator, self.agents, self.runner, state, kind,
                                    self.baseline, self.iterations, self.trace, phase)
            self.failures += result.failures
            if result.accepted:
                state = result.state
            else:
                self.iterations = min(self.iterations * self.settings.admm_growth,
                                      self.settings.admm_max_iterations)
                logger.info("ADMM %s block rejected; I_ADMM now %d", kind.value, self.iterations)
        return state

    def associate(self, state: SolutionState, phase: int) -> SolutionState:
        """Dual user association on the latest rates."""
        runner, baseline = self.runner, self.baseline or (0.0, 0.0)
        rates = runner.metrics.rates(state)
        for agent in self.agents.values():
            agent.begin_association(rates, baseline)
        result = run_dual_ua(rates, runner.scenario.weight_matrix, runner.metrics.alpha, baseline,
                             self.settings, lam0=self.lam,
                             broadcaster=association_broadcaster(self.coordinator, self.agents))
        self.associations.append(result)
        self.lam = result.lam
        if result.x is None:
            return state

        candidate = runner.refresh(state.with_updates(x=result.x))
        reference = runner.metrics.wsr(state)
        value = runner.metrics.wsr(candidate)
        violation = runner.violation(candidate, baseline)
        allowed = max(self.settings.feasibility_tol, runner.violation(state, baseline))
        accepted = (value >= reference - self.settings.monotone_tol * max(1.0, abs(reference))
                    and violation <= allowed)
        self.trace.record(phase, StepKind.X_STEP, value, value, violation, 0.0, accepted)
        return candidate if accepted else state

    def optimize(self, start: SolutionState) -> SolutionState:
        runner, settings = self.runner, self.settings
        state = start
        value = runner.metrics.wsr(state)
        calm = 0
        for outer in range(settings.distributed_cap):
            state = self.resource_blocks(state, phase=0)
            state = self.associate(state, phase=0)
            updated = runner.metrics.wsr(state)
            change = abs(updated - value) / max(1.0, abs(value))
            value = updated
            calm = calm + 1 if change < settings.inner_tol else 0
            logger.info("Distributed iteration %d: WSR %.6g, I_ADMM %d", outer, value, self.iterations)
            if calm >= settings.inner_patience:
                break

        if state.binariness > 0.0:
            state = runner.refresh(state.with_updates(x=round_association(state.x)))
        return self.resource_blocks(state, phase=1)


def run_wsrm_distributed(scenario: ScenarioInstance, channels: ChannelRealization,
                         delta: Optional[Sequence[float]] = None,
                         settings: Optional[AlgorithmSettings] = None,
                         nosharing: Optional[NoSharingResult] = None,
                         mbc: bool = True,
                         initial: Optional[SolutionState] = None,
                         transport: str = "inprocess") -> DistributedResult:
    """
    Maximize the weighted sum rate with operator agents exchanging messages.

    Args:
        scenario: Network layout
        channels: Channel draw
        delta: Sharing coefficients, the scenario's by default
        settings: Algorithm constants
        nosharing: Precomputed no-sharing benchmark (each operator solves its own part)
        mbc: Enforce the mutual benefit constraints
        initial: Feasible starting state, searched for once when omitted
        transport: "inprocess" (thread pool) or "socket" (local socket pairs)

    Returns:
        DistributedResult including the SHA-256 digest of every exchanged frame

    Raises:
        NoFeasiblePoint: No feasible starting point exists
    """
    settings = settings or AlgorithmSettings()
    if delta is not None:
        scenario = with_overrides(scenario, delta=tuple(delta))
    nosharing = nosharing or run_nosharing(scenario, channels, settings)
    baseline = nosharing.baseline if mbc else (0.0, 0.0)
    runner = StepRunner(scenario, channels, settings)
    if initial is None:
        initial = find_initial_point(scenario, channels, baseline, settings=settings,
                                     fallback=nosharing.embedded)
    start = runner.refresh(initial)

    optimizer = DistributedOptimizer(runner, baseline, transport)
    try:
        state = optimizer.optimize(start)
    finally:
        optimizer.close()

    state, floored = apply_floor(runner, state, baseline, nosharing.embedded)
    summary = summarize(runner, state, optimizer.trace, baseline, floored)
    return DistributedResult(
        **vars(summary),
        digest=optimizer.coordinator.digest,
        frames=optimizer.coordinator.frames,
        admm_iterations=optimizer.iterations,
        agent_failures=optimizer.failures,
        associations=optimizer.associations,
    )
