"""Closed-form performance metrics: SINR, rates, backhaul, revenue, residuals."""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import RevenueReport, SolutionState
from ..models.enums import OPERATORS, OperatorId
from ..models.scenario import ScenarioInstance

logger = logging.getLogger(__name__)

RESIDUAL_KEYS = (
    "mbc_g", "mbc_s", "time", "backhaul", "node_power", "sat_power", "association", "binary",
)


def alpha_coefficient(z: OperatorId, node_operator: OperatorId, user_operator: OperatorId,
                      delta: Sequence[float]) -> float:
    """
    Share of a served rate credited to operator z.

    Args:
        z: Operator whose revenue is computed
        node_operator: Owner of the serving node
        user_operator: Operator the user subscribes to
        delta: Sharing coefficients (delta_G, delta_S)

    Returns:
        1 for own service of own users, delta of the host when serving a
        foreign user, 1 - delta of the host for the subscriber, else 0
    """
    if z is node_operator and z is user_operator:
        return 1.0
    if z is node_operator:
        return float(delta[node_operator.value])
    if z is user_operator:
        return 1.0 - float(delta[node_operator.value])
    return 0.0


def alpha_table(scenario: ScenarioInstance, delta: Optional[Sequence[float]] = None) -> np.ndarray:
    """alpha[z, i, k] for every operator, node and user."""
    delta = scenario.delta if delta is None else delta
    table = np.zeros((len(OPERATORS), scenario.n_nodes, scenario.n_users))
    for z in OPERATORS:
        for node in scenario.nodes:
            for user in scenario.users:
                table[z.value, node.id, user.id] = alpha_coefficient(
                    z, node.operator, user.operator, delta)
    return table


class NetworkMetrics:
    """Evaluates candidate solutions against one channel realization."""

    def __init__(self, scenario: ScenarioInstance, channels: ChannelRealization,
                 delta: Optional[Sequence[float]] = None):
        self.scenario = scenario
        self.channels = channels
        self.delta = tuple(scenario.delta if delta is None else delta)
        self.alpha = alpha_table(scenario, self.delta)
        self.node_operator = scenario.node_operator
        self._owner_mask = np.stack(
            [self.node_operator == z.value for z in OPERATORS]).astype(float)

    # ====================================================================
    # Access links
    # ====================================================================

    def received_powers(self, state: SolutionState) -> np.ndarray:
        """P[n, j, k, k'] = |h_{j,k}^n w_{j,k'}^n|^2."""
        gains = np.einsum('njka,njla->njkl', self.channels.h, state.w)
        return np.abs(gains) ** 2

    def _link_budget(self, state: SolutionState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Signal, intra- and inter-operator interference for every (n, i, k)."""
        powers = self.received_powers(state)
        n_users = self.scenario.n_users
        signal = powers[:, :, np.arange(n_users), np.arange(n_users)]
        per_node = powers.sum(axis=3)                                   # (n, j, k)
        per_operator = np.einsum('mj,njk->nmk', self._owner_mask, per_node)
        own = per_operator[:, self.node_operator, :]                    # (n, i, k)
        intra = np.maximum(own - signal, 0.0)
        inter = np.maximum(per_operator.sum(axis=1)[:, None, :] - own, 0.0)
        return signal, intra, inter

    def interference_terms(self, state: SolutionState, i: int, k: int,
                           n: int) -> Tuple[float, float]:
        """(intra, inter) interference in W seen by pair (i, k) on band n."""
        _, intra, inter = self._link_budget(state)
        return float(intra[n, i, k]), float(inter[n, i, k])

    def interference_plus_noise(self, state: SolutionState) -> np.ndarray:
        """Denominator of every SINR, in W."""
        _, intra, inter = self._link_budget(state)
        return intra + inter + self.channels.sigma_t2

    def sinr_all(self, state: SolutionState) -> np.ndarray:
        """SINR of every (n, i, k)."""
        signal, intra, inter = self._link_budget(state)
        return signal / (intra + inter + self.channels.sigma_t2)

    def sinr(self, state: SolutionState, i: int, k: int, n: int) -> float:
        return float(self.sinr_all(state)[n, i, k])

    def rates(self, state: SolutionState) -> np.ndarray:
        """R_{i,k} in bits/s/Hz summed over both bands."""
        return np.log2(1.0 + self.sinr_all(state)).sum(axis=0)

    def user_rate(self, state: SolutionState, i: int, k: int) -> float:
        return float(self.rates(state)[i, k])

    # ====================================================================
    # Satellite backhaul
    # ====================================================================

    def backhaul_capacity(self, state: SolutionState, beam: int, node: int) -> float:
        """C_{l,i} in bits/s of ST node `node` over beam `beam`."""
        s = self.scenario.terminal_index(node)
        if self.scenario.st_beam[s] != beam:
            return 0.0
        q = self.channels.sat_gains[:, s]
        received = state.p * q
        interference = received.sum() - received[beam]
        sinr = received[beam] / (interference + self.channels.sigma_s2)
        return float(self.scenario.backhaul_bandwidth * state.t[s] * np.log2(1.0 + sinr))

    def backhaul_capacities(self, state: SolutionState) -> np.ndarray:
        """Capacity of every ST over its serving beam, in bits/s."""
        return np.array([
            self.backhaul_capacity(state, self.scenario.st_beam[s], node)
            for s, node in enumerate(self.scenario.terminal_nodes)
        ])

    def backhaul_loads(self, state: SolutionState, rates: Optional[np.ndarray] = None) -> np.ndarray:
        """Access traffic B_C sum_k R_{i,k} carried by every ST, in bits/s."""
        rates = self.rates(state) if rates is None else rates
        return self.scenario.access_bandwidth * rates[self.scenario.terminal_nodes].sum(axis=1)

    # ====================================================================
    # Objectives
    # ====================================================================

    def revenue(self, state: SolutionState, baseline: Sequence[float] = (0.0, 0.0),
                rates: Optional[np.ndarray] = None) -> RevenueReport:
        """U_z = sum x alpha^z R for both operators."""
        rates = self.rates(state) if rates is None else rates
        served = state.x * rates
        revenue = tuple(float(np.sum(self.alpha[z.value] * served)) for z in OPERATORS)
        return RevenueReport(revenue=revenue, baseline=(float(baseline[0]), float(baseline[1])))

    def wsr(self, state: SolutionState, rates: Optional[np.ndarray] = None) -> float:
        """sum x b R."""
        rates = self.rates(state) if rates is None else rates
        return float(np.sum(state.x * self.scenario.weight_matrix * rates))

    def constraint_residuals(self, state: SolutionState,
                             baseline: Sequence[float] = (0.0, 0.0)) -> Dict[str, float]:
        """
        Violation of every constraint of the joint problem.

        Powers are in W, time shares dimensionless, rates and backhaul in
        bits/s/Hz (backhaul normalized by B_C).

        Args:
            state: Candidate solution
            baseline: Mutual benefit thresholds (U_G^0, U_S^0)

        Returns:
            Map from residual name to max(0, violation)
        """
        scenario = self.scenario
        rates = self.rates(state)
        report = self.revenue(state, baseline, rates)
        residuals = {
            "mbc_g": max(0.0, baseline[0] - report.u_g),
            "mbc_s": max(0.0, baseline[1] - report.u_s),
        }

        time_violation = max(0.0, float(np.max(-state.t, initial=0.0)),
                             float(np.max(state.t - 1.0, initial=0.0)))
        for beam in range(scenario.n_beams):
            members = scenario.terminals_in_beam(beam)
            time_violation = max(time_violation, float(state.t[members].sum()) - 1.0)
        residuals["time"] = max(0.0, time_violation)

        overflow = (self.backhaul_loads(state, rates) - self.backhaul_capacities(state))
        residuals["backhaul"] = max(0.0, float(np.max(overflow, initial=0.0))
                                    / scenario.access_bandwidth)

        residuals["node_power"] = max(0.0, float(np.max(state.node_powers() - scenario.max_powers)))
        residuals["sat_power"] = max(0.0, float(state.p.sum()) - scenario.sat_max_power,
                                     float(np.max(-state.p, initial=0.0)))
        residuals["association"] = max(
            0.0,
            float(np.max(state.x.sum(axis=0) - 1.0, initial=0.0)),
            float(np.max(-state.x, initial=0.0)),
            float(np.max(state.x - 1.0, initial=0.0)),
        )
        residuals["binary"] = max(0.0, state.binariness)
        return residuals

    @staticmethod
    def max_violation(residuals: Dict[str, float]) -> float:
        """Largest residual other than binariness."""
        return max(v for key, v in residuals.items() if key != "binary")

    def refresh_aux(self, state: SolutionState) -> SolutionState:
        """Copy of a state whose SCA auxiliaries equal their exact values."""
        signal, intra, inter = self._link_budget(state)
        denominator = intra + inter + self.channels.sigma_t2
        sinr = signal / denominator
        return state.with_updates(gamma=sinr, phi=sinr.copy(), beta=denominator,
                                  rho=denominator.copy())

    def rate_upper_bound(self) -> float:
        """Crude cap sum_k sum_n log2(1 + P_max ||h||_max^2 / sigma^2)."""
        gain = np.max(np.sum(np.abs(self.channels.h) ** 2, axis=3), axis=1)   # (n, k)
        p_max = float(np.max(self.scenario.max_powers))
        return float(np.sum(np.log2(1.0 + p_max * gain / self.channels.sigma_t2)))


# ========================================================================
# Backhaul fitting
# ========================================================================

BISECTION_STEPS = 40
FIT_PASSES = 25


def _overflow(metrics: NetworkMetrics, state: SolutionState) -> np.ndarray:
    return metrics.backhaul_loads(state) - metrics.backhaul_capacities(state)


def fit_backhaul(metrics: NetworkMetrics, state: SolutionState) -> SolutionState:
    """
    Scale overflowing STs' beamformers until every backhaul limit holds.

    Each pass bisects the largest feasible amplitude factor of one ST at a
    time; STs still overflowing after the last pass are switched off.

    Args:
        metrics: Metrics of the scenario and draw
        state: State whose backhaul may overflow

    Returns:
        A copy with no backhaul overflow
    """
    state = state.copy()
    tolerance = metrics.scenario.access_bandwidth * 1e-9
    for _ in range(FIT_PASSES):
        overflow = _overflow(metrics, state)
        if np.all(overflow <= tolerance):
            return state
        for s, node in enumerate(metrics.scenario.terminal_nodes):
            if _overflow(metrics, state)[s] <= tolerance:
                continue
            original = state.w[:, node].copy()
            low, high = 0.0, 1.0
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (low + high)
                state.w[:, node] = original * mid
                if _overflow(metrics, state)[s] <= 0.0:
                    low = mid
                else:
                    high = mid
            state.w[:, node] = original * low
    for s, node in enumerate(metrics.scenario.terminal_nodes):
        if _overflow(metrics, state)[s] > tolerance:
            logger.warning("ST node %d cannot meet its backhaul; switching it off", node)
            state.w[:, node] = 0.0
    return state
