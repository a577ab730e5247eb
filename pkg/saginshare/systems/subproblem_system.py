"""Assembly of every convex SCA subproblem as a ConeProgram.

All programs work in normalized units: beamformers are divided by the
square root of the largest node budget, ground powers by the access noise
power, beam powers by P_Sat and satellite gains by the backhaul noise
power. Rates stay in bits/s/Hz and backhaul capacities are divided by B_C.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import SolutionState
from ..core.program import ConeProgram, ConeProgramBuilder, LinearExpr
from ..core.solver import ConeSolution
from ..models.enums import OPERATORS, OperatorId, StepKind
from ..models.errors import DomainError
from ..models.scenario import ScenarioInstance
from .metrics_system import alpha_table
from .surrogates import (BackhaulSurrogate, G1Surrogate, G2Surrogate, G3Surrogate,
                         PenaltySurrogate, received_components)

logger = logging.getLogger(__name__)

Triple = Tuple[int, int, int]

X_ACTIVE = 1e-9         # Association below this carries no rate
W_ACTIVE = 1e-12        # Normalized beam power below this is switched off
SLACK_CAP = 1e3         # Upper bound of feasibility slacks, bits/s/Hz


# ========================================================================
# Value types
# ========================================================================

@dataclass(frozen=True)
class Scope:
    """Nodes, users and bands a subproblem may touch."""
    nodes: Tuple[int, ...]
    users: Tuple[int, ...]
    bands: Tuple[int, ...]
    operator: Optional[OperatorId] = None

    @classmethod
    def shared(cls, scenario: ScenarioInstance) -> 'Scope':
        return cls(tuple(range(scenario.n_nodes)), tuple(range(scenario.n_users)),
                   tuple(z.band for z in OPERATORS))

    @classmethod
    def nosharing(cls, scenario: ScenarioInstance, operator: OperatorId) -> 'Scope':
        """Own nodes serving own subscribers on the own band."""
        return cls(tuple(scenario.nodes_of(operator)), tuple(scenario.users_of(operator)),
                   (operator.band,), operator)

    @classmethod
    def agent(cls, scenario: ScenarioInstance, operator: OperatorId) -> 'Scope':
        """Own nodes serving anyone on any band."""
        return cls(tuple(scenario.nodes_of(operator)), tuple(range(scenario.n_users)),
                   tuple(z.band for z in OPERATORS), operator)

    def allowed(self, scenario: ScenarioInstance) -> np.ndarray:
        """Boolean (nodes, users) mask of associations inside the scope."""
        mask = np.zeros((scenario.n_nodes, scenario.n_users), dtype=bool)
        mask[np.ix_(self.nodes, self.users)] = True
        return mask


@dataclass
class IteratePoint:
    """Expansion point of every linearized quantity (physical units)."""
    w: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        if np.any(self.beta <= 0.0):
            raise DomainError("expansion point needs beta > 0")
        if np.any(self.phi < 0.0):
            raise DomainError("expansion point needs phi >= 0")
        if np.any(self.p < 0.0):
            raise DomainError("expansion point needs p >= 0")

    @classmethod
    def from_state(cls, state: SolutionState) -> 'IteratePoint':
        """Expansion point of a state whose auxiliaries are populated."""
        if state.beta is None or state.phi is None:
            raise DomainError("state auxiliaries are missing; refresh them first")
        return cls(w=state.w, gamma=state.gamma, beta=state.beta, phi=state.phi,
                   rho=state.rho, p=state.p, t=state.t, x=state.x)


@dataclass(frozen=True)
class LinkScaling:
    """Reference levels of the normalized units."""
    power_ref: float            # W, largest node budget
    noise: float                # W, access noise power
    sat_power: float            # W, P_Sat
    sat_noise: float            # W, backhaul noise power

    @property
    def amplitude(self) -> float:
        """Channel gain factor sqrt(P_ref / sigma_t^2)."""
        return math.sqrt(self.power_ref / self.noise)


@dataclass
class SurrogateProblem:
    """An assembled subproblem and the coordinates of its variables."""
    program: ConeProgram
    variable_index: Dict[str, Dict[Tuple[int, ...], int]]
    kind: StepKind
    scope: Optional[Scope] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def coordinate(self, symbol: str, *key: int) -> int:
        """Program coordinate of one scalar, e.g. ("gamma", n, i, k)."""
        return self.variable_index[symbol][tuple(key)]

    def values(self, solution: ConeSolution, symbol: str) -> Dict[Tuple[int, ...], float]:
        return {key: float(solution.primal[j]) for key, j in self.variable_index.get(symbol, {}).items()}


@dataclass
class ConsensusLayout:
    """Order of the shared coordinates: gamma per rate triple, then theta and psi.

    theta[m, n, k] bounds from above and psi[m, n, k] from below the power
    that operator m's beamformers deliver to user k on band n.
    """
    rate_triples: List[Triple]
    n_users: int

    @property
    def theta_shape(self) -> Tuple[int, int, int]:
        return (len(OPERATORS), len(OPERATORS), self.n_users)

    @property
    def size(self) -> int:
        return len(self.rate_triples) + 2 * int(np.prod(self.theta_shape))

    def pack(self, gamma: np.ndarray, theta: np.ndarray, psi: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(gamma, float).ravel(), theta.ravel(), psi.ravel()])

    def unpack(self, vector: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.size,):
            raise ValueError(f"consensus vector has length {vector.size}, expected {self.size}")
        r = len(self.rate_triples)
        block = int(np.prod(self.theta_shape))
        return (vector[:r], vector[r:r + block].reshape(self.theta_shape),
                vector[r + block:].reshape(self.theta_shape))


@dataclass
class AdmmTerms:
    """Augmented-Lagrangian data of one local step (all in scaled units)."""
    layout: ConsensusLayout
    consensus: np.ndarray       # Current global values
    duals: np.ndarray           # Agent multipliers
    scales: np.ndarray          # Positive per-coordinate scale factors
    penalty: float              # c
    mbc_margin: float = 0.0
    backhaul_margin: Optional[np.ndarray] = None


# ========================================================================
# Builder
# ========================================================================

class SubproblemBuilder:
    """Builds the conic subproblems of one scenario and channel draw."""

    def __init__(self, scenario: ScenarioInstance, channels: ChannelRealization,
                 delta: Optional[Sequence[float]] = None):
        self.scenario = scenario
        self.channels = channels
        self.scaling = LinkScaling(
            power_ref=float(np.max(scenario.max_powers)),
            noise=float(channels.sigma_t2),
            sat_power=float(scenario.sat_max_power),
            sat_noise=float(channels.sigma_s2),
        )
        self.h = channels.h * self.scaling.amplitude
        self.q = channels.sat_gains * self.scaling.sat_power / self.scaling.sat_noise
        self.kappa = scenario.backhaul_bandwidth / scenario.access_bandwidth
        self.budgets = scenario.max_powers / self.scaling.power_ref
        self.alpha = alpha_table(scenario, delta)
        self.weights = scenario.weight_matrix
        self.terminals = list(scenario.terminal_nodes)

    # ====================================================================
    # Expansion-point helpers
    # ====================================================================

    def active_triples(self, point: IteratePoint, scope: Scope) -> List[Triple]:
        """Triples carrying association or transmit power, in (n, i, k) order."""
        power = np.sum(np.abs(point.w) ** 2, axis=3) / self.scaling.power_ref
        return [
            (n, i, k)
            for n in scope.bands for i in scope.nodes for k in scope.users
            if point.x[i, k] > X_ACTIVE or power[n, i, k] > W_ACTIVE
        ]

    def rate_triples(self, point: IteratePoint, scope: Scope) -> List[Triple]:
        """Triples whose rate enters the objective or the MBCs."""
        return [(n, i, k) for n in scope.bands for i in scope.nodes for k in scope.users
                if point.x[i, k] > X_ACTIVE]

    def terminal_capacity(self, p: np.ndarray, s: int) -> float:
        """log2(1 + SINR) of ST s over its beam at beam powers p (W)."""
        beam = self.scenario.st_beam[s]
        received = self.q[:, s] * p / self.scaling.sat_power
        return math.log2(1.0 + received[beam] / (received.sum() - received[beam] + 1.0))

    def backhaul_surrogate(self, point: IteratePoint, s: int) -> BackhaulSurrogate:
        return BackhaulSurrogate(
            gains=self.q[:, s],
            beam=self.scenario.st_beam[s],
            p_prev=point.p / self.scaling.sat_power,
            scale=self.kappa,
            time_share=float(point.t[s]),
        )

    def delivered_power(self, point: IteratePoint, operator: OperatorId) -> np.ndarray:
        """T[n, k]: normalized power of all of an operator's beams at user k."""
        w = point.w / math.sqrt(self.scaling.power_ref)
        owned = np.array([node.operator is operator for node in self.scenario.nodes])
        gains = np.einsum('njka,njla->njkl', self.h[:, owned], w[:, owned])
        return np.sum(np.abs(gains) ** 2, axis=(1, 3))

    # ====================================================================
    # Public builders
    # ====================================================================

    def build_p_step(self, point: IteratePoint, baseline: Optional[Sequence[float]] = None,
                     scope: Optional[Scope] = None) -> SurrogateProblem:
        """Beam powers and beamformers with t and x fixed."""
        return self._resource_step(point, scope or Scope.shared(self.scenario), StepKind.P_STEP, baseline)

    def build_t_step(self, point: IteratePoint, baseline: Optional[Sequence[float]] = None,
                     scope: Optional[Scope] = None) -> SurrogateProblem:
        """Time shares and beamformers with p and x fixed."""
        return self._resource_step(point, scope or Scope.shared(self.scenario), StepKind.T_STEP, baseline)

    def build_nosharing_step(self, point: IteratePoint, operator: OperatorId,
                             kind: StepKind = StepKind.P_STEP) -> SurrogateProblem:
        """Per-operator step: own band, own users, no MBC."""
        return self._resource_step(point, Scope.nosharing(self.scenario, operator), kind, None)

    def build_initpoint_step(self, point: IteratePoint, baseline: Sequence[float],
                             slack_penalty: float, kind: StepKind = StepKind.P_STEP) -> SurrogateProblem:
        """Resource step whose MBCs and backhaul limits are relaxed by penalized slacks."""
        if slack_penalty < 0.0:
            raise DomainError("slack penalty must be nonnegative")
        return self._resource_step(point, Scope.shared(self.scenario), kind, baseline,
                                   slack_penalty=slack_penalty)

    def build_x_step(self, rates: np.ndarray, point: IteratePoint, baseline: Sequence[float],
                     penalty: float) -> SurrogateProblem:
        """
        Association LP with the linearized binariness penalty.

        Backhaul loads do not depend on x once rates are fixed, so only the
        association rows, the box and the MBCs constrain the LP.

        Args:
            rates: (nodes, users) rates at the current beamformers
            point: Expansion point holding x_prev
            baseline: Thresholds (U_G^0, U_S^0)
            penalty: Penalty weight rho > 0

        Returns:
            The LP as a SurrogateProblem
        """
        if penalty <= 0.0:
            raise DomainError("binariness penalty must be positive")
        scenario = self.scenario
        builder = ConeProgramBuilder()
        x = builder.add_variables("x", (scenario.n_nodes, scenario.n_users))
        coords = {"x": {(i, k): int(x[i, k]) for i in range(scenario.n_nodes)
                        for k in range(scenario.n_users)}}

        objective = LinearExpr()
        for i in range(scenario.n_nodes):
            for k in range(scenario.n_users):
                builder.add_nonneg(LinearExpr.var(x[i, k]))
                builder.add_le(LinearExpr.var(x[i, k]), 1.0)
                objective.add_term(int(x[i, k]), float(self.weights[i, k] * rates[i, k]))
                objective.accumulate(PenaltySurrogate(float(point.x[i, k])).linear_expr(x[i, k]),
                                     penalty)
        for k in range(scenario.n_users):
            builder.add_le(LinearExpr.dot(x[:, k], np.ones(scenario.n_nodes)), 1.0)
        for z in OPERATORS:
            coefs = (self.alpha[z.value] * rates).ravel()
            builder.add_le(float(baseline[z.value]), LinearExpr.dot(x.ravel(), coefs))
        builder.maximize(objective)
        return SurrogateProblem(builder.build(), coords, StepKind.X_STEP, Scope.shared(scenario),
                                {"penalty": penalty})

    def build_admm_step(self, point: IteratePoint, operator: OperatorId, kind: StepKind,
                        baseline: Optional[Sequence[float]], terms: AdmmTerms) -> SurrogateProblem:
        """Local augmented-Lagrangian step of one operator agent."""
        return self._resource_step(point, Scope.agent(self.scenario, operator), kind, baseline,
                                   admm=terms)

    # ====================================================================
    # Assembly
    # ====================================================================

    def _resource_step(self, point: IteratePoint, scope: Scope, kind: StepKind,
                       baseline: Optional[Sequence[float]], slack_penalty: Optional[float] = None,
                       admm: Optional[AdmmTerms] = None) -> SurrogateProblem:
        if kind not in (StepKind.P_STEP, StepKind.T_STEP):
            raise ValueError(f"resource steps are p or t steps, got {kind}")
        assembly = _Assembly(self, point, scope, kind)
        assembly.add_links(admm)
        assembly.add_power_budgets()
        assembly.add_satellite(slack_penalty, admm)
        if baseline is not None:
            assembly.add_mbc(baseline, slack_penalty, admm)
        assembly.add_objective(slack_penalty, admm)
        program = assembly.builder.build()
        logger.debug("Built %s step over %d triples: %d variables, %d cone rows",
                     kind.value, len(assembly.triples), program.variable_count, program.G.shape[0])
        meta = {"triples": assembly.triples, "slack_penalty": slack_penalty,
                "layout": admm.layout if admm else None}
        return SurrogateProblem(program, assembly.coords, kind, scope, meta)

    # ====================================================================
    # Extraction
    # ====================================================================

    def extract(self, problem: SurrogateProblem, solution: ConeSolution,
                base: SolutionState) -> SolutionState:
        """
        Map a solved subproblem back onto a SolutionState.

        Quantities outside the problem's scope are copied from base; the
        auxiliaries are dropped so the caller refreshes them exactly.
        """
        v = solution.primal
        state = base.with_updates(gamma=None, beta=None, phi=None, rho=None)
        index = problem.variable_index

        if problem.kind is StepKind.X_STEP:
            for (i, k), j in index["x"].items():
                state.x[i, k] = min(1.0, max(0.0, v[j]))
            return state

        scope = problem.scope
        amplitude = math.sqrt(self.scaling.power_ref)
        state.w[np.ix_(scope.bands, scope.nodes, scope.users)] = 0.0
        for (n, i, k, a), j in index["w_re"].items():
            state.w[n, i, k, a] = amplitude * complex(v[j], v[index["w_im"][(n, i, k, a)]])
        if "p" in index:
            state.p = np.array([max(0.0, v[index["p"][(l,)]]) for l in range(self.scenario.n_beams)]
                               ) * self.scaling.sat_power
        if "t" in index:
            for (s,), j in index["t"].items():
                state.t[s] = min(1.0, max(0.0, v[j]))
        slacks = [v[j] for name in ("slack_mbc", "slack_backhaul")
                  for _, j in sorted(index.get(name, {}).items())]
        state.slack = np.maximum(np.array(slacks), 0.0) if slacks else None
        return state

    def extract_consensus(self, problem: SurrogateProblem, solution: ConeSolution) -> np.ndarray:
        """Unscaled local consensus vector of a solved ADMM step."""
        layout: ConsensusLayout = problem.meta["layout"]
        v = solution.primal
        index = problem.variable_index
        gamma = np.array([v[index["gamma"][tri]] for tri in layout.rate_triples])
        theta = np.zeros(layout.theta_shape)
        psi = np.zeros(layout.theta_shape)
        for key, j in index["theta"].items():
            theta[key] = v[j]
        for key, j in index["psi"].items():
            psi[key] = v[j]
        return layout.pack(gamma, theta, psi)


class _Assembly:
    """Working area of one resource-step build."""

    def __init__(self, owner: SubproblemBuilder, point: IteratePoint, scope: Scope, kind: StepKind):
        self.owner = owner
        self.point = point
        self.scope = scope
        self.kind = kind
        self.builder = ConeProgramBuilder()
        self.coords: Dict[str, Dict[Tuple[int, ...], int]] = {}

        scaling = owner.scaling
        self.w_prev = point.w / math.sqrt(scaling.power_ref)
        self.beta_prev = point.beta / scaling.noise

        self.triples = owner.active_triples(point, scope)
        self.rate_set = [tri for tri in self.triples if point.x[tri[1], tri[2]] > X_ACTIVE]
        terminal_set = set(owner.terminals)
        self.load_set = [tri for tri in self.triples if tri[1] in terminal_set]
        self.scope_terminals = [owner.scenario.terminal_index(i) for i in scope.nodes
                                if i in terminal_set]

        nt = owner.scenario.n_antennas
        count = len(self.triples)
        self.w_re = self.builder.add_variables("w_re", (count, nt))
        self.w_im = self.builder.add_variables("w_im", (count, nt))
        self.position = {tri: m for m, tri in enumerate(self.triples)}
        self.coords["w_re"] = {tri + (a,): int(self.w_re[m, a])
                               for tri, m in self.position.items() for a in range(nt)}
        self.coords["w_im"] = {tri + (a,): int(self.w_im[m, a])
                               for tri, m in self.position.items() for a in range(nt)}
        self.by_band: Dict[int, List[Triple]] = {n: [] for n in scope.bands}
        for tri in self.triples:
            self.by_band[tri[0]].append(tri)

        self.u: Dict[Triple, int] = {}
        self.phi: Dict[Triple, int] = {}
        self._components: Dict[Tuple[Triple, int], Tuple[LinearExpr, LinearExpr]] = {}

    # ====================================================================
    # Received-signal pieces
    # ====================================================================

    def components(self, source: Triple, k: int) -> Tuple[LinearExpr, LinearExpr]:
        """(Re, Im) of the signal of beam `source` received by user k."""
        key = (source, k)
        if key not in self._components:
            n, j, _ = source
            m = self.position[source]
            self._components[key] = received_components(self.owner.h[n, j, k], self.w_re[m], self.w_im[m])
        return self._components[key]

    def g2(self, source: Triple, k: int) -> LinearExpr:
        n, j, _ = source
        m = self.position[source]
        return G2Surrogate(self.owner.h[n, j, k], self.w_prev[source]).linear_expr(
            self.w_re[m], self.w_im[m])

    def sources(self, target: Triple) -> List[Triple]:
        """Beams on the target's band other than the target itself."""
        return [src for src in self.by_band[target[0]] if src != target]

    def delivered(self, n: int, k: int) -> Tuple[List[LinearExpr], LinearExpr]:
        """Components and g2 minorant of all scoped beams at user k on band n."""
        parts, lower = [], LinearExpr()
        for src in self.by_band.get(n, []):
            parts.extend(self.components(src, k))
            lower.accumulate(self.g2(src, k))
        return parts, lower

    # ====================================================================
    # Constraint groups
    # ====================================================================

    def add_links(self, admm: Optional[AdmmTerms]) -> None:
        """SINR lower bounds for rated triples and upper bounds for ST loads."""
        b = self.builder
        theta = psi = None
        if admm is not None:
            theta, psi = self._add_interference_tables(admm)
        other = self.scope.operator.other.value if admm is not None else None

        rate = self.rate_set
        gamma = b.add_variables("gamma", len(rate))
        beta = b.add_variables("beta", len(rate))
        u = b.add_variables("u", len(rate))
        self.coords.update({"gamma": {}, "beta": {}, "u": {}})
        for m, tri in enumerate(rate):
            n, i, k = tri
            self.coords["gamma"][tri] = int(gamma[m])
            self.coords["beta"][tri] = int(beta[m])
            self.coords["u"][tri] = int(u[m])
            self.u[tri] = int(u[m])
            parts = [c for src in self.sources(tri) for c in self.components(src, k)]
            floor = LinearExpr.var(beta[m]) - 1.0
            if theta is not None:
                floor = floor - LinearExpr.var(theta[other, n, k])
            b.add_rsoc(parts, floor, 1.0)

            pos = self.position[tri]
            g1 = G1Surrogate(self.owner.h[n, i, k], self.w_prev[tri], float(self.beta_prev[tri]))
            b.add_le(LinearExpr.var(gamma[m]), g1.linear_expr(self.w_re[pos], self.w_im[pos], beta[m]))
            b.add_log2_hypograph(LinearExpr.var(u[m]), LinearExpr.var(gamma[m]) + 1.0)

        load = self.load_set
        phi = b.add_variables("phi", len(load))
        rho = b.add_variables("rho", len(load))
        self.coords.update({"phi": {}, "rho": {}})
        for m, tri in enumerate(load):
            n, i, k = tri
            self.coords["phi"][tri] = int(phi[m])
            self.coords["rho"][tri] = int(rho[m])
            self.phi[tri] = int(phi[m])
            b.add_rsoc(list(self.components(tri, k)), LinearExpr.var(phi[m]), LinearExpr.var(rho[m]))
            ceiling = LinearExpr.constant(1.0)
            for src in self.sources(tri):
                ceiling.accumulate(self.g2(src, k))
            if psi is not None:
                ceiling.add_term(int(psi[other, n, k]), 1.0)
            b.add_le(LinearExpr.var(rho[m]), ceiling)

        if admm is not None:
            self._add_gamma_copies(admm)

    def _add_interference_tables(self, admm: AdmmTerms):
        """Owned rows bound this operator's delivered power; foreign rows are free copies."""
        b = self.builder
        shape = admm.layout.theta_shape
        theta = b.add_variables("theta", shape)
        psi = b.add_variables("psi", shape)
        own = self.scope.operator.value
        self.coords["theta"] = {key: int(theta[key]) for key in np.ndindex(*shape)}
        self.coords["psi"] = {key: int(psi[key]) for key in np.ndindex(*shape)}
        for m in range(shape[0]):
            for n in range(shape[1]):
                for k in range(shape[2]):
                    if m == own:
                        parts, lower = self.delivered(n, k)
                        b.add_rsoc(parts, LinearExpr.var(theta[m, n, k]), 1.0)
                        b.add_le(LinearExpr.var(psi[m, n, k]), lower)
                    else:
                        b.add_nonneg(LinearExpr.var(theta[m, n, k]))
                        b.add_nonneg(LinearExpr.var(psi[m, n, k]))
        return theta, psi

    def _add_gamma_copies(self, admm: AdmmTerms) -> None:
        """Copies of the other operator's SINRs, used in this operator's MBC."""
        b = self.builder
        foreign = [tri for tri in admm.layout.rate_triples if tri not in self.coords["gamma"]]
        gamma = b.add_variables("gamma_copy", len(foreign))
        u = b.add_variables("u_copy", len(foreign))
        for m, tri in enumerate(foreign):
            self.coords["gamma"][tri] = int(gamma[m])
            self.u[tri] = int(u[m])
            b.add_nonneg(LinearExpr.var(gamma[m]))
            b.add_log2_hypograph(LinearExpr.var(u[m]), LinearExpr.var(gamma[m]) + 1.0)

    def add_power_budgets(self) -> None:
        b = self.builder
        for i in self.scope.nodes:
            parts = []
            for tri in self.triples:
                if tri[1] == i:
                    m = self.position[tri]
                    parts.extend(LinearExpr.var(j) for j in self.w_re[m])
                    parts.extend(LinearExpr.var(j) for j in self.w_im[m])
            if parts:
                b.add_soc(math.sqrt(self.owner.budgets[i]), parts)

    def add_satellite(self, slack_penalty: Optional[float], admm: Optional[AdmmTerms]) -> None:
        """Beam power or time variables and the backhaul limit of every scoped ST."""
        if not self.scope_terminals:
            return
        owner, b, point = self.owner, self.builder, self.point
        scenario = owner.scenario

        if self.kind is StepKind.P_STEP:
            p = b.add_variables("p", scenario.n_beams)
            self.coords["p"] = {(l,): int(p[l]) for l in range(scenario.n_beams)}
            for l in range(scenario.n_beams):
                b.add_nonneg(LinearExpr.var(p[l]))
            b.add_le(LinearExpr.dot(p, np.ones(scenario.n_beams)), 1.0)
        else:
            t = b.add_variables("t", len(self.scope_terminals))
            self.coords["t"] = {(s,): int(t[m]) for m, s in enumerate(self.scope_terminals)}
            for m in range(len(self.scope_terminals)):
                b.add_nonneg(LinearExpr.var(t[m]))
            for beam in range(scenario.n_beams):
                members = scenario.terminals_in_beam(beam)
                share = LinearExpr.constant(0.0)
                for s in members:
                    if (s,) in self.coords["t"]:
                        share.add_term(self.coords["t"][(s,)], 1.0)
                    else:
                        share.const += float(point.t[s])
                if members:
                    b.add_le(share, 1.0)

        slack = None
        if slack_penalty is not None:
            slack = b.add_variables("slack_backhaul", len(self.scope_terminals))
            self.coords["slack_backhaul"] = {(s,): int(slack[m])
                                             for m, s in enumerate(self.scope_terminals)}

        for m, s in enumerate(self.scope_terminals):
            node = owner.terminals[s]
            load = LinearExpr()
            load_prev = 0.0
            for tri in self.load_set:
                if tri[1] == node:
                    g3 = G3Surrogate(float(point.phi[tri]))
                    load.accumulate(g3.linear_expr(self.phi[tri]))
                    load_prev += g3.exact(float(point.phi[tri]))
            capacity_prev = owner.kappa * float(point.t[s]) * owner.terminal_capacity(point.p, s)

            if self.kind is StepKind.P_STEP:
                capacity = LinearExpr()
                if point.t[s] > 0.0:
                    surrogate = owner.backhaul_surrogate(point, s)
                    zeta = b.add_variables(f"zeta_{s}", 1)
                    b.add_log2_hypograph(LinearExpr.var(zeta[0]),
                                         surrogate.total_power_expr(self.coords_array("p")))
                    capacity = (LinearExpr.var(zeta[0]) + surrogate.tangent_expr(
                        self.coords_array("p"))) * (owner.kappa * float(point.t[s]))
            else:
                capacity = LinearExpr.var(self.coords["t"][(s,)],
                                          owner.kappa * owner.terminal_capacity(point.p, s))

            if slack is not None:
                needed = max(0.0, load_prev - capacity_prev)
                b.add_nonneg(LinearExpr.var(slack[m]))
                b.add_le(LinearExpr.var(slack[m]), max(SLACK_CAP, 2.0 * needed + 1.0))
                capacity = capacity + LinearExpr.var(slack[m])
            elif admm is not None and admm.backhaul_margin is not None:
                capacity = capacity - float(admm.backhaul_margin[s])
            b.add_le(load, capacity)

    def coords_array(self, symbol: str) -> np.ndarray:
        return np.array([j for _, j in sorted(self.coords[symbol].items())], dtype=int)

    def add_mbc(self, baseline: Sequence[float], slack_penalty: Optional[float],
                admm: Optional[AdmmTerms]) -> None:
        """Mutual benefit constraints on the rate lower bounds."""
        owner, b, point = self.owner, self.builder, self.point
        operators = OPERATORS if admm is None else (self.scope.operator,)
        if slack_penalty is not None:
            slack = b.add_variables("slack_mbc", len(OPERATORS))
            self.coords["slack_mbc"] = {(z.value,): int(slack[z.value]) for z in OPERATORS}
        for z in operators:
            revenue = LinearExpr()
            current = 0.0
            for tri, j in self.u.items():
                _, i, k = tri
                coef = float(point.x[i, k] * owner.alpha[z.value, i, k])
                revenue.add_term(j, coef)
                current += coef * math.log2(1.0 + float(point.gamma[tri]))
            target = float(baseline[z.value])
            if slack_penalty is not None:
                s = LinearExpr.var(self.coords["slack_mbc"][(z.value,)])
                b.add_nonneg(s)
                b.add_le(s, max(SLACK_CAP, 2.0 * max(0.0, target - current) + 1.0))
                b.add_le(target, revenue + s)
            else:
                margin = admm.mbc_margin if admm is not None else 0.0
                b.add_le(target + margin, revenue)

    def add_objective(self, slack_penalty: Optional[float], admm: Optional[AdmmTerms]) -> None:
        owner, b, point = self.owner, self.builder, self.point
        wsr = LinearExpr()
        for tri in self.rate_set:
            _, i, k = tri
            wsr.add_term(self.coords["u"][tri], float(point.x[i, k] * owner.weights[i, k]))
        b.maximize(wsr)

        if slack_penalty:
            for name in ("slack_mbc", "slack_backhaul"):
                for j in self.coords.get(name, {}).values():
                    b.minimize(LinearExpr.var(j, slack_penalty))

        if admm is not None:
            self._add_consensus_penalty(admm)

    def _add_consensus_penalty(self, admm: AdmmTerms) -> None:
        """nu.(l - g) + c/2 ||l - g||^2 over the scaled consensus coordinates."""
        b = self.builder
        layout = admm.layout
        locals_index = [self.coords["gamma"][tri] for tri in layout.rate_triples]
        locals_index += [self.coords["theta"][key] for key in np.ndindex(*layout.theta_shape)]
        locals_index += [self.coords["psi"][key] for key in np.ndindex(*layout.theta_shape)]
        gaps = []
        linear = LinearExpr()
        for position, j in enumerate(locals_index):
            scale = float(admm.scales[position])
            gap = LinearExpr.var(j, 1.0 / scale) - float(admm.consensus[position])
            gaps.append(gap)
            linear.accumulate(gap, float(admm.duals[position]))
        epigraph = b.add_variables("consensus_epigraph", 1)
        b.add_rsoc(gaps, LinearExpr.var(epigraph[0]), 1.0)
        b.minimize(linear)
        b.minimize(LinearExpr.var(epigraph[0], 0.5 * admm.penalty))
