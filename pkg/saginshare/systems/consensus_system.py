"""Consensus ADMM primitives: wire envelopes, operator agents and transports.

The orchestrator is the only barrier authority. Every round it stamps one
clock value on the envelopes it sends; agents answer with the same stamp
and refuse rounds that do not move forward.
"""

import hashlib
import logging
import socket
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..components.solution import SolutionState
from ..core.solver import SolverSettings, solve
from ..models.enums import COORDINATOR_SENDER, OPERATORS, EnvelopeKind, OperatorId, StepKind
from ..models.errors import MissingPayload, ParseError
from ..models.settings import AlgorithmSettings
from .association_system import ua_dual_update
from .subproblem_system import AdmmTerms, ConsensusLayout, IteratePoint, SubproblemBuilder

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<BBII")
FRAME = struct.Struct("<I")


# ========================================================================
# Wire format
# ========================================================================

@dataclass(frozen=True)
class Envelope:
    """One message: header {kind u8, sender u8, iteration u32, count u32} + f8 payload.

    The payload is laid out by the manifest both ends share (a
    ConsensusLayout for consensus rounds, lambda followed by x for
    association rounds).
    """
    kind: EnvelopeKind
    sender: int
    iteration: int
    payload: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def encode(self) -> bytes:
        payload = np.ascontiguousarray(self.payload, dtype='<f8').ravel()
        return HEADER.pack(self.kind.value, self.sender, self.iteration, payload.size) + payload.tobytes()

    @classmethod
    def decode(cls, data: bytes) -> 'Envelope':
        if len(data) < HEADER.size:
            raise ParseError("envelope shorter than its header")
        kind, sender, iteration, count = HEADER.unpack_from(data)
        body = data[HEADER.size:]
        if len(body) != 8 * count:
            raise ParseError(f"envelope announces {count} values but carries {len(body) // 8}")
        try:
            kind = EnvelopeKind(kind)
        except ValueError:
            raise ParseError(f"unknown envelope kind {kind}")
        return cls(kind, sender, iteration, np.frombuffer(body, dtype='<f8').astype(float))


@dataclass
class ConsensusState:
    """Global SINR and delivered-power estimates (scaled units)."""
    gamma: np.ndarray
    theta: np.ndarray
    psi: np.ndarray

    @classmethod
    def from_vector(cls, layout: ConsensusLayout, vector: np.ndarray) -> 'ConsensusState':
        return cls(*layout.unpack(vector))

    def to_vector(self, layout: ConsensusLayout) -> np.ndarray:
        vector = layout.pack(self.gamma, self.theta, self.psi)
        if not np.all(np.isfinite(vector)):
            raise ValueError("consensus estimates must be finite")
        return vector


def admm_global_average(locals_by_agent: Dict[int, np.ndarray], duals_by_agent: Dict[int, np.ndarray],
                        penalty: float, agents: Sequence[int] = tuple(z.value for z in OPERATORS)
                        ) -> np.ndarray:
    """
    Global update g = (1/|O|) sum_z (l_z + nu_z / c).

    Args:
        locals_by_agent: Local consensus vectors keyed by operator value
        duals_by_agent: Multipliers keyed by operator value
        penalty: ADMM penalty c > 0
        agents: Operators expected to report

    Returns:
        The averaged vector, reduced in operator order
    """
    missing = [z for z in agents if z not in locals_by_agent or z not in duals_by_agent]
    if missing:
        raise MissingPayload(f"no consensus payload from operator(s) {missing}")
    total = np.zeros_like(np.asarray(locals_by_agent[agents[0]], dtype=float))
    for z in sorted(agents):
        total = total + np.asarray(locals_by_agent[z], float) + np.asarray(duals_by_agent[z], float) / penalty
    return total / len(agents)


def admm_dual_update(duals: np.ndarray, local: np.ndarray, consensus: np.ndarray,
                     penalty: float) -> np.ndarray:
    """nu <- nu + c (local - global)."""
    if penalty <= 0.0:
        raise ValueError("ADMM penalty must be positive")
    return np.asarray(duals, float) + penalty * (np.asarray(local, float) - np.asarray(consensus, float))


def consensus_residual(locals_by_agent: Dict[int, np.ndarray], consensus: np.ndarray) -> float:
    """max_z ||l_z - g||_inf."""
    return max(float(np.max(np.abs(v - consensus), initial=0.0)) for v in locals_by_agent.values())


# ========================================================================
# Agents
# ========================================================================

@dataclass
class AgentBlock:
    """What an agent needs to run one ADMM block."""
    state: SolutionState
    kind: StepKind
    baseline: Optional[Sequence[float]]
    layout: ConsensusLayout
    scales: np.ndarray
    mbc_margin: float
    backhaul_margin: Optional[np.ndarray]


class OperatorAgent:
    """Local optimizer of one operator: its beamformers and, for the SNO, p and t."""

    def __init__(self, operator: OperatorId, builder: SubproblemBuilder,
                 settings: Optional[AlgorithmSettings] = None):
        self.operator = operator
        self.builder = builder
        self.settings = settings or AlgorithmSettings()
        self.solver_settings = SolverSettings.from_algorithm(self.settings)
        self.block: Optional[AgentBlock] = None
        self.point: Optional[IteratePoint] = None
        self.duals: Optional[np.ndarray] = None
        self.local: Optional[np.ndarray] = None
        self.candidate: Optional[SolutionState] = None
        self.failures = 0
        self.last_iteration = -1
        self._dual_keys: Optional[List] = None
        self._rates: Optional[np.ndarray] = None
        self._baseline: Optional[np.ndarray] = None

    @property
    def value(self) -> int:
        return self.operator.value

    # ====================================================================
    # Block set-up (orchestrator to agent, outside the consensus rounds)
    # ====================================================================

    def begin_block(self, block: AgentBlock) -> None:
        """Adopt a new expansion point, carrying multipliers over by coordinate."""
        keys = _coordinate_keys(block.layout)
        duals = np.zeros(block.layout.size)
        if self.duals is not None and self._dual_keys is not None:
            previous = {key: (nu, scale) for key, nu, scale in
                        zip(self._dual_keys, self.duals, self.block.scales)}
            for position, key in enumerate(keys):
                if key in previous:
                    nu, scale = previous[key]
                    duals[position] = nu * block.scales[position] / scale
        self.block = block
        self.point = IteratePoint.from_state(block.state)
        self.duals = duals
        self._dual_keys = keys
        self.local = None
        self.candidate = None
        self.failures = 0

    def begin_association(self, rates: np.ndarray, baseline: Sequence[float]) -> None:
        """Rates every operator computes locally and shares read-only with users."""
        self._rates = np.asarray(rates, dtype=float)
        self._baseline = np.asarray(baseline, dtype=float)

    # ====================================================================
    # Message handling
    # ====================================================================

    def handle_bytes(self, data: bytes) -> bytes:
        return self.handle(Envelope.decode(data)).encode()

    def handle(self, envelope: Envelope) -> Envelope:
        """Serve one orchestrator round."""
        if envelope.iteration <= self.last_iteration:
            raise ValueError(f"agent {self.operator.name} got stale round {envelope.iteration}")
        self.last_iteration = envelope.iteration

        if envelope.kind is EnvelopeKind.GLOBAL_BROADCAST:
            payload = self._consensus_round(envelope.payload)
            return Envelope(EnvelopeKind.LOCAL_SHARE, self.value, envelope.iteration, payload)
        if envelope.kind is EnvelopeKind.BARRIER:
            if self.local is not None and envelope.payload.size:
                self.duals = admm_dual_update(self.duals, self.local, envelope.payload,
                                              self.settings.admm_penalty)
            return Envelope(EnvelopeKind.BARRIER, self.value, envelope.iteration)
        if envelope.kind is EnvelopeKind.LAMBDA_BROADCAST:
            payload = self._association_round(envelope.payload)
            return Envelope(EnvelopeKind.LOCAL_SHARE, self.value, envelope.iteration, payload)
        raise ParseError(f"agent cannot serve {envelope.kind.name}")

    def _consensus_round(self, consensus: np.ndarray) -> np.ndarray:
        """Dual update with the new global values, then one local step."""
        block = self.block
        penalty = self.settings.admm_penalty
        if self.local is not None:
            self.duals = admm_dual_update(self.duals, self.local, consensus, penalty)

        terms = AdmmTerms(
            layout=block.layout, consensus=consensus, duals=self.duals, scales=block.scales,
            penalty=penalty, mbc_margin=block.mbc_margin, backhaul_margin=block.backhaul_margin,
        )
        problem = self.builder.build_admm_step(self.point, self.operator, block.kind,
                                               block.baseline, terms)
        solution = solve(problem.program, self.solver_settings)
        ok = solution.is_optimal
        if ok:
            self.candidate = self.builder.extract(problem, solution, block.state)
            self.local = self.builder.extract_consensus(problem, solution) / block.scales
        else:
            self.failures += 1
            logger.warning("Agent %s local step returned %s", self.operator.name, solution.status.name)
            if self.local is None:
                self.local = np.array(consensus, dtype=float)
        return np.concatenate([self.local, self.duals, [1.0 if ok else 0.0]])

    def _association_round(self, payload: np.ndarray) -> np.ndarray:
        """Own multiplier step from the broadcast lambda and association."""
        n_ops = len(OPERATORS)
        lam = payload[:n_ops]
        x = payload[n_ops:].reshape(self._rates.shape)
        z = self.value
        revenue = float(np.sum(x * self.builder.alpha[z] * self._rates))
        updated = ua_dual_update([lam[z]], self.settings.ua_step, [revenue], [self._baseline[z]])
        return updated


def _coordinate_keys(layout: ConsensusLayout) -> List:
    keys = [("gamma",) + tri for tri in layout.rate_triples]
    keys += [("theta",) + key for key in np.ndindex(*layout.theta_shape)]
    keys += [("psi",) + key for key in np.ndindex(*layout.theta_shape)]
    return keys


# ========================================================================
# Transports
# ========================================================================

class InProcessTransport:
    """Agents served concurrently on a thread pool, bytes in and out."""

    def __init__(self, agents: Dict[int, OperatorAgent]):
        self.agents = agents
        self._pool = ThreadPoolExecutor(max_workers=len(agents), thread_name_prefix="agent")

    def exchange(self, envelopes: Dict[int, Envelope]) -> Dict[int, bytes]:
        futures = {z: self._pool.submit(self.agents[z].handle_bytes, env.encode())
                   for z, env in envelopes.items()}
        return {z: futures[z].result() for z in sorted(futures)}

    def close(self) -> None:
        self._pool.shutdown(wait=True)


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    chunks = []
    while size:
        chunk = sock.recv(size)
        if not chunk:
            raise ConnectionError("socket closed mid-frame")
        chunks.append(chunk)
        size -= len(chunk)
    return b"".join(chunks)


def send_frame(sock: socket.socket, data: bytes) -> None:
    sock.sendall(FRAME.pack(len(data)) + data)


def recv_frame(sock: socket.socket) -> bytes:
    (size,) = FRAME.unpack(_recv_exact(sock, FRAME.size))
    return _recv_exact(sock, size)


class SocketTransport:
    """Each agent serves length-prefixed frames on its end of a local socket pair."""

    def __init__(self, agents: Dict[int, OperatorAgent]):
        self.agents = agents
        self._ends: Dict[int, socket.socket] = {}
        self._threads: List[threading.Thread] = []
        for z, agent in sorted(agents.items()):
            near, far = socket.socketpair()
            self._ends[z] = near
            thread = threading.Thread(target=self._serve, args=(agent, far),
                                      name=f"agent-{z}", daemon=True)
            thread.start()
            self._threads.append(thread)

    @staticmethod
    def _serve(agent: OperatorAgent, sock: socket.socket) -> None:
        with sock:
            while True:
                try:
                    request = recv_frame(sock)
                except ConnectionError:
                    return
                if not request:
                    return
                try:
                    reply = agent.handle_bytes(request)
                except Exception:
                    logger.exception("Agent %s failed", agent.operator.name)
                    reply = b""
                send_frame(sock, reply)

    def exchange(self, envelopes: Dict[int, Envelope]) -> Dict[int, bytes]:
        for z in sorted(envelopes):
            send_frame(self._ends[z], envelopes[z].encode())
        return {z: recv_frame(self._ends[z]) for z in sorted(envelopes)}

    def close(self) -> None:
        for sock in self._ends.values():
            try:
                send_frame(sock, b"")
            except OSError:
                pass
        for thread in self._threads:
            thread.join(timeout=5.0)
        for sock in self._ends.values():
            sock.close()


# ========================================================================
# Orchestrator side
# ========================================================================

class Coordinator:
    """Stamps rounds, runs exchanges and keeps the byte transcript."""

    def __init__(self, transport):
        self.transport = transport
        self.clock = 0
        self._digest = hashlib.sha256()
        self.frames = 0

    def _record(self, data: bytes) -> None:
        self._digest.update(FRAME.pack(len(data)))
        self._digest.update(data)
        self.frames += 1

    def round(self, kind: EnvelopeKind, payloads: Dict[int, np.ndarray],
              expect: EnvelopeKind) -> Dict[int, Envelope]:
        """
        Send one stamped envelope per agent and collect the replies.

        Raises:
            MissingPayload: An agent did not answer this round
        """
        self.clock += 1
        envelopes = {z: Envelope(kind, COORDINATOR_SENDER, self.clock, payloads[z])
                     for z in sorted(payloads)}
        for z in sorted(envelopes):
            self._record(envelopes[z].encode())
        raw = self.transport.exchange(envelopes)
        replies = {}
        for z in sorted(envelopes):
            data = raw.get(z, b"")
            if not data:
                raise MissingPayload(f"operator {z} skipped round {self.clock}")
            self._record(data)
            reply = Envelope.decode(data)
            if reply.iteration != self.clock or reply.kind is not expect or reply.sender != z:
                raise MissingPayload(f"operator {z} answered round {reply.iteration} "
                                     f"with {reply.kind.name} during round {self.clock}")
            replies[z] = reply
        return replies

    def broadcast(self, kind: EnvelopeKind, payload: np.ndarray, agents: Sequence[int],
                  expect: EnvelopeKind) -> Dict[int, Envelope]:
        """Same payload to every agent."""
        return self.round(kind, {z: payload for z in agents}, expect)

    @property
    def digest(self) -> str:
        """SHA-256 of every frame sent and received, in round order."""
        return self._digest.copy().hexdigest()
