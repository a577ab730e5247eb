"""Immutable scenario value types: nodes, users, beams and the satellite."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .enums import NodeKind, OperatorId
from .link import NoiseModel, SatellitePayload, SRParams

Point = Tuple[float, float]


@dataclass(frozen=True)
class NodeDescriptor:
    """A BS or ST serving users on the ground."""
    id: int
    operator: OperatorId
    kind: NodeKind
    position: Point         # km
    max_power: float        # W
    antenna_count: int

    @property
    def is_terminal(self) -> bool:
        """Whether the node is backhauled by the satellite."""
        return self.kind is NodeKind.SATELLITE_TERMINAL


@dataclass(frozen=True)
class UserDescriptor:
    """A subscriber of one operator."""
    id: int
    operator: OperatorId
    position: Point         # km


@dataclass(frozen=True)
class BeamDescriptor:
    """A spot beam of the LEO satellite."""
    id: int                 # 1..N_L
    center: Point           # km
    radius: float           # km


@dataclass(frozen=True)
class SatelliteGeometry:
    """Position of the LEO satellite above the local tangent plane."""
    altitude: float = 600.0             # km
    nadir_point: Point = (0.0, 0.0)


@dataclass(frozen=True)
class ScenarioInstance:
    """Complete description of one network layout.

    Nodes are ordered BSs first, then STs; users are ordered GNO subscribers
    first, then SNO subscribers. Band n is the access band owned by operator n.
    """
    nodes: Tuple[NodeDescriptor, ...]
    users: Tuple[UserDescriptor, ...]
    beams: Tuple[BeamDescriptor, ...]
    satellite: SatelliteGeometry
    access_bandwidth: float             # B_C per operator, Hz
    backhaul_bandwidth: float           # B_Ka, Hz
    access_carrier_ghz: float           # f_C
    backhaul_carrier_ghz: float         # f_Ka
    sat_max_power: float                # P_Sat, W
    delta: Tuple[float, float]          # (delta_G, delta_S)
    st_beam: Tuple[int, ...]            # Serving beam index of every ST, in ST order
    payload: SatellitePayload = field(default_factory=SatellitePayload)
    noise: NoiseModel = field(default_factory=NoiseModel)
    fading: SRParams = field(default_factory=SRParams)
    weights: np.ndarray = field(default=None, compare=False, repr=False)
    min_distance_km: float = 0.01
    seed: int = 0

    # ====================================================================
    # Counts
    # ====================================================================

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_beams(self) -> int:
        return len(self.beams)

    @property
    def n_antennas(self) -> int:
        return self.nodes[0].antenna_count

    @property
    def n_terminals(self) -> int:
        return len(self.st_beam)

    # ====================================================================
    # Index sets
    # ====================================================================

    def nodes_of(self, operator: OperatorId) -> List[int]:
        """Node indices owned by an operator."""
        return [n.id for n in self.nodes if n.operator is operator]

    def users_of(self, operator: OperatorId) -> List[int]:
        """User indices subscribed to an operator."""
        return [u.id for u in self.users if u.operator is operator]

    @property
    def terminal_nodes(self) -> List[int]:
        """Node indices of the STs, in ST order."""
        return [n.id for n in self.nodes if n.is_terminal]

    def terminal_index(self, node: int) -> int:
        """Position of an ST node in ST order."""
        return node - (self.n_nodes - self.n_terminals)

    def terminals_in_beam(self, beam: int) -> List[int]:
        """ST-order indices served by a beam."""
        return [s for s, b in enumerate(self.st_beam) if b == beam]

    @property
    def node_operator(self) -> np.ndarray:
        """Operator value of every node."""
        return np.array([n.operator.value for n in self.nodes], dtype=int)

    @property
    def user_operator(self) -> np.ndarray:
        """Operator value of every user."""
        return np.array([u.operator.value for u in self.users], dtype=int)

    @property
    def max_powers(self) -> np.ndarray:
        """Per-node power budgets P_i in W."""
        return np.array([n.max_power for n in self.nodes], dtype=float)

    def delta_of(self, operator: OperatorId) -> float:
        return self.delta[operator.value]

    @property
    def weight_matrix(self) -> np.ndarray:
        """Rate weights b_{i,k}, defaulting to one."""
        if self.weights is None:
            return np.ones((self.n_nodes, self.n_users))
        return np.asarray(self.weights, dtype=float)
