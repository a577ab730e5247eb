"""Factory for starting solution states: spread starts, MRT and nearest-node association."""

import math
from typing import Iterable, Optional

import numpy as np

from ..components.channel import ChannelRealization
from ..components.solution import SolutionState
from ..models.scenario import ScenarioInstance
from ..systems.subproblem_system import Scope
from ..utils.geometry import distance


def mrt_beamformer(channel: np.ndarray, power: float) -> np.ndarray:
    """sqrt(power) h^H / ||h||, the zero vector for a null channel."""
    norm = float(np.linalg.norm(channel))
    if norm == 0.0 or power <= 0.0:
        return np.zeros_like(channel, dtype=complex)
    return math.sqrt(power) * np.conj(channel) / norm


def equal_satellite_resources(scenario: ScenarioInstance, state: SolutionState) -> SolutionState:
    """p_l = P_Sat / N_L and t = 1 / (STs in the beam)."""
    state.p = np.full(scenario.n_beams, scenario.sat_max_power / scenario.n_beams)
    for beam in range(scenario.n_beams):
        members = scenario.terminals_in_beam(beam)
        for s in members:
            state.t[s] = 1.0 / len(members)
    return state


def spread_state(scenario: ScenarioInstance, channels: ChannelRealization,
                 scope: Optional[Scope] = None) -> SolutionState:
    """
    Start with every scoped user spread over every scoped node.

    Args:
        scenario: Network layout
        channels: Channel draw
        scope: Nodes, users and bands to populate (everything by default)

    Returns:
        x uniform over the scoped nodes, MRT beams sharing each node's budget
        equally over scoped users and bands, and equal satellite resources
    """
    scope = scope or Scope.shared(scenario)
    state = SolutionState.empty(scenario)
    nodes, users, bands = scope.nodes, scope.users, scope.bands
    if not nodes or not users:
        return equal_satellite_resources(scenario, state)
    state.x[np.ix_(nodes, users)] = 1.0 / len(nodes)
    for i in nodes:
        share = scenario.nodes[i].max_power / (len(users) * len(bands))
        for n in bands:
            for k in users:
                state.w[n, i, k] = mrt_beamformer(channels.h[n, i, k], share)
    return equal_satellite_resources(scenario, state)


def closest_association(scenario: ScenarioInstance, candidates: Optional[Iterable[int]] = None,
                        users: Optional[Iterable[int]] = None) -> np.ndarray:
    """
    Associate each user with its nearest node.

    Args:
        scenario: Network layout
        candidates: Node indices allowed to serve (all by default)
        users: Users to associate (all by default)

    Returns:
        Binary (nodes, users) matrix; ties go to the lowest node index
    """
    candidates = list(range(scenario.n_nodes)) if candidates is None else sorted(candidates)
    users = list(range(scenario.n_users)) if users is None else list(users)
    x = np.zeros((scenario.n_nodes, scenario.n_users))
    for k in users:
        position = scenario.users[k].position
        gaps = [distance(scenario.nodes[i].position, position) for i in candidates]
        x[candidates[int(np.argmin(gaps))], k] = 1.0
    return x


def equal_power_state(scenario: ScenarioInstance, channels: ChannelRealization, x: np.ndarray,
                      bands: Iterable[int]) -> SolutionState:
    """MRT beams on the given bands, each node's budget split over its users and bands."""
    bands = list(bands)
    state = SolutionState.empty(scenario)
    state.x = np.array(x, dtype=float)
    for i in range(scenario.n_nodes):
        served = np.nonzero(state.x[i] > 0.5)[0]
        if served.size == 0:
            continue
        share = scenario.nodes[i].max_power / (served.size * len(bands))
        for n in bands:
            for k in served:
                state.w[n, i, k] = mrt_beamformer(channels.h[n, i, k], share)
    return equal_satellite_resources(scenario, state)
