"""Factory drawing channel realizations for a placed scenario."""

import math

import numpy as np

from ..components.channel import ChannelRealization
from ..models.scenario import ScenarioInstance
from ..utils.fading import sample_rayleigh, sample_sr
from ..utils.geometry import distance, off_boresight_angle, slant_range
from ..utils.propagation import (
    beam_gain,
    ground_path_loss,
    noise_power_ground,
    noise_power_sat,
    sat_path_loss,
)
from ..utils.rng import named_stream

N_BANDS = 2


def draw_channels(scenario: ScenarioInstance, seed: int) -> ChannelRealization:
    """
    Draw ground and satellite channels for a scenario.

    Draw order is fixed (band, node, user) on the ground stream and ST order
    on the satellite stream, so the result is a pure function of the seed.

    Args:
        scenario: Placed scenario
        seed: Channel seed

    Returns:
        ChannelRealization with path loss and fading applied
    """
    n_t = scenario.n_antennas
    ground = named_stream(seed, "ground")
    h = np.zeros((N_BANDS, scenario.n_nodes, scenario.n_users, n_t), dtype=complex)
    for n in range(N_BANDS):
        for node in scenario.nodes:
            for user in scenario.users:
                d = max(distance(node.position, user.position), scenario.min_distance_km)
                gain = ground_path_loss(d, scenario.access_carrier_ghz)
                h[n, node.id, user.id] = math.sqrt(gain) * sample_rayleigh(n_t, ground)

    sat_stream = named_stream(seed, "satellite")
    terminals = scenario.terminal_nodes
    f = np.zeros(len(terminals), dtype=complex)
    gains = np.zeros((scenario.n_beams, len(terminals)))
    for s, node_id in enumerate(terminals):
        position = scenario.nodes[node_id].position
        d = slant_range(scenario.satellite, position)
        f[s] = math.sqrt(sat_path_loss(d, scenario.backhaul_carrier_ghz)) * sample_sr(
            scenario.fading, sat_stream)
        for beam in scenario.beams:
            zeta = off_boresight_angle(scenario.satellite, beam, position)
            gains[beam.id - 1, s] = beam_gain(
                zeta, scenario.payload.max_gain, scenario.backhaul_carrier_ghz,
                scenario.payload.dish_radius_m)

    return ChannelRealization(
        h=h,
        f=f,
        beam_gains=gains,
        receive_gain=scenario.payload.receive_gain,
        sigma_t2=noise_power_ground(scenario.noise, scenario.access_bandwidth),
        sigma_s2=noise_power_sat(scenario.noise, scenario.backhaul_bandwidth),
        seed=seed,
    )
