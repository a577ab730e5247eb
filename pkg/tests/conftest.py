"""Shared scenarios, channel draws and fast algorithm settings."""

import numpy as np
import pytest

from saginshare.components.channel import ChannelRealization
from saginshare.factories.channel_factory import draw_channels
from saginshare.factories.scenario_factory import ScenarioFactory
from saginshare.models.settings import AlgorithmSettings
from saginshare.ui.oracles import MICRO_CONFIG


@pytest.fixture(scope="session")
def factory():
    return ScenarioFactory()


@pytest.fixture(scope="session")
def micro_scenario(factory):
    return factory.from_dict(MICRO_CONFIG, seed=0)


@pytest.fixture(scope="session")
def micro_channels(micro_scenario):
    return draw_channels(micro_scenario, 0)


@pytest.fixture(scope="session")
def desk_scenario(factory):
    return factory.from_dict({}, seed=1)


@pytest.fixture(scope="session")
def desk_channels(desk_scenario):
    return draw_channels(desk_scenario, 1)


@pytest.fixture
def fast_settings():
    return AlgorithmSettings(outer_cap=3, inner_cap=8, init_cap=10, nosharing_cap=8,
                             distributed_cap=3, admm_iterations=3, admm_max_iterations=12)


def hand_channels(scenario, h, f=None, beam_gains=None, sigma_t2=1.0, sigma_s2=1.0):
    """Channel realization with chosen gains for hand-checked cases."""
    n_st = scenario.n_terminals
    return ChannelRealization(
        h=np.asarray(h, dtype=complex),
        f=np.ones(n_st, dtype=complex) if f is None else np.asarray(f, dtype=complex),
        beam_gains=np.ones((scenario.n_beams, n_st)) if beam_gains is None else np.asarray(beam_gains),
        receive_gain=1.0,
        sigma_t2=sigma_t2,
        sigma_s2=sigma_s2,
    )


@pytest.fixture
def make_channels():
    return hand_channels
