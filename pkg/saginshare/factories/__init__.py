from .channel_factory import draw_channels
from .scenario_factory import (
    ScenarioFactory,
    generate_scenario,
    load_config,
    nearest_beam,
    with_overrides,
)
from .state_factory import (
    closest_association,
    equal_power_state,
    equal_satellite_resources,
    mrt_beamformer,
    spread_state,
)

__all__ = [
    'draw_channels',
    'ScenarioFactory',
    'generate_scenario',
    'load_config',
    'nearest_beam',
    'with_overrides',
    'closest_association',
    'equal_power_state',
    'equal_satellite_resources',
    'mrt_beamformer',
    'spread_state',
]
