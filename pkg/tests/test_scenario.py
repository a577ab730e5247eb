"""Tests for scenario loading, validation, placement and geometry."""

import json
import math

import pytest

from saginshare.factories.scenario_factory import generate_scenario, with_overrides
from saginshare.models.enums import NodeKind, OperatorId
from saginshare.models.errors import ParseError, ValidationError
from saginshare.models.scenario import BeamDescriptor, SatelliteGeometry
from saginshare.utils.geometry import distance, off_boresight_angle, slant_range
from saginshare.utils.propagation import dbm_to_watts


def test_default_counts(desk_scenario):
    assert len(desk_scenario.nodes_of(OperatorId.GNO)) == 2
    assert len(desk_scenario.users_of(OperatorId.GNO)) == 3
    assert len(desk_scenario.nodes_of(OperatorId.SNO)) == 4
    assert len(desk_scenario.users_of(OperatorId.SNO)) == 7
    assert desk_scenario.n_antennas == 4
    assert desk_scenario.n_terminals == 4


def test_node_and_user_order(desk_scenario):
    kinds = [n.kind for n in desk_scenario.nodes]
    assert kinds == [NodeKind.BASE_STATION] * 2 + [NodeKind.SATELLITE_TERMINAL] * 4
    assert desk_scenario.terminal_nodes == [2, 3, 4, 5]
    assert desk_scenario.terminal_index(4) == 2


def test_omitted_values_take_defaults(factory):
    scenario = factory.from_dict({"network": {"n_bs": 1}})
    assert scenario.sat_max_power == 50.0
    assert scenario.delta == (0.6, 0.6)
    assert scenario.max_powers[-1] == pytest.approx(dbm_to_watts(49.0))


def test_delta_out_of_range(factory):
    with pytest.raises(ValidationError) as info:
        factory.from_dict({"sharing": {"delta_g": 1.3}})
    assert info.value.field == "sharing_coefficients.delta_g"


@pytest.mark.parametrize("data, field", [
    ({"network": {"n_bs": 0}}, "network.n_bs"),
    ({"network": {"n_antennas": 2.5}}, "network.n_antennas"),
    ({"satellite": {"altitude_km": -1.0}}, "satellite.altitude_km"),
    ({"weights": [1.0, 2.0]}, "weights"),
    ({"seed": -3}, "seed"),
    ({"colour": 1}, "colour"),
])
def test_invalid_values(factory, data, field):
    with pytest.raises(ValidationError) as info:
        factory.from_dict(data)
    assert info.value.field == field


def test_read_errors(factory, tmp_path):
    with pytest.raises(ParseError):
        factory.read(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ParseError):
        factory.read(broken)
    listing = tmp_path / "list.json"
    listing.write_text(json.dumps([1, 2]))
    with pytest.raises(ParseError):
        factory.read(listing)


def test_algorithm_section(factory):
    settings = factory.settings({"algorithm": {"admm_penalty": 3.0, "ua_cap": 7}})
    assert settings.admm_penalty == 3.0
    assert settings.ua_cap == 7
    assert settings.step_size == 0.1


def test_placement_is_deterministic(desk_scenario):
    first = generate_scenario(desk_scenario, 42)
    second = generate_scenario(desk_scenario, 42)
    assert [u.position for u in first.users] == [u.position for u in second.users]
    assert [n.position for n in first.nodes] == [n.position for n in second.nodes]


def test_placement_depends_on_seed(desk_scenario):
    first = generate_scenario(desk_scenario, 1)
    second = generate_scenario(desk_scenario, 2)
    assert [u.position for u in first.users] != [u.position for u in second.users]


def test_terminals_lie_in_their_beam(desk_scenario):
    for seed in range(100):
        scenario = generate_scenario(desk_scenario, seed)
        for s, node in enumerate(scenario.terminal_nodes):
            beam = scenario.beams[scenario.st_beam[s]]
            assert distance(scenario.nodes[node].position, beam.center) <= beam.radius + 1e-9


def test_with_overrides(desk_scenario):
    scenario = with_overrides(desk_scenario, sat_max_power=20.0, st_power_dbm=40.0,
                              delta=(0.2, 1.0))
    assert scenario.sat_max_power == 20.0
    assert scenario.delta == (0.2, 1.0)
    for node in scenario.terminal_nodes:
        assert scenario.nodes[node].max_power == pytest.approx(10.0)
    assert scenario.nodes[0].max_power == desk_scenario.nodes[0].max_power
    with pytest.raises(ValidationError):
        with_overrides(desk_scenario, delta=(1.5, 0.0))


def test_slant_range():
    sat = SatelliteGeometry(altitude=600.0)
    assert slant_range(sat, (0.0, 0.0)) == pytest.approx(600.0)
    assert slant_range(sat, (10.0, 0.0)) == pytest.approx(math.sqrt(600.0 ** 2 + 10.0 ** 2))
    assert slant_range(sat, (3.0, -4.0)) >= sat.altitude


def test_off_boresight_angle():
    sat = SatelliteGeometry(altitude=600.0)
    beam = BeamDescriptor(1, (0.0, 0.0), 10.0)
    assert off_boresight_angle(sat, beam, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert off_boresight_angle(sat, beam, (10.0, 0.0)) == pytest.approx(math.atan(10.0 / 600.0))
    assert off_boresight_angle(sat, beam, (-10.0, 0.0)) == pytest.approx(
        off_boresight_angle(sat, beam, (10.0, 0.0)))
