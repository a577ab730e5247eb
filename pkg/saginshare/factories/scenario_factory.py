"""Factory for loading, validating and placing network scenarios."""

import copy
import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..models.enums import NodeKind, OperatorId
from ..models.errors import ParseError, ValidationError
from ..models.link import NoiseModel, SatellitePayload, SRParams
from ..models.scenario import (
    BeamDescriptor,
    NodeDescriptor,
    SatelliteGeometry,
    ScenarioInstance,
    UserDescriptor,
)
from ..models.settings import AlgorithmSettings
from ..utils.geometry import distance
from ..utils.propagation import dbm_to_watts
from ..utils.rng import named_stream

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ("network", "satellite", "bands", "sharing", "weights", "seed", "algorithm")


class ScenarioFactory:
    """Builds ScenarioInstances from JSON configuration trees."""

    def __init__(self, data_path: Optional[Path] = None):
        self.data_path = data_path or Path(__file__).parent.parent / "data" / "scenarios"
        self.defaults = self._load_defaults()

    def _load_defaults(self) -> Dict:
        """Load default scenario from JSON file."""
        filepath = self.data_path / "default_scenario.json"
        if filepath.exists():
            try:
                with open(filepath) as f:
                    return json.load(f)
            except json.JSONDecodeError as exc:
                logger.warning("Ignoring unreadable defaults %s: %s", filepath, exc)
        return self._default_config()

    def _default_config(self) -> Dict:
        """Built-in desk-scale scenario if no file exists."""
        return {
            "network": {
                "n_bs": 2, "n_gno_users": 3, "n_st": 4, "n_sno_users": 7,
                "n_antennas": 4, "bs_max_power_dbm": 52.0, "st_max_power_dbm": 49.0,
                "min_distance_km": 0.01,
            },
            "satellite": {
                "altitude_km": 600.0, "n_beams": 2, "beam_radius_km": 10.0,
                "max_power_w": 50.0, "max_gain_dbi": 40.0, "dish_radius_m": 0.3,
                "receive_gain_dbi": 10.0, "antenna_temperature_k": 150.0,
                "ambient_temperature_k": 290.0, "noise_figure_db": 1.2,
                "boltzmann": 1.38e-23,
                "sr_fading": {"b": 0.126, "m": 10.1, "omega": 0.835},
            },
            "bands": {
                "access_bandwidth_hz": 1e8, "backhaul_bandwidth_hz": 4e8,
                "access_carrier_ghz": 3.0, "backhaul_carrier_ghz": 20.0,
                "noise_psd_dbm_hz": -174.0,
            },
            "sharing": {"delta_g": 0.6, "delta_s": 0.6},
            "weights": 1.0,
            "seed": 0,
        }

    # ====================================================================
    # Loading
    # ====================================================================

    def read(self, path: Union[str, Path]) -> Dict:
        """Parse a configuration file into a raw tree."""
        path = Path(path)
        if not path.exists():
            raise ParseError(f"config file not found: {path}")
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"{path}: top level must be an object")
        return data

    def merged(self, data: Dict) -> Dict:
        """Fill missing sections and keys from the defaults."""
        unknown = set(data) - set(TOP_LEVEL_KEYS)
        if unknown:
            raise ValidationError(sorted(unknown)[0], "unknown top-level key")
        tree = copy.deepcopy(self.defaults)
        for section, value in data.items():
            if isinstance(value, dict) and isinstance(tree.get(section), dict):
                for key, item in value.items():
                    if isinstance(item, dict) and isinstance(tree[section].get(key), dict):
                        tree[section][key].update(item)
                    else:
                        tree[section][key] = item
            else:
                tree[section] = value
        return tree

    def from_dict(self, data: Dict, seed: Optional[int] = None) -> ScenarioInstance:
        """Validate a raw tree and place the scenario."""
        tree = self.merged(data)
        try:
            template = self._template(tree)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed config: {exc}") from exc
        return generate_scenario(template, template.seed if seed is None else seed)

    def load(self, path: Union[str, Path]) -> ScenarioInstance:
        """Load, validate and place a scenario file."""
        return self.from_dict(self.read(path))

    def settings(self, data: Dict) -> AlgorithmSettings:
        """Algorithm settings from the optional `algorithm` section."""
        return AlgorithmSettings.from_dict(data.get("algorithm", {}))

    # ====================================================================
    # Validation
    # ====================================================================

    def _template(self, tree: Dict) -> ScenarioInstance:
        """Convert a merged tree into an unplaced ScenarioInstance."""
        net, sat, bands, sharing = tree["network"], tree["satellite"], tree["bands"], tree["sharing"]

        counts = {}
        for key in ("n_bs", "n_gno_users", "n_st", "n_sno_users", "n_antennas"):
            counts[key] = _positive_int(net, key, f"network.{key}")
        n_beams = _positive_int(sat, "n_beams", "satellite.n_beams")

        positives = {
            "satellite.altitude_km": sat["altitude_km"],
            "satellite.beam_radius_km": sat["beam_radius_km"],
            "satellite.max_power_w": sat["max_power_w"],
            "satellite.dish_radius_m": sat["dish_radius_m"],
            "satellite.boltzmann": sat["boltzmann"],
            "satellite.antenna_temperature_k": sat["antenna_temperature_k"],
            "satellite.ambient_temperature_k": sat["ambient_temperature_k"],
            "bands.access_bandwidth_hz": bands["access_bandwidth_hz"],
            "bands.backhaul_bandwidth_hz": bands["backhaul_bandwidth_hz"],
            "bands.access_carrier_ghz": bands["access_carrier_ghz"],
            "bands.backhaul_carrier_ghz": bands["backhaul_carrier_ghz"],
            "network.min_distance_km": net.get("min_distance_km", 0.01),
        }
        for field_name, value in positives.items():
            if not isinstance(value, (int, float)) or value <= 0:
                raise ValidationError(field_name, f"must be positive, got {value!r}")
        if sat.get("noise_figure_db", 0.0) < 0:
            raise ValidationError("satellite.noise_figure_db", "must be nonnegative")

        fading_tree = sat.get("sr_fading", {})
        fading = SRParams(
            b=float(fading_tree.get("b", 0.126)),
            m=float(fading_tree.get("m", 10.1)),
            omega=float(fading_tree.get("omega", 0.835)),
        )
        for name in ("b", "m", "omega"):
            if getattr(fading, name) <= 0:
                raise ValidationError(f"satellite.sr_fading.{name}", "must be positive")

        delta = (float(sharing.get("delta_g", 0.6)), float(sharing.get("delta_s", 0.6)))
        for name, value in zip(("delta_g", "delta_s"), delta):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"sharing_coefficients.{name}", f"must lie in [0, 1], got {value}")

        bs_power = dbm_to_watts(float(net["bs_max_power_dbm"]))
        st_power = dbm_to_watts(float(net["st_max_power_dbm"]))
        n_t = counts["n_antennas"]
        nodes = [
            NodeDescriptor(i, OperatorId.GNO, NodeKind.BASE_STATION, (0.0, 0.0), bs_power, n_t)
            for i in range(counts["n_bs"])
        ]
        nodes += [
            NodeDescriptor(counts["n_bs"] + s, OperatorId.SNO, NodeKind.SATELLITE_TERMINAL,
                           (0.0, 0.0), st_power, n_t)
            for s in range(counts["n_st"])
        ]
        users = [UserDescriptor(k, OperatorId.GNO, (0.0, 0.0)) for k in range(counts["n_gno_users"])]
        users += [
            UserDescriptor(counts["n_gno_users"] + k, OperatorId.SNO, (0.0, 0.0))
            for k in range(counts["n_sno_users"])
        ]
        radius = float(sat["beam_radius_km"])
        beams = [BeamDescriptor(l + 1, beam_center(l, n_beams, radius), radius) for l in range(n_beams)]

        weights = _weights(tree.get("weights", 1.0), len(nodes), len(users))
        seed = tree.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ValidationError("seed", "must be a nonnegative integer")

        return ScenarioInstance(
            nodes=tuple(nodes),
            users=tuple(users),
            beams=tuple(beams),
            satellite=SatelliteGeometry(altitude=float(sat["altitude_km"])),
            access_bandwidth=float(bands["access_bandwidth_hz"]),
            backhaul_bandwidth=float(bands["backhaul_bandwidth_hz"]),
            access_carrier_ghz=float(bands["access_carrier_ghz"]),
            backhaul_carrier_ghz=float(bands["backhaul_carrier_ghz"]),
            sat_max_power=float(sat["max_power_w"]),
            delta=delta,
            st_beam=tuple(0 for _ in range(counts["n_st"])),
            payload=SatellitePayload(
                max_gain_dbi=float(sat["max_gain_dbi"]),
                dish_radius_m=float(sat["dish_radius_m"]),
                receive_gain_dbi=float(sat["receive_gain_dbi"]),
            ),
            noise=NoiseModel(
                ground_psd_dbm_hz=float(bands["noise_psd_dbm_hz"]),
                sat_antenna_temp=float(sat["antenna_temperature_k"]),
                ambient_temp=float(sat["ambient_temperature_k"]),
                noise_figure_db=float(sat.get("noise_figure_db", 0.0)),
                boltzmann=float(sat["boltzmann"]),
            ),
            fading=fading,
            weights=weights,
            min_distance_km=float(net.get("min_distance_km", 0.01)),
            seed=seed,
        )


def _positive_int(section: Dict, key: str, field_name: str) -> int:
    value = section[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(field_name, f"must be a positive integer, got {value!r}")
    return value


def _weights(raw: Any, n_nodes: int, n_users: int) -> np.ndarray:
    """Expand a scalar or nested-list weight entry into a matrix."""
    try:
        matrix = np.broadcast_to(np.asarray(raw, dtype=float), (n_nodes, n_users)).copy()
    except ValueError as exc:
        raise ValidationError("weights", f"expected scalar or {n_nodes}x{n_users} matrix") from exc
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise ValidationError("weights", "must be finite and nonnegative")
    return matrix


# ========================================================================
# Placement
# ========================================================================

def beam_center(index: int, n_beams: int, radius: float) -> Tuple[float, float]:
    """Tangent beams side by side along x, centered on the nadir point."""
    return (-radius * (n_beams - 1) + 2.0 * radius * index, 0.0)


def region_bounds(scenario: ScenarioInstance) -> Tuple[float, float, float, float]:
    """Bounding box (xmin, xmax, ymin, ymax) of the union of beam disks."""
    xs = [b.center[0] for b in scenario.beams]
    ys = [b.center[1] for b in scenario.beams]
    r = scenario.beams[0].radius
    return min(xs) - r, max(xs) + r, min(ys) - r, max(ys) + r


def base_station_sites(count: int, bounds: Tuple[float, float, float, float]) -> List[Tuple[float, float]]:
    """Corners first, then edge midpoints, shrinking toward the center on repeats."""
    xmin, xmax, ymin, ymax = bounds
    cx, cy = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
    ring = [(xmin, ymin), (xmax, ymax), (xmin, ymax), (xmax, ymin),
            (cx, ymin), (cx, ymax), (xmin, cy), (xmax, cy)]
    sites = []
    for i in range(count):
        shrink = 0.5 ** (i // len(ring))
        x, y = ring[i % len(ring)]
        sites.append((cx + (x - cx) * shrink, cy + (y - cy) * shrink))
    return sites


def _uniform_in_disk(rng: np.random.Generator, center: Tuple[float, float],
                     radius: float) -> Tuple[float, float]:
    r = radius * np.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return (center[0] + float(r * np.cos(angle)), center[1] + float(r * np.sin(angle)))


def nearest_beam(beams: Tuple[BeamDescriptor, ...], position: Tuple[float, float]) -> int:
    """Index of the closest beam center, lowest id on ties."""
    dists = [distance(b.center, position) for b in beams]
    return int(np.argmin(dists))


def generate_scenario(config: ScenarioInstance, seed: int) -> ScenarioInstance:
    """
    Place nodes and users deterministically from a seed.

    Args:
        config: Validated scenario (positions are ignored)
        seed: Placement seed

    Returns:
        New ScenarioInstance with drawn positions and beam membership
    """
    rng = named_stream(seed, "placement")
    beams = config.beams
    radius = beams[0].radius
    sites = base_station_sites(len(config.nodes_of(OperatorId.GNO)), region_bounds(config))

    nodes = []
    st_beam = []
    for node in config.nodes:
        if node.kind is NodeKind.BASE_STATION:
            position = sites[node.id]
        else:
            s = config.terminal_index(node.id)
            position = _uniform_in_disk(rng, beams[s % len(beams)].center, radius)
            st_beam.append(nearest_beam(beams, position))
        nodes.append(replace(node, position=position))

    users = []
    for user in config.users:
        beam = beams[int(rng.integers(len(beams)))]
        users.append(replace(user, position=_uniform_in_disk(rng, beam.center, radius)))

    return replace(config, nodes=tuple(nodes), users=tuple(users), st_beam=tuple(st_beam), seed=seed)


def with_overrides(scenario: ScenarioInstance, sat_max_power: Optional[float] = None,
                   st_power_dbm: Optional[float] = None,
                   delta: Optional[Tuple[float, float]] = None) -> ScenarioInstance:
    """Copy of a scenario with swept quantities replaced."""
    if sat_max_power is not None:
        scenario = replace(scenario, sat_max_power=float(sat_max_power))
    if st_power_dbm is not None:
        power = dbm_to_watts(float(st_power_dbm))
        nodes = tuple(replace(n, max_power=power) if n.is_terminal else n for n in scenario.nodes)
        scenario = replace(scenario, nodes=nodes)
    if delta is not None:
        for name, value in zip(("delta_g", "delta_s"), delta):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"sharing_coefficients.{name}", f"must lie in [0, 1], got {value}")
        scenario = replace(scenario, delta=(float(delta[0]), float(delta[1])))
    return scenario


def load_config(path: Union[str, Path]) -> ScenarioInstance:
    """Load a scenario configuration file (missing keys take the defaults)."""
    return ScenarioFactory().load(path)
