"""Flat-earth geometry between the satellite, beams and ground nodes."""

import math
from typing import Sequence

import numpy as np

from ..models.scenario import BeamDescriptor, SatelliteGeometry


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two ground points in km."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def slant_range(sat: SatelliteGeometry, position: Sequence[float]) -> float:
    """Distance from the satellite to a ground point in km."""
    return math.hypot(sat.altitude, distance(position, sat.nadir_point))


def _ray(sat: SatelliteGeometry, point: Sequence[float]) -> np.ndarray:
    return np.array([
        point[0] - sat.nadir_point[0],
        point[1] - sat.nadir_point[1],
        -sat.altitude,
    ])


def off_boresight_angle(sat: SatelliteGeometry, beam: BeamDescriptor,
                        st_position: Sequence[float]) -> float:
    """
    Angle at the satellite between a beam's boresight and an ST.

    Args:
        sat: Satellite geometry
        beam: Beam whose center defines the boresight
        st_position: Ground position of the ST (km)

    Returns:
        Off-boresight angle in radians
    """
    a = _ray(sat, beam.center)
    b = _ray(sat, st_position)
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(np.dot(a, b)))
