"""Path loss, antenna pattern and noise power models."""

import math

from scipy.special import j1

from ..models.errors import DomainError
from ..models.link import NoiseModel

SPEED_OF_LIGHT = 299792458.0    # m/s

# Below this argument the Bessel ratio uses its Taylor series
BESSEL_SERIES_LIMIT = 1e-4


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_w: float) -> float:
    return 10.0 * math.log10(value_w) + 30.0


def ground_path_loss_db(d_km: float, f_ghz: float) -> float:
    """Urban macro path loss 32.4 + 20 log f + 30 log d in dB."""
    if d_km <= 0:
        raise DomainError(f"ground distance must be positive, got {d_km}")
    return 32.4 + 20.0 * math.log10(f_ghz) + 30.0 * math.log10(d_km)


def ground_path_loss(d_km: float, f_ghz: float) -> float:
    """Linear power gain of the ground link."""
    return 10.0 ** (-ground_path_loss_db(d_km, f_ghz) / 10.0)


def sat_path_loss_db(d_km: float, f_ghz: float) -> float:
    """Free-space path loss 92.44 + 20 log f + 20 log d in dB."""
    if d_km <= 0:
        raise DomainError(f"slant range must be positive, got {d_km}")
    return 92.44 + 20.0 * math.log10(f_ghz) + 20.0 * math.log10(d_km)


def sat_path_loss(d_km: float, f_ghz: float) -> float:
    """Linear power gain of the satellite link."""
    return 10.0 ** (-sat_path_loss_db(d_km, f_ghz) / 10.0)


def beam_gain(zeta: float, max_gain: float, f_ghz: float, dish_radius_m: float) -> float:
    """
    Bessel-pattern transmit gain G_T0 * 4 |J1(u)/u|^2 with u = kappa a sin(zeta).

    Args:
        zeta: Off-boresight angle (radians)
        max_gain: Boresight gain G_T0 (linear)
        f_ghz: Carrier frequency
        dish_radius_m: Antenna radius a

    Returns:
        Linear transmit gain toward the given angle
    """
    if zeta < 0:
        raise DomainError(f"off-boresight angle must be nonnegative, got {zeta}")
    kappa = 2.0 * math.pi * f_ghz * 1e9 / SPEED_OF_LIGHT
    u = kappa * dish_radius_m * math.sin(zeta)
    if abs(u) < BESSEL_SERIES_LIMIT:
        ratio = 1.0 - u * u / 8.0 + u ** 4 / 192.0
    else:
        ratio = 2.0 * float(j1(u)) / u
    return max_gain * ratio * ratio


def noise_power_ground(model: NoiseModel, bandwidth: float) -> float:
    """Thermal noise of a ground user over the access band, in W."""
    if bandwidth <= 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    return 10.0 ** (model.ground_psd_dbm_hz / 10.0) * bandwidth * 1e-3


def noise_power_sat(model: NoiseModel, bandwidth: float) -> float:
    """Noise of an ST receiver k_B T_sys B, in W."""
    if bandwidth <= 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    system_temp = model.sat_antenna_temp + model.ambient_temp * (
        10.0 ** (model.noise_figure_db / 10.0) - 1.0)
    return model.boltzmann * system_temp * bandwidth
