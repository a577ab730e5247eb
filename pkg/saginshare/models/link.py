"""Link-budget parameter groups for the satellite and ground links."""

from dataclasses import dataclass


@dataclass(frozen=True)
class SRParams:
    """Shadowed-Rician fading parameters of the satellite-ground link."""
    b: float = 0.126        # Half average scatter power
    m: float = 10.1         # Nakagami parameter
    omega: float = 0.835    # Average LoS power

    @property
    def mean_power(self) -> float:
        """E|f|^2 of the compositional model."""
        return self.omega + 2.0 * self.b


@dataclass(frozen=True)
class NoiseModel:
    """Noise inputs for the ground and satellite receivers."""
    ground_psd_dbm_hz: float = -174.0
    sat_antenna_temp: float = 150.0     # K
    ambient_temp: float = 290.0         # K
    noise_figure_db: float = 1.2
    boltzmann: float = 1.38e-23         # J/K


@dataclass(frozen=True)
class SatellitePayload:
    """Antenna characteristics of the LEO satellite and the ST receivers."""
    max_gain_dbi: float = 40.0
    dish_radius_m: float = 0.3
    receive_gain_dbi: float = 10.0

    @property
    def max_gain(self) -> float:
        """Boresight transmit gain G_T0 (linear)."""
        return 10.0 ** (self.max_gain_dbi / 10.0)

    @property
    def receive_gain(self) -> float:
        """ST receive gain G_R (linear)."""
        return 10.0 ** (self.receive_gain_dbi / 10.0)
