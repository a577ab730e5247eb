from .fading import sample_rayleigh, sample_sr, sr_cdf, sr_pdf
from .geometry import distance, off_boresight_angle, slant_range
from .propagation import (
    beam_gain,
    db_to_linear,
    dbm_to_watts,
    ground_path_loss,
    ground_path_loss_db,
    linear_to_db,
    noise_power_ground,
    noise_power_sat,
    sat_path_loss,
    sat_path_loss_db,
    watts_to_dbm,
)
from .rng import named_stream

__all__ = [
    'sample_rayleigh', 'sample_sr', 'sr_cdf', 'sr_pdf',
    'distance', 'off_boresight_angle', 'slant_range',
    'beam_gain', 'db_to_linear', 'dbm_to_watts', 'ground_path_loss',
    'ground_path_loss_db', 'linear_to_db', 'noise_power_ground', 'noise_power_sat',
    'sat_path_loss', 'sat_path_loss_db', 'watts_to_dbm',
    'named_stream',
]
