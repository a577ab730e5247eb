"""Small-scale fading samplers and the shadowed-Rician power density."""

import math
from typing import Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import hyp1f1

from ..models.errors import DomainError
from ..models.link import SRParams

# Above this argument 1F1 is evaluated through Kummer's transformation
KUMMER_SWITCH = 50.0


def sample_rayleigh(n_t: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a CN(0, I) row vector of length n_t."""
    return (rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t)) / math.sqrt(2.0)


def sample_sr(params: SRParams, rng: np.random.Generator,
              size: Optional[int] = None) -> Union[complex, np.ndarray]:
    """
    Draw shadowed-Rician amplitudes A e^{j phi} + Z.

    The LoS power A^2 is Gamma(m, Omega/m), phi is uniform and Z is complex
    Gaussian with variance 2b.

    Args:
        params: Fading parameters
        rng: Generator to draw from
        size: Number of draws, or None for a scalar

    Returns:
        Complex amplitude(s)
    """
    los_power = rng.gamma(params.m, params.omega / params.m, size)
    phase = rng.uniform(0.0, 2.0 * math.pi, size)
    scatter = math.sqrt(params.b) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    value = np.sqrt(los_power) * np.exp(1j * phase) + scatter
    return complex(value) if size is None else value


def sr_pdf(s: Union[float, np.ndarray], params: SRParams) -> Union[float, np.ndarray]:
    """Density of |f|^2 under shadowed-Rician fading."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("power must be nonnegative")
    b, m, omega = params.b, params.m, params.omega
    scale = 2.0 * b * m + omega
    log_coef = -math.log(2.0 * b) + m * math.log(2.0 * b * m / scale)
    x = omega * s_arr / (2.0 * b * scale)
    exponent = -s_arr / (2.0 * b)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = np.exp(log_coef + exponent) * hyp1f1(m, 1.0, x)
        kummer = np.exp(log_coef + exponent + x) * hyp1f1(1.0 - m, 1.0, -x)
    value = np.where(x > KUMMER_SWITCH, kummer, direct)
    value = np.maximum(value, 0.0)
    return float(value) if np.ndim(s) == 0 else value


def sr_cdf(s: Union[float, np.ndarray], params: SRParams,
           resolution: int = 20001) -> Union[float, np.ndarray]:
    """Distribution function of |f|^2 by cumulative quadrature of sr_pdf."""
    s_arr = np.asarray(s, dtype=float)
    upper = max(float(np.max(s_arr)) if s_arr.size else 0.0, 1e-9)
    grid = np.linspace(0.0, upper, resolution)
    cdf = cumulative_trapezoid(sr_pdf(grid, params), grid, initial=0.0)
    value = np.clip(np.interp(s_arr, grid, cdf), 0.0, 1.0)
    return float(value) if np.ndim(s) == 0 else value
