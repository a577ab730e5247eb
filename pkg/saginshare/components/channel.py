"""Channel realization component for one fading draw."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """All link gains of one scenario draw.

    h[n, i, k] is the 1 x N_t row channel from node i to user k on band n,
    f[s] the satellite amplitude toward ST s, and beam_gains[l, s] the
    transmit gain of beam l toward ST s.
    """
    h: np.ndarray
    f: np.ndarray
    beam_gains: np.ndarray
    receive_gain: float
    sigma_t2: float             # W, per access band
    sigma_s2: float             # W, over the backhaul band
    seed: int = 0

    @property
    def n_bands(self) -> int:
        return self.h.shape[0]

    @property
    def sat_gains(self) -> np.ndarray:
        """Received power per watt of beam power, q[l, s] = G_T G_R |f_s|^2."""
        return self.beam_gains * self.receive_gain * np.abs(self.f)[None, :] ** 2
