"""First-order surrogates of the non-convex terms of the joint problem.

Every surrogate is tight at its expansion point. g1, g2, the penalty and the
backhaul surrogate bound their exact counterparts from below; g3 bounds
log2(1 + phi) from above.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.program import LN2, LinearExpr
from ..models.errors import DomainError

BETA_FLOOR = 1e-12


def re_linear(coef: np.ndarray, re_index: Sequence[int], im_index: Sequence[int],
              const: float = 0.0) -> LinearExpr:
    """
    Real part of sum_a coef_a w_a as an affine expression.

    Args:
        coef: Complex coefficients, one per antenna
        re_index: Program coordinates of Re(w_a)
        im_index: Program coordinates of Im(w_a)
        const: Constant offset

    Returns:
        sum_a Re(coef_a) Re(w_a) - Im(coef_a) Im(w_a) + const
    """
    expr = LinearExpr(const=const)
    for a, value in enumerate(np.asarray(coef, dtype=complex)):
        expr.add_term(int(re_index[a]), float(value.real))
        expr.add_term(int(im_index[a]), float(-value.imag))
    return expr


def received_components(channel: np.ndarray, re_index: Sequence[int],
                        im_index: Sequence[int]):
    """(Re, Im) of h w as two affine expressions."""
    channel = np.asarray(channel, dtype=complex)
    return re_linear(channel, re_index, im_index), re_linear(-1j * channel, re_index, im_index)


@dataclass(frozen=True)
class G1Surrogate:
    """Minorant of |h w|^2 / beta around (w_prev, beta_prev)."""
    channel: np.ndarray
    w_prev: np.ndarray
    beta_prev: float

    def __post_init__(self):
        if not self.beta_prev > 0.0:
            raise DomainError(f"g1 expansion needs beta_prev > 0, got {self.beta_prev}")
        object.__setattr__(self, "beta_prev", max(float(self.beta_prev), BETA_FLOOR))

    @property
    def received(self) -> complex:
        return complex(np.dot(self.channel, self.w_prev))

    def value(self, w: np.ndarray, beta: float) -> float:
        c = self.received
        linear = 2.0 * (np.conj(c) * np.dot(self.channel, w)).real / self.beta_prev
        return float(linear - abs(c) ** 2 / self.beta_prev ** 2 * beta)

    def exact(self, w: np.ndarray, beta: float) -> float:
        return float(abs(np.dot(self.channel, w)) ** 2 / beta)

    def linear_expr(self, re_index, im_index, beta_index: int) -> LinearExpr:
        c = self.received
        expr = re_linear(2.0 * np.conj(c) * self.channel / self.beta_prev, re_index, im_index)
        return expr.add_term(int(beta_index), -abs(c) ** 2 / self.beta_prev ** 2)


@dataclass(frozen=True)
class G2Surrogate:
    """Minorant of |h w|^2 around w_prev."""
    channel: np.ndarray
    w_prev: np.ndarray

    @property
    def received(self) -> complex:
        return complex(np.dot(self.channel, self.w_prev))

    def value(self, w: np.ndarray) -> float:
        c = self.received
        return float(2.0 * (np.conj(c) * np.dot(self.channel, w)).real - abs(c) ** 2)

    def exact(self, w: np.ndarray) -> float:
        return float(abs(np.dot(self.channel, w)) ** 2)

    def linear_expr(self, re_index, im_index) -> LinearExpr:
        c = self.received
        return re_linear(2.0 * np.conj(c) * self.channel, re_index, im_index, const=-abs(c) ** 2)


@dataclass(frozen=True)
class G3Surrogate:
    """Tangent majorant of log2(1 + phi) at phi_prev."""
    phi_prev: float

    def __post_init__(self):
        if self.phi_prev < 0.0:
            raise DomainError(f"g3 expansion needs phi_prev >= 0, got {self.phi_prev}")

    @property
    def slope(self) -> float:
        return 1.0 / (LN2 * (1.0 + self.phi_prev))

    def value(self, phi: float) -> float:
        return math.log2(1.0 + self.phi_prev) + (phi - self.phi_prev) * self.slope

    def exact(self, phi: float) -> float:
        return math.log2(1.0 + phi)

    def linear_expr(self, phi_index: int) -> LinearExpr:
        expr = LinearExpr.constant(math.log2(1.0 + self.phi_prev) - self.phi_prev * self.slope)
        return expr.add_term(int(phi_index), self.slope)


@dataclass(frozen=True)
class BackhaulSurrogate:
    """Concave minorant of an ST's backhaul capacity in the beam powers.

    The capacity scale * t * log2(1 + q_l p_l / (sum_{l' != l} q_l' p_l' + noise))
    is written as a difference of two logs; the subtracted one is replaced by
    its tangent c1 + c2.(p - p_prev).
    """
    gains: np.ndarray           # q[l'] toward this ST, per unit beam power
    beam: int
    p_prev: np.ndarray
    noise: float = 1.0
    scale: float = 1.0          # B_Ka / B_C in normalized units
    time_share: float = 1.0
    p_max: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.p_prev, dtype=float)
        if np.any(p < -1e-12) or p.sum() > self.p_max * (1.0 + 1e-9) + 1e-12:
            raise DomainError("backhaul expansion point violates the satellite power budget")

    @property
    def interference_prev(self) -> float:
        mask = np.arange(len(self.gains)) != self.beam
        return float(np.dot(self.gains[mask], np.asarray(self.p_prev)[mask]) + self.noise)

    @property
    def c1(self) -> float:
        return math.log2(self.interference_prev)

    @property
    def c2(self) -> np.ndarray:
        """Gradient of the subtracted log, zero on the serving beam."""
        grad = np.asarray(self.gains, dtype=float) / (LN2 * self.interference_prev)
        grad[self.beam] = 0.0
        return grad

    def value(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        total = float(np.dot(self.gains, p) + self.noise)
        tangent = self.c1 + float(np.dot(self.c2, p - self.p_prev))
        return self.scale * self.time_share * (math.log2(total) - tangent)

    def exact(self, p: np.ndarray) -> float:
        p = np.asarray(p, dtype=float)
        signal = self.gains[self.beam] * p[self.beam]
        interference = float(np.dot(self.gains, p)) - signal + self.noise
        return self.scale * self.time_share * math.log2(1.0 + signal / interference)

    def total_power_expr(self, p_index: Sequence[int]) -> LinearExpr:
        """sum_l q_l p_l + noise, the argument of the concave log."""
        return LinearExpr.dot(p_index, self.gains, const=self.noise)

    def tangent_expr(self, p_index: Sequence[int]) -> LinearExpr:
        """-(c1 + c2.(p - p_prev)) as an affine expression."""
        c2 = self.c2
        const = -self.c1 + float(np.dot(c2, self.p_prev))
        return LinearExpr.dot(p_index, -c2, const=const)


@dataclass(frozen=True)
class PenaltySurrogate:
    """Tangent minorant of x^2 - x at x_prev."""
    x_prev: float

    def value(self, x: float) -> float:
        return (2.0 * self.x_prev - 1.0) * x - self.x_prev ** 2

    @staticmethod
    def exact(x: float) -> float:
        return x * x - x

    def linear_expr(self, x_index: int) -> LinearExpr:
        return LinearExpr.var(x_index, 2.0 * self.x_prev - 1.0) - self.x_prev ** 2
