"""Solution state and revenue report components."""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ..models.scenario import ScenarioInstance

N_BANDS = 2


@dataclass
class SolutionState:
    """Optimization variables (x, w, p, t) and the SCA auxiliaries.

    Shapes: x (nodes, users); w (bands, nodes, users, antennas) complex;
    p (beams,); t (STs,) holding t_{l,i} for the ST's serving beam;
    gamma/beta/phi/rho (bands, nodes, users) when populated.
    """
    x: np.ndarray
    w: np.ndarray
    p: np.ndarray
    t: np.ndarray
    gamma: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None
    slack: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def empty(cls, scenario: ScenarioInstance) -> 'SolutionState':
        """All-zero state with scenario dimensions."""
        return cls(
            x=np.zeros((scenario.n_nodes, scenario.n_users)),
            w=np.zeros((N_BANDS, scenario.n_nodes, scenario.n_users, scenario.n_antennas),
                       dtype=complex),
            p=np.zeros(scenario.n_beams),
            t=np.zeros(scenario.n_terminals),
        )

    def copy(self) -> 'SolutionState':
        """Deep copy of every array."""
        def dup(a):
            return None if a is None else np.array(a, copy=True)
        return SolutionState(
            x=dup(self.x), w=dup(self.w), p=dup(self.p), t=dup(self.t),
            gamma=dup(self.gamma), beta=dup(self.beta), phi=dup(self.phi),
            rho=dup(self.rho), slack=dup(self.slack),
        )

    def with_updates(self, **changes) -> 'SolutionState':
        """Copy with some fields replaced."""
        return replace(self.copy(), **changes)

    @property
    def binariness(self) -> float:
        """max x(1 - x) over all pairs."""
        return float(np.max(self.x * (1.0 - self.x))) if self.x.size else 0.0

    def node_powers(self) -> np.ndarray:
        """Transmit power of every node, summed over bands and users."""
        return np.sum(np.abs(self.w) ** 2, axis=(0, 2, 3))

    def sanitized(self, scenario: ScenarioInstance) -> 'SolutionState':
        """
        Clip solver round-off so every budget holds exactly.

        Args:
            scenario: Scenario providing the budgets

        Returns:
            New state inside the box, simplex and power constraints
        """
        state = self.copy()
        x = np.clip(state.x, 0.0, 1.0)
        load = x.sum(axis=0)
        x = x / np.maximum(load, 1.0)[None, :]
        state.x = x

        budgets = scenario.max_powers
        powers = state.node_powers()
        over = powers > budgets
        if np.any(over):
            scale = np.ones_like(powers)
            scale[over] = np.sqrt(budgets[over] / powers[over])
            state.w = state.w * scale[None, :, None, None]

        p = np.maximum(state.p, 0.0)
        if p.sum() > scenario.sat_max_power:
            p = p * (scenario.sat_max_power / p.sum())
        state.p = p

        t = np.clip(state.t, 0.0, 1.0)
        for beam in range(scenario.n_beams):
            members = scenario.terminals_in_beam(beam)
            total = t[members].sum()
            if total > 1.0:
                t[members] = t[members] / total
        state.t = t

        for name in ("gamma", "beta", "phi", "rho"):
            value = getattr(state, name)
            if value is not None:
                setattr(state, name, np.maximum(value, 0.0))
        return state


@dataclass
class RevenueReport:
    """Per-operator revenue against the no-sharing baselines."""
    revenue: Tuple[float, float]
    baseline: Tuple[float, float] = (0.0, 0.0)

    @property
    def u_g(self) -> float:
        return self.revenue[0]

    @property
    def u_s(self) -> float:
        return self.revenue[1]

    @property
    def slack(self) -> Tuple[float, float]:
        """Mutual benefit slack U_z - U_z^0 per operator."""
        return (self.revenue[0] - self.baseline[0], self.revenue[1] - self.baseline[1])

    @property
    def total(self) -> float:
        return self.revenue[0] + self.revenue[1]
