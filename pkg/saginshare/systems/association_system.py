"""Lagrangian-dual user association with per-user analytic decisions."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..models.enums import OPERATORS
from ..models.settings import AlgorithmSettings

logger = logging.getLogger(__name__)

# (iteration, lambda, x, revenues) -> next lambda
DualBroadcaster = Callable[[int, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def ua_scores(rates: np.ndarray, weights: np.ndarray, alpha: np.ndarray,
              lam: Sequence[float]) -> np.ndarray:
    """(b_jk + sum_z lambda_z alpha^z_jk) R_jk for every node and user."""
    lam = np.asarray(lam, dtype=float)
    return (weights + np.tensordot(lam, alpha, axes=1)) * rates


def ua_user_decision(k: int, rates: np.ndarray, weights: np.ndarray, alpha: np.ndarray,
                     lam: Sequence[float]) -> Optional[int]:
    """
    Serving node chosen by user k.

    Args:
        k: User index
        rates: (nodes, users) rates R_jk
        weights: (nodes, users) rate weights
        alpha: (2, nodes, users) revenue shares
        lam: MBC multipliers (lambda_G, lambda_S)

    Returns:
        Index of the best-scoring node, lowest index on ties; None without nodes
    """
    if rates.shape[0] == 0:
        return None
    scores = ua_scores(rates[:, k:k + 1], weights[:, k:k + 1], alpha[:, :, k:k + 1], lam)[:, 0]
    return int(np.argmax(scores))


def ua_decisions(rates: np.ndarray, weights: np.ndarray, alpha: np.ndarray,
                 lam: Sequence[float]) -> np.ndarray:
    """Binary association matrix of every user's decision."""
    x = np.zeros_like(rates, dtype=float)
    for k in range(rates.shape[1]):
        choice = ua_user_decision(k, rates, weights, alpha, lam)
        if choice is not None:
            x[choice, k] = 1.0
    return x


def ua_dual_update(lam: Sequence[float], step: float, revenue: Sequence[float],
                   baseline: Sequence[float]) -> np.ndarray:
    """lambda_z <- [lambda_z - step (U_z - U_z^0)]^+ for both operators."""
    if step <= 0.0:
        raise ValueError("dual step must be positive")
    lam = np.asarray(lam, dtype=float)
    return np.maximum(lam - step * (np.asarray(revenue, float) - np.asarray(baseline, float)), 0.0)


def dual_objective(rates: np.ndarray, weights: np.ndarray, alpha: np.ndarray,
                   lam: Sequence[float], baseline: Sequence[float]) -> float:
    """g(lambda) = sum_k max_j score_jk - lambda . U^0."""
    scores = ua_scores(rates, weights, alpha, lam)
    best = scores.max(axis=0) if scores.size else np.zeros(0)
    return float(best.sum() - np.dot(lam, baseline))


@dataclass
class DualAssociationState:
    """Multipliers of the two MBCs and the association they induce."""
    lam: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.lam) < 0.0):
            raise ValueError("MBC multipliers must be nonnegative")


@dataclass
class DualUAResult:
    """Outcome of the dual association loop."""
    x: np.ndarray
    lam: np.ndarray
    converged: bool
    iterations: int
    feasible: bool
    wsr: float
    dual_values: List[float] = field(default_factory=list)
    lam_history: List[np.ndarray] = field(default_factory=list)

    @property
    def duality_gap(self) -> float:
        """Best dual bound minus the primal WSR of the returned x."""
        if not self.dual_values:
            return float("nan")
        return float(min(self.dual_values) - self.wsr)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iterations"


def run_dual_ua(rates: np.ndarray, weights: np.ndarray, alpha: np.ndarray,
                baseline: Sequence[float], settings: Optional[AlgorithmSettings] = None,
                lam0: Optional[Sequence[float]] = None,
                broadcaster: Optional[DualBroadcaster] = None) -> DualUAResult:
    """
    Alternate user decisions and projected subgradient steps on lambda.

    Args:
        rates: (nodes, users) rates at the current beamformers and resources
        weights: (nodes, users) rate weights
        alpha: (2, nodes, users) revenue shares
        baseline: MBC thresholds (U_G^0, U_S^0)
        settings: Step size, tolerance, patience and iteration cap
        lam0: Starting multipliers, zero by default
        broadcaster: Carries lambda and x to the operators and returns the
            updated multipliers; a local update is used when omitted

    Returns:
        DualUAResult holding the best MBC-feasible association found (by
        WSR), or the association with the largest Lagrangian when none is
        feasible
    """
    settings = settings or AlgorithmSettings()
    lam = np.zeros(len(OPERATORS)) if lam0 is None else np.asarray(lam0, dtype=float).copy()
    baseline = np.asarray(baseline, dtype=float)

    best_x, best_wsr, best_feasible, best_lagrangian = None, -np.inf, False, -np.inf
    dual_values: List[float] = []
    history: List[np.ndarray] = []
    calm = 0
    converged = False
    iteration = 0

    for iteration in range(1, settings.ua_cap + 1):
        x = ua_decisions(rates, weights, alpha, lam)
        revenue = np.array([float(np.sum(x * alpha[z.value] * rates)) for z in OPERATORS])
        wsr = float(np.sum(x * weights * rates))
        feasible = bool(np.all(revenue >= baseline - settings.feasibility_tol))
        lagrangian = wsr + float(np.dot(lam, revenue - baseline))

        if feasible and (not best_feasible or wsr > best_wsr):
            best_x, best_wsr, best_feasible = x, wsr, True
        elif not best_feasible and lagrangian > best_lagrangian:
            best_x, best_wsr, best_lagrangian = x, wsr, lagrangian

        dual_values.append(dual_objective(rates, weights, alpha, lam, baseline))
        history.append(lam.copy())

        if broadcaster is not None:
            lam_next = np.asarray(broadcaster(iteration, lam, x, revenue), dtype=float)
        else:
            lam_next = ua_dual_update(lam, settings.ua_step, revenue, baseline)

        if len(dual_values) > 1 and abs(dual_values[-1] - dual_values[-2]) < settings.ua_tol:
            calm += 1
        else:
            calm = 0
        if np.array_equal(lam_next, lam) or calm >= settings.ua_patience:
            converged = True
            lam = lam_next
            break
        lam = lam_next

    logger.debug("Dual association %s after %d iterations, lambda=%s",
                 "converged" if converged else "stopped", iteration, lam)
    return DualUAResult(x=best_x, lam=lam, converged=converged, iterations=iteration,
                        feasible=best_feasible, wsr=best_wsr, dual_values=dual_values,
                        lam_history=history)
