"""Reference computations printed by the `oracle` command."""

import itertools
import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import stats

from ..components.channel import ChannelRealization
from ..components.trace import SolverTrace
from ..core.program import ConeProgramBuilder, LinearExpr
from ..core.solver import solve
from ..factories.channel_factory import draw_channels
from ..factories.scenario_factory import ScenarioFactory
from ..factories.state_factory import equal_power_state
from ..models.enums import OPERATORS, OperatorId
from ..models.link import SRParams
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from ..services.centralized_service import (Guard, StepRunner, optimize_resources, repair_state,
                                           run_nosharing, run_wsrm_centralized)
from ..systems.association_system import ua_decisions
from ..systems.metrics_system import alpha_coefficient, fit_backhaul
from ..systems.surrogates import (BackhaulSurrogate, G1Surrogate, G2Surrogate, G3Surrogate,
                                  PenaltySurrogate)
from ..utils.fading import sample_sr, sr_cdf

logger = logging.getLogger(__name__)


# ========================================================================
# Surrogate bounds
# ========================================================================

def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def surrogate_bounds(samples: int = 1000, seed: int = 0, n_t: int = 4) -> Dict[str, float]:
    """
    Worst bound violation and tightness gap of every surrogate.

    Returns:
        Map from "<name>_violation" / "<name>_gap" to the largest value seen;
        violations are surrogate - exact for minorants, exact - surrogate for g3
    """
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in (
        "g1_violation", "g1_gap", "g2_violation", "g2_gap", "g3_violation", "g3_gap",
        "penalty_violation", "penalty_gap", "backhaul_violation", "backhaul_gap")}

    def track(key: str, value: float):
        worst[key] = max(worst[key], value)

    for _ in range(samples):
        h, w_prev, w = _random_complex(rng, n_t), _random_complex(rng, n_t), _random_complex(rng, n_t)
        beta_prev, beta = rng.uniform(0.1, 10.0, 2)
        g1 = G1Surrogate(h, w_prev, beta_prev)
        track("g1_violation", g1.value(w, beta) - g1.exact(w, beta))
        track("g1_gap", abs(g1.value(w_prev, beta_prev) - g1.exact(w_prev, beta_prev)))

        g2 = G2Surrogate(h, w_prev)
        track("g2_violation", g2.value(w) - g2.exact(w))
        track("g2_gap", abs(g2.value(w_prev) - g2.exact(w_prev)))

        phi_prev, phi = rng.uniform(0.0, 50.0, 2)
        g3 = G3Surrogate(phi_prev)
        track("g3_violation", g3.exact(phi) - g3.value(phi))
        track("g3_gap", abs(g3.value(phi_prev) - g3.exact(phi_prev)))

        x_prev, x = rng.uniform(0.0, 1.0, 2)
        pen = PenaltySurrogate(x_prev)
        track("penalty_violation", pen.value(x) - pen.exact(x))
        track("penalty_gap", abs(pen.value(x_prev) - pen.exact(x_prev)))

        n_beams = int(rng.integers(1, 4))
        gains = rng.uniform(0.1, 100.0, n_beams)
        p_prev = rng.dirichlet(np.ones(n_beams)) * rng.uniform(0.0, 1.0)
        p = rng.dirichlet(np.ones(n_beams)) * rng.uniform(0.0, 1.0)
        backhaul = BackhaulSurrogate(gains, int(rng.integers(n_beams)), p_prev,
                                     scale=4.0, time_share=float(rng.uniform(0.0, 1.0)))
        track("backhaul_violation", backhaul.value(p) - backhaul.exact(p))
        track("backhaul_gap", abs(backhaul.value(p_prev) - backhaul.exact(p_prev)))
    return worst


# ========================================================================
# Fading sampler
# ========================================================================

def fading_statistics(samples: int = 100000, seed: int = 0,
                      params: Optional[SRParams] = None) -> Dict[str, float]:
    """KS distance of sampled |f|^2 against the closed-form law, and the sample mean."""
    params = params or SRParams()
    rng = np.random.default_rng(seed)
    power = np.abs(sample_sr(params, rng, samples)) ** 2
    ks = stats.kstest(power, lambda s: sr_cdf(s, params))
    return {
        "ks_distance": float(ks.statistic),
        "sample_mean": float(np.mean(power)),
        "expected_mean": params.omega + 2.0 * params.b,
    }


# ========================================================================
# Linear programs
# ========================================================================

def vertex_enumeration_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    max c.x subject to A x <= b by enumerating basic solutions.

    Returns:
        (optimal value, maximizer); -inf with None when no vertex is feasible
    """
    n = A.shape[1]
    best, argbest = -math.inf, None
    for rows in itertools.combinations(range(A.shape[0]), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + 1e-9) and c @ x > best:
            best, argbest = float(c @ x), x
    return best, argbest


def random_bounded_lp(rng: np.random.Generator, n: int = 3, m: int = 4):
    """Random LP over a box intersected with m random half-spaces (always bounded)."""
    box = np.vstack([np.eye(n), -np.eye(n)])
    cuts = rng.standard_normal((m, n))
    A = np.vstack([box, cuts])
    b = np.concatenate([np.ones(2 * n), np.abs(rng.standard_normal(m)) + 0.1])
    return rng.standard_normal(n), A, b


def conic_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> float:
    """Same LP through the conic solver."""
    builder = ConeProgramBuilder()
    x = builder.add_variables("x", A.shape[1])
    for row, bound in zip(A, b):
        builder.add_le(LinearExpr.dot(x, row), float(bound))
    builder.maximize(LinearExpr.dot(x, c))
    solution = solve(builder.build())
    return float(c @ solution.primal[x])


def lp_agreement(count: int = 50, seed: int = 0) -> Dict[str, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        c, A, b = random_bounded_lp(rng)
        reference, _ = vertex_enumeration_lp(c, A, b)
        worst = max(worst, abs(conic_lp(c, A, b) - reference))
    return {"lps": float(count), "max_abs_difference": worst}


# ========================================================================
# Association
# ========================================================================

def scored_association_example() -> Dict[str, float]:
    """Three nodes (BS, BS, ST) and one GNO user; lambda = (0.5, 0), delta = (0.6, 1)."""
    owners = (OperatorId.GNO, OperatorId.GNO, OperatorId.SNO)
    delta = (0.6, 1.0)
    rates = np.array([[1.0], [1.2], [1.5]])
    alpha = np.array([[[alpha_coefficient(z, owner, OperatorId.GNO, delta)] for owner in owners]
                      for z in OPERATORS])
    lam = (0.5, 0.0)
    weights = np.ones_like(rates)
    scores = (weights + np.tensordot(lam, alpha, axes=1)) * rates
    x = ua_decisions(rates, weights, alpha, lam)
    return {
        "score_bs1": float(scores[0, 0]),
        "score_bs2": float(scores[1, 0]),
        "score_st": float(scores[2, 0]),
        "enumerated_choice": float(np.argmax(scores[:, 0])),
        "decided_choice": float(np.argmax(x[:, 0])),
    }


# ========================================================================
# Exhaustive association
# ========================================================================

def associations(n_nodes: int, n_users: int):
    """Every binary association: each user picks one node or stays unserved."""
    for choice in itertools.product(range(-1, n_nodes), repeat=n_users):
        x = np.zeros((n_nodes, n_users))
        for k, i in enumerate(choice):
            if i >= 0:
                x[i, k] = 1.0
        yield x


def exhaustive_association(scenario: ScenarioInstance, channels: ChannelRealization,
                           baseline, settings: Optional[AlgorithmSettings] = None) -> Tuple[float, np.ndarray]:
    """
    Best WSR over every binary association with converged resource steps.

    Returns:
        (best feasible WSR, its association); -inf with None when nothing is feasible
    """
    runner = StepRunner(scenario, channels, settings)
    best, argbest = -math.inf, None
    for x in associations(scenario.n_nodes, scenario.n_users):
        start = equal_power_state(scenario, channels, x, bands=[z.band for z in OPERATORS])
        state = runner.refresh(fit_backhaul(runner.metrics, start))
        trace = SolverTrace()
        state = repair_state(runner, state, baseline, trace, phase=0)
        if not runner.is_feasible(state, baseline):
            continue
        state = optimize_resources(runner, state, baseline, Guard(runner, baseline, 0.0, trace, 1))
        wsr = runner.metrics.wsr(state)
        logger.debug("Association %s: WSR %.6g", x.argmax(axis=0), wsr)
        if wsr > best:
            best, argbest = wsr, x
    return best, argbest


# One BS, one ST, one user per operator, two antennas, one beam
MICRO_CONFIG = {
    "network": {"n_bs": 1, "n_gno_users": 1, "n_st": 1, "n_sno_users": 1, "n_antennas": 2},
    "satellite": {"n_beams": 1},
}


def micro_optimality(draws: int = 5, seed: int = 0,
                     settings: Optional[AlgorithmSettings] = None) -> Dict[str, float]:
    """Centralized WSR against exhaustive association on micro instances."""
    factory = ScenarioFactory()
    worst_ratio = math.inf
    for draw in range(seed, seed + draws):
        scenario = factory.from_dict(MICRO_CONFIG, seed=draw)
        channels = draw_channels(scenario, draw)
        nosharing = run_nosharing(scenario, channels, settings)
        best, _ = exhaustive_association(scenario, channels, nosharing.baseline, settings)
        result = run_wsrm_centralized(scenario, channels, settings=settings, nosharing=nosharing)
        if best > 0.0:
            worst_ratio = min(worst_ratio, result.wsr / best)
        logger.info("Draw %d: centralized %.6g, exhaustive %.6g", draw, result.wsr, best)
    return {"draws": float(draws), "worst_ratio": worst_ratio}


SUITES: Dict[str, Callable[[], Dict[str, float]]] = {
    "surrogates": surrogate_bounds,
    "fading": fading_statistics,
    "lp": lp_agreement,
    "association": scored_association_example,
    "micro": micro_optimality,
}
