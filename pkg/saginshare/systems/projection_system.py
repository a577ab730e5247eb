"""Euclidean projections used by the gradient-projection association updates."""

from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.program import ConeProgramBuilder, LinearExpr
from ..core.solver import SolverSettings, solve
from ..models.enums import OPERATORS
from ..models.errors import InfeasibleModel

PROJECTION_SETTINGS = SolverSettings(tolerance=1e-10)


def project_capped_simplex(v: np.ndarray) -> np.ndarray:
    """
    Project onto {y >= 0, sum(y) <= 1}.

    Args:
        v: Point to project

    Returns:
        The closest point of the capped simplex
    """
    v = np.asarray(v, dtype=float)
    clipped = np.maximum(v, 0.0)
    if clipped.sum() <= 1.0:
        return clipped
    # Sum constraint is active: sort-based projection onto the unit simplex
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, len(u) + 1)
    support = np.nonzero(u - cumulative / ranks > 0)[0][-1]
    shift = cumulative[support] / (support + 1.0)
    return np.maximum(v - shift, 0.0)


def project_association(v: np.ndarray, allowed: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Project an association matrix column by column.

    Args:
        v: (nodes, users) point
        allowed: Optional boolean mask; masked-out entries are forced to 0

    Returns:
        x with every column in the capped simplex over its allowed nodes
    """
    v = np.asarray(v, dtype=float)
    allowed = np.ones_like(v, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    x = np.zeros_like(v)
    for k in range(v.shape[1]):
        rows = np.nonzero(allowed[:, k])[0]
        if rows.size:
            x[rows, k] = project_capped_simplex(v[rows, k])
    return x


def project_association_with_slack(v_x: np.ndarray, v_s: np.ndarray, rates: np.ndarray,
                                   alpha: np.ndarray, baseline: Sequence[float],
                                   allowed: Optional[np.ndarray] = None,
                                   settings: SolverSettings = PROJECTION_SETTINGS
                                   ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Joint projection of (x, s) onto association rows plus slack-relaxed MBCs.

    The set is {x >= 0, sum_i x_ik <= 1, s >= 0,
    sum x alpha^z R + s_z >= U_z^0 for both operators}, solved as a
    least-squares program with a rotated-cone epigraph.

    Args:
        v_x: (nodes, users) point
        v_s: (2,) slack point
        rates: (nodes, users) fixed rates
        alpha: (2, nodes, users) revenue shares
        baseline: Thresholds (U_G^0, U_S^0)
        allowed: Optional ownership mask
        settings: Solver settings

    Returns:
        (x, s) projected
    """
    v_x = np.asarray(v_x, dtype=float)
    v_s = np.asarray(v_s, dtype=float)
    allowed = np.ones_like(v_x, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    n_nodes, n_users = v_x.shape

    builder = ConeProgramBuilder()
    x = builder.add_variables("x", (n_nodes, n_users))
    s = builder.add_variables("s", len(OPERATORS))
    epigraph = builder.add_variables("epigraph", 1)

    deviations = []
    for i in range(n_nodes):
        for k in range(n_users):
            if allowed[i, k]:
                builder.add_nonneg(LinearExpr.var(x[i, k]))
                deviations.append(LinearExpr.var(x[i, k]) - v_x[i, k])
            else:
                builder.add_equality(LinearExpr.var(x[i, k]))
    for k in range(n_users):
        builder.add_le(LinearExpr.dot(x[:, k], np.ones(n_nodes)), 1.0)
    # With s >= 0, (s - v)^2 = s^2 + 2|v| s + const for v < 0, so a negative
    # target enters as a linear pull and the epigraph stays O(1)
    pull = np.maximum(-v_s, 0.0)
    for z in OPERATORS:
        builder.add_nonneg(LinearExpr.var(s[z.value]))
        deviations.append(LinearExpr.var(s[z.value]) - max(float(v_s[z.value]), 0.0))
        revenue = LinearExpr.dot(x.ravel(), (alpha[z.value] * rates).ravel())
        builder.add_le(float(baseline[z.value]), revenue + LinearExpr.var(s[z.value]))

    builder.add_rsoc(deviations, LinearExpr.var(epigraph[0]), 1.0)
    builder.minimize(LinearExpr.var(epigraph[0]) + LinearExpr.dot(s, 2.0 * pull))
    program = builder.build()
    solution = solve(program, settings)
    if not solution.is_optimal:
        solution = solve(program, settings.relaxed())
    if not solution.is_optimal:
        raise InfeasibleModel(f"slack projection returned {solution.status.name}")

    x_out = np.clip(solution.primal[x], 0.0, 1.0) * allowed
    s_out = np.maximum(solution.primal[s], 0.0)
    return x_out, s_out
