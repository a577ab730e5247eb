"""Conic solver bridge: compiles a ConeProgram to cvxpy and reads back duals."""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import cvxpy as cp
import numpy as np

from ..models.enums import ConeKind, ConeStatus
from .program import ConeBlock, ConeProgram

logger = logging.getLogger(__name__)

SOLVER_PREFERENCE = ("CLARABEL", "ECOS", "SCS")

# Solver-specific option names for the iteration cap and tolerances
ITERATION_OPTION = {
    "CLARABEL": "max_iter",
    "ECOS": "max_iters",
    "SCS": "max_iters",
}
TOLERANCE_OPTIONS = {
    "CLARABEL": ("tol_gap_abs", "tol_gap_rel", "tol_feas"),
    "ECOS": ("abstol", "reltol", "feastol"),
    "SCS": ("eps_abs", "eps_rel"),
}


@dataclass(frozen=True)
class SolverSettings:
    """Tolerance and iteration budget of a conic solve."""
    solver: str = "CLARABEL"
    tolerance: float = 1e-6
    max_iters: int = 100000

    @classmethod
    def from_algorithm(cls, settings) -> 'SolverSettings':
        return cls(solver=settings.solver, tolerance=settings.solver_tol,
                   max_iters=settings.solver_max_iters)

    def relaxed(self, factor: float = 100.0) -> 'SolverSettings':
        """Same solver with a looser tolerance, used for a retry."""
        return replace(self, tolerance=min(1e-4, self.tolerance * factor))


@dataclass
class ConeSolution:
    """Primal-dual output of one solve.

    dual holds the equality multipliers y followed by one multiplier per
    cone-map row z, with Lagrangian q.v + y.(A v - b) - z.(G v + h).
    """
    status: ConeStatus
    primal: np.ndarray
    dual: np.ndarray
    objective_value: float
    residuals: Tuple[float, float, float]
    iterations: int = 0
    solver: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status is ConeStatus.OPTIMAL


def _solver_order(preferred: str) -> List[str]:
    """Preferred solver first, then the rest of SOLVER_PREFERENCE that is installed."""
    installed = set(cp.installed_solvers())
    order = [name for name in (preferred,) + SOLVER_PREFERENCE if name in installed]
    order = list(dict.fromkeys(order))
    if not order:
        raise RuntimeError("no conic solver with exponential cone support is installed")
    if order[0] != preferred:
        logger.warning("Solver %s unavailable, using %s", preferred, order[0])
    return order


def _run_solver(problem: cp.Problem, solver: str, settings: SolverSettings) -> str:
    """One cvxpy solve; a crashed solver is reported as 'solver_error'."""
    options = {ITERATION_OPTION.get(solver, "max_iters"): int(settings.max_iters)}
    for name in TOLERANCE_OPTIONS.get(solver, ()):
        options[name] = float(settings.tolerance)
    try:
        problem.solve(solver=solver, verbose=False, **options)
    except cp.error.SolverError as exc:
        logger.debug("Solver %s failed: %s", solver, exc)
        return "solver_error"
    return problem.status or "solver_error"


def _flatten(value) -> np.ndarray:
    """Flatten a cvxpy dual value that may be a list of arrays."""
    if value is None:
        return np.zeros(0)
    if isinstance(value, (list, tuple)):
        return np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in value])
    return np.ravel(np.asarray(value, dtype=float))


def _exp_duals(value, count: int) -> np.ndarray:
    """Interleave exponential-cone duals into (x, y, z) triples."""
    if value is None:
        return np.zeros(3 * count)
    if isinstance(value, (list, tuple)):
        return np.column_stack([np.ravel(np.asarray(v, dtype=float)) for v in value]).ravel()
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 3:
        return arr.ravel()
    if arr.ndim == 2 and arr.shape[0] == 3:
        return arr.T.ravel()
    return arr.ravel()


def solve(program: ConeProgram, settings: Optional[SolverSettings] = None) -> ConeSolution:
    """
    Solve a conic program.

    Args:
        program: Well-formed program
        settings: Solver choice, tolerance and iteration cap

    Returns:
        ConeSolution; non-optimal outcomes are reported through the status
    """
    settings = settings or SolverSettings()
    program.validate()
    n = program.variable_count
    v = cp.Variable(n)
    G, h = program.G, program.h

    constraints = []
    groups: List[Tuple[str, object]] = []
    if program.A.shape[0]:
        constraints.append(program.A @ v == program.b)
        groups.append(("eq", None))

    nonneg_rows = np.concatenate(
        [np.arange(c.start, c.stop) for c in program.blocks_of(ConeKind.NONNEGATIVE)] or [np.zeros(0, int)])
    if nonneg_rows.size:
        constraints.append(G[nonneg_rows] @ v + h[nonneg_rows] >= 0)
        groups.append(("nonneg", nonneg_rows))

    for block in program.cones:
        if block.kind in (ConeKind.SECOND_ORDER, ConeKind.ROTATED_SECOND_ORDER):
            rows = G[block.start:block.stop]
            t = cp.sum(rows[:1] @ v) + h[block.start]
            x = rows[1:] @ v + h[block.start + 1:block.stop]
            constraints.append(cp.SOC(t, x))
            groups.append(("soc", block))

    exp_blocks = program.blocks_of(ConeKind.EXPONENTIAL)
    if exp_blocks:
        starts = np.array([c.start for c in exp_blocks])
        parts = [G[starts + offset] @ v + h[starts + offset] for offset in range(3)]
        constraints.append(cp.constraints.ExpCone(*parts))
        groups.append(("exp", starts))

    objective = cp.Minimize(program.objective @ v + program.objective_offset)
    problem = cp.Problem(objective, constraints)
    order = _solver_order(settings.solver)
    for position, solver in enumerate(order):
        raw_status = _run_solver(problem, solver, settings)
        if raw_status != "solver_error":
            break
        if position + 1 < len(order):
            logger.warning("Solver %s crashed, falling back to %s", solver, order[position + 1])

    status = _map_status(raw_status)
    solved = v.value is not None and raw_status != "solver_error"
    primal = np.asarray(v.value, dtype=float).ravel() if solved else np.full(n, np.nan)

    y = np.zeros(program.A.shape[0])
    z = np.zeros(G.shape[0])
    if status is ConeStatus.OPTIMAL:
        for constraint, (kind, meta) in zip(constraints, groups):
            if kind == "eq":
                y = _flatten(constraint.dual_value)
            elif kind == "nonneg":
                z[meta] = _flatten(constraint.dual_value)
            elif kind == "soc":
                z[meta.start:meta.stop] = _flatten(constraint.dual_value)
            else:
                triples = _exp_duals(constraint.dual_value, len(meta)).reshape(-1, 3)
                for offset in range(3):
                    z[meta + offset] = triples[:, offset]
        y = _orient_equality_duals(program, y, z)

    value = float(program.objective @ primal + program.objective_offset) if np.all(
        np.isfinite(primal)) else float("nan")
    iterations = 0
    if problem.solver_stats is not None and problem.solver_stats.num_iters is not None:
        iterations = int(problem.solver_stats.num_iters)

    solution = ConeSolution(
        status=status,
        primal=primal,
        dual=np.concatenate([y, z]),
        objective_value=value,
        residuals=(math.inf, math.inf, math.inf),
        iterations=iterations,
        solver=solver,
    )
    if np.all(np.isfinite(primal)):
        solution.residuals = kkt_residuals(program, solution)
    solution.status = checked_status(program, solution, settings.tolerance)
    logger.debug("Solved %d vars / %d cone rows: %s in %d iterations",
                 n, G.shape[0], solution.status.name, iterations)
    return solution


def _map_status(raw: str) -> ConeStatus:
    # optimal_inaccurate carries no residual guarantee
    if raw == cp.OPTIMAL:
        return ConeStatus.OPTIMAL
    if raw in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return ConeStatus.INFEASIBLE
    if raw in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return ConeStatus.UNBOUNDED
    return ConeStatus.MAX_ITERATIONS


def _orient_equality_duals(program: ConeProgram, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Pick the sign of y that matches the Lagrangian q + A'y - G'z = 0."""
    if y.size == 0:
        return y
    base = program.objective - program.G.T @ z
    plus = np.linalg.norm(base + program.A.T @ y)
    minus = np.linalg.norm(base - program.A.T @ y)
    return y if plus <= minus else -y


# ========================================================================
# Residuals
# ========================================================================

def _soc_distance(t: float, x: np.ndarray) -> float:
    """Euclidean distance of (t, x) to the second-order cone."""
    norm = float(np.linalg.norm(x))
    if norm <= t:
        return 0.0
    if norm <= -t:
        return math.hypot(t, norm)
    return (norm - t) / math.sqrt(2.0)


def _exp_violation(x: float, y: float, z: float) -> float:
    """Violation of y exp(x / y) <= z (closure included)."""
    if y > 0 and z > 0:
        return max(0.0, y * math.exp(min(x / y, 700.0)) - z)
    return max(0.0, -y) + max(0.0, x) + max(0.0, -z)


def _exp_dual_violation(u: float, v: float, w: float) -> float:
    """Violation of the dual exponential cone -u exp(v / u) <= e w, u < 0."""
    if u < 0:
        return max(0.0, -u * math.exp(min(v / u, 700.0)) - math.e * w)
    return max(0.0, u) + max(0.0, -v) + max(0.0, -w)


def _cone_violation(block: ConeBlock, s: np.ndarray, dual: bool) -> float:
    part = s[block.start:block.stop]
    if block.kind is ConeKind.NONNEGATIVE:
        return float(np.linalg.norm(np.minimum(part, 0.0)))
    if block.kind is ConeKind.EXPONENTIAL:
        check = _exp_dual_violation if dual else _exp_violation
        return check(*[float(a) for a in part])
    return _soc_distance(float(part[0]), part[1:])


def kkt_residuals(program: ConeProgram, solution: ConeSolution) -> Tuple[float, float, float]:
    """
    Primal, dual and gap residuals of a primal-dual pair.

    Args:
        program: The solved program
        solution: Solution with matching dimensions

    Returns:
        (primal infeasibility, dual infeasibility, |primal - dual objective|)
    """
    v = solution.primal
    m_eq = program.A.shape[0]
    y, z = solution.dual[:m_eq], solution.dual[m_eq:]
    s = program.G @ v + program.h

    primal_sq = float(np.sum((program.A @ v - program.b) ** 2))
    dual_sq = float(np.sum((program.objective + program.A.T @ y - program.G.T @ z) ** 2))
    for block in program.cones:
        primal_sq += _cone_violation(block, s, dual=False) ** 2
        dual_sq += _cone_violation(block, z, dual=True) ** 2

    gap = abs(float(program.objective @ v + program.b @ y + program.h @ z))
    return math.sqrt(primal_sq), math.sqrt(dual_sq), gap


# Relative primal infeasibility tolerated on an Optimal status, in units of the
# solver tolerance
ACCEPTANCE_FACTOR = 1e3


def checked_status(program: ConeProgram, solution: ConeSolution, tolerance: float) -> ConeStatus:
    """
    Downgrade an Optimal status whose primal point does not satisfy the program.

    The primal residual is measured relative to 1 + the largest right-hand side
    entry.
    """
    if solution.status is not ConeStatus.OPTIMAL:
        return solution.status
    if not np.all(np.isfinite(solution.primal)):
        return ConeStatus.MAX_ITERATIONS
    scale = 1.0 + max(np.max(np.abs(program.b), initial=0.0), np.max(np.abs(program.h), initial=0.0))
    if solution.residuals[0] > ACCEPTANCE_FACTOR * max(tolerance, 1e-6) * scale:
        logger.warning("Solver %s reported optimal with primal residual %.3g, treating as MAX_ITERATIONS",
                       solution.solver, solution.residuals[0])
        return ConeStatus.MAX_ITERATIONS
    return ConeStatus.OPTIMAL


# ========================================================================
# Debug dump
# ========================================================================

def dump_program(program: ConeProgram, path: Union[str, Path]) -> None:
    """Write a program as triplets plus a cone list for external cross-checks."""
    lines = ["# saginshare cone program", f"n {program.variable_count}",
             f"c0 {program.objective_offset!r}"]
    lines += [f"c {j} {c!r}" for j, c in enumerate(program.objective) if c != 0.0]
    for name, matrix, rhs, label in (("A", program.A, program.b, "b"),
                                      ("G", program.G, program.h, "h")):
        coo = matrix.tocoo()
        lines.append(f"{name}_shape {matrix.shape[0]} {matrix.shape[1]}")
        lines += [f"{name} {i} {j} {val!r}" for i, j, val in zip(coo.row, coo.col, coo.data)]
        lines += [f"{label} {i} {val!r}" for i, val in enumerate(rhs) if val != 0.0]
    lines += [f"K {block.kind.name} {block.start} {block.dim}" for block in program.cones]
    Path(path).write_text("\n".join(lines) + "\n")
