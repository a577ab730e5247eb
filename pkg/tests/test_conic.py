"""Tests for the conic program builder and the solver bridge."""

import logging
import math
from dataclasses import replace

import cvxpy as cp
import numpy as np
import pytest

from saginshare.core.program import ConeBlock, ConeProgramBuilder, LinearExpr
from saginshare.core import solver as solver_module
from saginshare.core.solver import (SOLVER_PREFERENCE, ConeSolution, SolverSettings, checked_status,
                                    dump_program, kkt_residuals, solve)
from saginshare.models.enums import ConeKind, ConeStatus
from saginshare.ui.oracles import lp_agreement, random_bounded_lp, vertex_enumeration_lp


def test_linear_expr_arithmetic():
    a = LinearExpr.var(0, 2.0) + 1.0
    b = LinearExpr.dot([0, 1], [1.0, -1.0])
    combined = 3.0 * a - b
    assert combined.terms == {0: 5.0, 1: 1.0}
    assert combined.const == 3.0
    assert combined.evaluate(np.array([1.0, 2.0])) == pytest.approx(10.0)


def test_one_dimensional_lp():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 1)
    builder.add_le(3.0, LinearExpr.var(v[0]))
    builder.minimize(LinearExpr.var(v[0]))
    solution = solve(builder.build())
    assert solution.status is ConeStatus.OPTIMAL
    assert solution.primal[v[0]] == pytest.approx(3.0, abs=1e-6)
    assert solution.objective_value == pytest.approx(3.0, abs=1e-6)
    assert max(solution.residuals) <= 1e-6


def test_second_order_projection():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 2)
    t = builder.add_variables("t", 1)
    builder.add_soc(LinearExpr.var(t[0]), [LinearExpr.var(v[0]) - 3.0, LinearExpr.var(v[1]) - 4.0])
    builder.minimize(LinearExpr.var(t[0]))
    solution = solve(builder.build())
    assert solution.objective_value == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(solution.primal[v], [3.0, 4.0], atol=1e-5)


def test_exponential_cone_log():
    builder = ConeProgramBuilder()
    u = builder.add_variables("u", 1)
    v = builder.add_variables("v", 1)
    builder.add_exp(LinearExpr.var(u[0]), 1.0, LinearExpr.var(v[0]))
    builder.add_le(LinearExpr.var(v[0]), math.e)
    builder.maximize(LinearExpr.var(u[0]))
    solution = solve(builder.build())
    assert solution.primal[u[0]] == pytest.approx(1.0, abs=1e-6)
    assert solution.primal[v[0]] == pytest.approx(math.e, abs=1e-5)
    assert max(solution.residuals) <= 1e-6


def test_log2_hypograph_and_rotated_cone():
    builder = ConeProgramBuilder()
    u = builder.add_variables("u", 1)
    x = builder.add_variables("x", 1)
    builder.add_log2_hypograph(LinearExpr.var(u[0]), LinearExpr.var(x[0]))
    builder.add_rsoc([LinearExpr.var(x[0])], 4.0, 1.0)
    builder.maximize(LinearExpr.var(u[0]))
    solution = solve(builder.build())
    assert solution.primal[x[0]] == pytest.approx(2.0, abs=1e-5)
    assert solution.primal[u[0]] == pytest.approx(1.0, abs=1e-5)


def test_infeasible_status():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 1)
    builder.add_le(LinearExpr.var(v[0]), -1.0)
    builder.add_nonneg(LinearExpr.var(v[0]))
    builder.minimize(LinearExpr.var(v[0]))
    solution = solve(builder.build(), SolverSettings(tolerance=1e-8))
    assert solution.status is ConeStatus.INFEASIBLE
    assert not solution.is_optimal


def test_perturbed_primal_residual():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 1)
    builder.add_le(3.0, LinearExpr.var(v[0]))
    builder.minimize(LinearExpr.var(v[0]))
    program = builder.build()
    solution = solve(program)
    moved = replace(solution, primal=solution.primal - 1.0)
    primal, _, _ = kkt_residuals(program, moved)
    assert primal >= 1.0 - 1e-6


def test_zero_program_residuals():
    builder = ConeProgramBuilder()
    builder.add_variables("v", 1)
    program = builder.build()
    solution = ConeSolution(ConeStatus.OPTIMAL, np.zeros(1), np.zeros(0), 0.0, (0.0, 0.0, 0.0))
    assert kkt_residuals(program, solution) == (0.0, 0.0, 0.0)


def test_malformed_program_rejected():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 1)
    builder.add_nonneg(LinearExpr.var(v[0]))
    program = builder.build()
    program.cones = [ConeBlock(ConeKind.NONNEGATIVE, 1, 1)]
    with pytest.raises(ValueError):
        program.validate()
    with pytest.raises(ValueError):
        builder.add_variables("v", 2)


def test_vertex_enumeration_oracle():
    c = np.array([1.0, 1.0])
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([1.0, 2.0, 0.0, 0.0])
    value, argmax = vertex_enumeration_lp(c, A, b)
    assert value == pytest.approx(3.0)
    np.testing.assert_allclose(argmax, [1.0, 2.0])


def test_random_lps_agree_with_enumeration():
    c, A, b = random_bounded_lp(np.random.default_rng(0))
    assert A.shape == (10, 3)
    assert lp_agreement(count=50, seed=0)["max_abs_difference"] <= 1e-5


def test_dump_program(tmp_path):
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 2)
    builder.add_soc(1.0, [LinearExpr.var(v[0]), LinearExpr.var(v[1])])
    builder.minimize(LinearExpr.var(v[0]))
    path = tmp_path / "program.txt"
    dump_program(builder.build(), path)
    lines = path.read_text().splitlines()
    assert lines[1] == "n 2"
    assert "K SECOND_ORDER 0 3" in lines


def lower_bound_program():
    builder = ConeProgramBuilder()
    v = builder.add_variables("v", 1)
    builder.add_le(3.0, LinearExpr.var(v[0]))
    builder.minimize(LinearExpr.var(v[0]))
    return builder.build(), v


def test_crashed_solver_falls_back(monkeypatch, caplog):
    installed = [name for name in SOLVER_PREFERENCE if name in cp.installed_solvers()]
    if len(installed) < 2:
        pytest.skip("needs two conic solvers")
    original = cp.Problem.solve

    def crash_first(problem, *args, **kwargs):
        if kwargs.get("solver") == installed[0]:
            raise cp.error.SolverError("Solver crashed. Try another solver")
        return original(problem, *args, **kwargs)

    monkeypatch.setattr(cp.Problem, "solve", crash_first)
    program, v = lower_bound_program()
    with caplog.at_level(logging.WARNING, logger=solver_module.__name__):
        solution = solve(program, SolverSettings(solver=installed[0]))
    assert solution.is_optimal
    assert solution.solver == installed[1]
    assert solution.primal[v[0]] == pytest.approx(3.0, abs=1e-5)
    assert "falling back" in caplog.text


def test_every_solver_crashing_is_not_optimal(monkeypatch):
    def crash(problem, *args, **kwargs):
        raise cp.error.SolverError("Solver crashed")

    monkeypatch.setattr(cp.Problem, "solve", crash)
    program, _ = lower_bound_program()
    solution = solve(program)
    assert solution.status is ConeStatus.MAX_ITERATIONS
    assert np.all(np.isnan(solution.primal))


def test_inaccurate_status_is_not_optimal():
    assert solver_module._map_status(cp.OPTIMAL_INACCURATE) is ConeStatus.MAX_ITERATIONS
    assert solver_module._map_status(cp.OPTIMAL) is ConeStatus.OPTIMAL


def test_optimal_with_large_residual_is_downgraded():
    program, v = lower_bound_program()
    solution = solve(program)
    assert checked_status(program, solution, 1e-6) is ConeStatus.OPTIMAL
    # 3 - 30 violates the bound by 27, far outside any tolerance
    moved = replace(solution, primal=solution.primal - 30.0)
    moved.residuals = kkt_residuals(program, moved)
    assert checked_status(program, moved, 1e-6) is ConeStatus.MAX_ITERATIONS
