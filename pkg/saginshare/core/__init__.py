from .program import LN2, ConeBlock, ConeProgram, ConeProgramBuilder, LinearExpr, as_expr
from .solver import ConeSolution, SolverSettings, dump_program, kkt_residuals, solve

__all__ = [
    'LN2',
    'ConeBlock',
    'ConeProgram',
    'ConeProgramBuilder',
    'LinearExpr',
    'as_expr',
    'ConeSolution',
    'SolverSettings',
    'dump_program',
    'kkt_residuals',
    'solve',
]
