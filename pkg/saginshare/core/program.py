"""Conic program representation: affine expressions, cone blocks and the builder."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..models.enums import ConeKind

Number = Union[int, float]
LN2 = math.log(2.0)


class LinearExpr:
    """Sparse affine expression sum_j c_j v_j + const over program variables."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Dict[int, float]] = None, const: float = 0.0):
        self.terms: Dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @classmethod
    def var(cls, index: int, coef: float = 1.0) -> 'LinearExpr':
        return cls({int(index): float(coef)})

    @classmethod
    def constant(cls, value: float) -> 'LinearExpr':
        return cls(const=value)

    @classmethod
    def dot(cls, indices: Iterable[int], coefs: Iterable[float], const: float = 0.0) -> 'LinearExpr':
        """Expression sum coefs[m] v[indices[m]] + const."""
        expr = cls(const=const)
        for index, coef in zip(indices, coefs):
            expr.add_term(int(index), float(coef))
        return expr

    def add_term(self, index: int, coef: float) -> 'LinearExpr':
        """Accumulate coef * v[index] in place."""
        if coef != 0.0:
            self.terms[index] = self.terms.get(index, 0.0) + coef
        return self

    def accumulate(self, other: Union['LinearExpr', Number], scale: float = 1.0) -> 'LinearExpr':
        """In-place self += scale * other."""
        if isinstance(other, LinearExpr):
            for index, coef in other.terms.items():
                self.terms[index] = self.terms.get(index, 0.0) + scale * coef
            self.const += scale * other.const
        else:
            self.const += scale * float(other)
        return self

    def copy(self) -> 'LinearExpr':
        return LinearExpr(self.terms, self.const)

    def __add__(self, other):
        return self.copy().accumulate(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().accumulate(other, -1.0)

    def __rsub__(self, other):
        return (-self).accumulate(other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar: Number):
        scalar = float(scalar)
        return LinearExpr({j: c * scalar for j, c in self.terms.items()}, self.const * scalar)

    __rmul__ = __mul__

    def evaluate(self, v: np.ndarray) -> float:
        """Value at a primal point."""
        return self.const + sum(c * v[j] for j, c in self.terms.items())

    def __repr__(self) -> str:
        return f"LinearExpr({len(self.terms)} terms, const={self.const:g})"


Affine = Union[LinearExpr, Number]


def as_expr(value: Affine) -> LinearExpr:
    return value if isinstance(value, LinearExpr) else LinearExpr.constant(float(value))


@dataclass(frozen=True)
class ConeBlock:
    """A contiguous slice of the cone map s = G v + h lying in one cone."""
    kind: ConeKind
    start: int
    dim: int

    @property
    def stop(self) -> int:
        return self.start + self.dim


@dataclass(eq=False)
class ConeProgram:
    """minimize q.v + q0  s.t.  A v = b,  G v + h in K_1 x ... x K_m.

    Rotated second-order blocks are stored already mapped to the standard
    second-order form (y + z, 2x, y - z), so every block except exponential
    ones is a nonnegative orthant or a Lorentz cone. Exponential blocks hold
    triples (x, y, z) with y exp(x / y) <= z.
    """
    variable_count: int
    objective: np.ndarray
    objective_offset: float
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    cones: List[ConeBlock] = field(default_factory=list)

    def validate(self) -> None:
        """Check dimensions and cone slices."""
        n = self.variable_count
        if self.objective.shape != (n,):
            raise ValueError("objective length does not match variable count")
        if self.A.shape[1] != n or self.G.shape[1] != n:
            raise ValueError("constraint matrices have wrong column count")
        if self.A.shape[0] != self.b.shape[0] or self.G.shape[0] != self.h.shape[0]:
            raise ValueError("constraint right-hand sides have wrong length")
        cursor = 0
        for block in self.cones:
            if block.start != cursor or block.dim < 1:
                raise ValueError(f"cone block {block} is not contiguous")
            if block.kind is ConeKind.EXPONENTIAL and block.dim != 3:
                raise ValueError("exponential cones must be triples")
            cursor = block.stop
        if cursor != self.G.shape[0]:
            raise ValueError("cone blocks do not cover the cone map")

    def blocks_of(self, kind: ConeKind) -> List[ConeBlock]:
        return [c for c in self.cones if c.kind is kind]


class ConeProgramBuilder:
    """Incrementally assembles a ConeProgram from named variable blocks."""

    def __init__(self):
        self.variable_count = 0
        self.blocks: Dict[str, np.ndarray] = {}
        self.objective = LinearExpr()
        self._equalities: List[LinearExpr] = []
        self._rows: List[LinearExpr] = []
        self._cones: List[ConeBlock] = []

    # ====================================================================
    # Variables and objective
    # ====================================================================

    def add_variables(self, name: str, shape: Union[int, Tuple[int, ...]]) -> np.ndarray:
        """Allocate a block of variables and return its index array."""
        if name in self.blocks:
            raise ValueError(f"variable block {name!r} already exists")
        size = int(np.prod(shape))
        index = np.arange(self.variable_count, self.variable_count + size).reshape(shape)
        self.variable_count += size
        self.blocks[name] = index
        return index

    def minimize(self, expr: Affine) -> None:
        """Add an expression to the minimized objective."""
        self.objective.accumulate(as_expr(expr))

    def maximize(self, expr: Affine) -> None:
        self.objective.accumulate(as_expr(expr), -1.0)

    # ====================================================================
    # Constraints
    # ====================================================================

    def add_equality(self, expr: Affine) -> None:
        """expr == 0."""
        self._equalities.append(as_expr(expr))

    def _push(self, kind: ConeKind, rows: Sequence[LinearExpr]) -> None:
        self._cones.append(ConeBlock(kind, len(self._rows), len(rows)))
        self._rows.extend(rows)

    def add_nonneg(self, expr: Affine) -> None:
        """expr >= 0."""
        self._push(ConeKind.NONNEGATIVE, [as_expr(expr)])

    def add_le(self, lhs: Affine, rhs: Affine) -> None:
        """lhs <= rhs."""
        self.add_nonneg(as_expr(rhs) - as_expr(lhs))

    def add_soc(self, t: Affine, xs: Sequence[Affine]) -> None:
        """||xs||_2 <= t."""
        if not xs:
            self.add_nonneg(t)
            return
        self._push(ConeKind.SECOND_ORDER, [as_expr(t)] + [as_expr(x) for x in xs])

    def add_rsoc(self, xs: Sequence[Affine], y: Affine, z: Affine) -> None:
        """||xs||^2 <= y z with y, z >= 0."""
        y, z = as_expr(y), as_expr(z)
        rows = [y + z] + [as_expr(x) * 2.0 for x in xs] + [y - z]
        self._push(ConeKind.ROTATED_SECOND_ORDER, rows)

    def add_exp(self, x: Affine, y: Affine, z: Affine) -> None:
        """y exp(x / y) <= z."""
        self._push(ConeKind.EXPONENTIAL, [as_expr(x), as_expr(y), as_expr(z)])

    def add_log2_hypograph(self, u: Affine, argument: Affine) -> None:
        """u <= log2(argument)."""
        self.add_exp(as_expr(u) * LN2, 1.0, argument)

    # ====================================================================
    # Compilation
    # ====================================================================

    def build(self) -> ConeProgram:
        """Compile the collected rows into sparse matrices."""
        n = self.variable_count
        q = np.zeros(n)
        for j, c in self.objective.terms.items():
            q[j] += c
        A, b = _stack(self._equalities, n, negate_const=True)
        G, h = _stack(self._rows, n, negate_const=False)
        program = ConeProgram(
            variable_count=n,
            objective=q,
            objective_offset=self.objective.const,
            A=A, b=b, G=G, h=h,
            cones=list(self._cones),
        )
        program.validate()
        return program


def _stack(rows: Sequence[LinearExpr], n: int, negate_const: bool) -> Tuple[sp.csr_matrix, np.ndarray]:
    """Rows as (M, c): M v + c for cones, or M v = -c for equalities."""
    indices, columns, values = [], [], []
    consts = np.zeros(len(rows))
    for r, row in enumerate(rows):
        for j, c in row.terms.items():
            indices.append(r)
            columns.append(j)
            values.append(c)
        consts[r] = row.const
    matrix = sp.csr_matrix((values, (indices, columns)), shape=(len(rows), n))
    return matrix, (-consts if negate_const else consts)
