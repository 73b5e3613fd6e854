"""Problem containers for the embedded LP/MILP solver."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

RELATIONS = ("<=", "=", ">=")


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LinearProgram:
    """``sense`` c.x subject to A x (relations) b and lb <= x <= ub.

    ``A`` is kept in CSR form. ``ub`` entries may be ``inf``; ``lb`` entries may be ``-inf``.
    Arrays are copied and frozen at construction.
    """

    c: np.ndarray
    A: sparse.csr_matrix
    relations: tuple
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    sense: str = "min"
    names: tuple = ()

    def __post_init__(self):
        c = _frozen(self.c)
        n = c.size
        A = sparse.csr_matrix(self.A, dtype=float)
        if A.shape[0] == 0:
            A = sparse.csr_matrix((0, n))
        elif A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, c has {n} entries")
        A.data.flags.writeable = False
        b = _frozen(self.b)
        rel = tuple(self.relations)
        if len(rel) != A.shape[0] or b.size != A.shape[0]:
            raise ValueError("row count mismatch between A, relations and b")
        bad = [r for r in rel if r not in RELATIONS]
        if bad:
            raise ValueError(f"unknown relation(s) {sorted(set(bad))}")
        lb = _frozen(self.lb)
        ub = _frozen(self.ub)
        if lb.size != n or ub.size != n:
            raise ValueError("bound vectors must match the number of variables")
        if np.any(lb > ub):
            j = int(np.argmax(lb > ub))
            raise ValueError(f"lb > ub for variable {j}")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        names = tuple(self.names) if self.names else tuple(f"x{j}" for j in range(n))
        if len(names) != n:
            raise ValueError("names must match the number of variables")
        for k, v in dict(c=c, A=A, relations=rel, b=b, lb=lb, ub=ub, names=names).items():
            object.__setattr__(self, k, v)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def with_bounds(self, lb=None, ub=None) -> "LinearProgram":
        return LinearProgram(
            self.c, self.A, self.relations, self.b,
            self.lb if lb is None else lb, self.ub if ub is None else ub,
            self.sense, self.names,
        )

    def max_violation(self, x) -> float:
        """Largest constraint or bound violation of ``x`` (0 for feasible points)."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        worst = 0.0
        for i, rel in enumerate(self.relations):
            r = ax[i] - self.b[i]
            if rel == "<=":
                worst = max(worst, r)
            elif rel == ">=":
                worst = max(worst, -r)
            else:
                worst = max(worst, abs(r))
        if x.size:
            worst = max(worst, float(np.max(self.lb - x)), float(np.max(x - self.ub)))
        return worst


@dataclass(frozen=True)
class MilpProblem:
    lp: LinearProgram
    integer_vars: tuple

    def __post_init__(self):
        iv = tuple(sorted(int(j) for j in self.integer_vars))
        for j in iv:
            if not 0 <= j < self.lp.n_vars:
                raise ValueError(f"integer variable index {j} out of range")
            if self.lp.lb[j] < 0 or self.lp.ub[j] > 1:
                raise ValueError(f"integer variable {self.lp.names[j]} must have bounds within [0, 1]")
        object.__setattr__(self, "integer_vars", iv)


@dataclass
class Solution:
    status: Status
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    nodes: int = 0
    bound: float | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class LPBuilder:
    """Incremental construction of a :class:`LinearProgram` with named variables."""

    def __init__(self, sense="min"):
        self.sense = sense
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._rel: list[str] = []
        self._b: list[float] = []
        self.row_names: list[str] = []
        self.integer: list[int] = []

    def add_var(self, name, lb=0.0, ub=np.inf, cost=0.0, integer=False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        j = len(self._names)
        self._names.append(name)
        self._index[name] = j
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        if integer:
            self.integer.append(j)
        return j

    def var(self, name) -> int:
        return self._index[name]

    def add_cost(self, j, cost):
        self._c[j] += float(cost)

    def ub_of(self, j) -> float:
        return self._ub[j]

    def set_ub(self, j, ub):
        if ub < self._lb[j]:
            raise ValueError(f"upper bound below lower bound for {self._names[j]!r}")
        self._ub[j] = float(ub)

    def add_row(self, coefs, rel, rhs, name=""):
        """``coefs`` maps variable index to coefficient; duplicate indices are summed."""
        i = len(self._b)
        for j, v in (coefs.items() if isinstance(coefs, dict) else coefs):
            if v != 0.0:
                self._rows.append(i)
                self._cols.append(int(j))
                self._vals.append(float(v))
        self._rel.append(rel)
        self._b.append(float(rhs))
        self.row_names.append(name)
        return i

    @property
    def n_vars(self):
        return len(self._names)

    def build(self) -> LinearProgram:
        n = len(self._names)
        A = sparse.coo_matrix((self._vals, (self._rows, self._cols)), shape=(len(self._b), n)).tocsr()
        A.sum_duplicates()
        return LinearProgram(
            np.array(self._c), A, tuple(self._rel), np.array(self._b),
            np.array(self._lb), np.array(self._ub), self.sense, tuple(self._names),
        )

    def build_milp(self) -> MilpProblem:
        return MilpProblem(self.build(), tuple(self.integer))


def dump_lp(lp: LinearProgram, fh, integer_vars: Sequence[int] = (), row_names: Sequence[str] = ()):
    """Write ``lp`` in a plain line-oriented text format.

    Layout::

        SENSE min|max
        VARS <n>
        <name> <cost> <lb> <ub> [int]
        ROWS <m>
        <row-name> <rel> <rhs> <name>:<coef> ...
        END
    """
    ints = set(integer_vars)
    fh.write(f"SENSE {lp.sense}\nVARS {lp.n_vars}\n")
    for j, name in enumerate(lp.names):
        tag = " int" if j in ints else ""
        fh.write(f"{name} {float(lp.c[j])!r} {float(lp.lb[j])!r} {float(lp.ub[j])!r}{tag}\n")
    fh.write(f"ROWS {lp.n_rows}\n")
    A = lp.A
    for i in range(lp.n_rows):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        terms = " ".join(f"{lp.names[j]}:{float(v)!r}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        rname = row_names[i] if i < len(row_names) and row_names[i] else f"r{i}"
        fh.write(f"{rname} {lp.relations[i]} {float(lp.b[i])!r} {terms}\n")
    fh.write("END\n")
