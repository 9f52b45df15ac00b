"""Small linear-program model and a simplex-backed solver.

Programs are stated as ``minimize c @ x`` subject to rows
``A[i] @ x (<=, =, >=) rhs[i]`` and per-variable bounds.  The solver always
returns a basic (vertex) optimum because it runs the HiGHS dual simplex with
presolve disabled; downstream code relies on that for sparse convex weights.

:class:`LpSession` keeps one program loaded and lets callers change row
right-hand sides between solves, which warm-starts from the previous basis.
The dynamic-programming step solves one program per grid direction and only
the right-hand side depends on the direction, so this is the hot path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import highspy
import numpy as np
from scipy import sparse

INF = highspy.kHighsInf
FEAS_TOL = 1e-9
OPT_TOL = 1e-9

LE, EQ, GE = "<=", "=", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    """Raised when a program that must be solvable is not."""


@dataclass(frozen=True)
class LinearProgram:
    """``minimize c @ x`` over rows ``A @ x  senses  rhs`` and bounds."""

    c: np.ndarray
    A: np.ndarray | sparse.spmatrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        A = self.A if sparse.issparse(self.A) else np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] == 0:
            A = np.zeros((0, c.size))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "senses", tuple(self.senses))
        if A.shape[1] != c.size:
            raise ValueError(f"row length {A.shape[1]} != variable count {c.size}")
        if not (A.shape[0] == len(self.senses) == self.rhs.size):
            raise ValueError("constraint rows, senses and rhs disagree in length")
        bad = set(self.senses) - {LE, EQ, GE}
        if bad:
            raise ValueError(f"unknown relation(s) {sorted(bad)}")
        lo = np.zeros(c.size) if self.lower is None else np.asarray(self.lower, dtype=float)
        hi = np.full(c.size, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if lo.shape != c.shape or hi.shape != c.shape:
            raise ValueError("bounds must have one entry per variable")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def variable_count(self) -> int:
        return self.c.size

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        senses = np.array(self.senses, dtype=object)
        lo = np.where(senses == LE, -np.inf, self.rhs)
        hi = np.where(senses == GE, np.inf, self.rhs)
        return lo.astype(float), hi.astype(float)


@dataclass
class LpSolution:
    status: str
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basic: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    """Indices of structural variables that are basic in the final basis."""

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _finite(a):
    a = np.asarray(a, dtype=float).copy()
    a[np.isposinf(a)] = INF
    a[np.isneginf(a)] = -INF
    return a


class LpSession:
    """A loaded program whose row bounds can be changed between solves."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("presolve", "off")
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", 0)
        h.setOptionValue("primal_feasibility_tolerance", FEAS_TOL)
        h.setOptionValue("dual_feasibility_tolerance", OPT_TOL)

        A = sparse.csc_matrix(lp.A)
        model = highspy.HighsLp()
        model.num_col_ = lp.variable_count
        model.num_row_ = A.shape[0]
        model.col_cost_ = lp.c
        model.col_lower_ = _finite(lp.lower)
        model.col_upper_ = _finite(lp.upper)
        row_lo, row_hi = lp.row_bounds()
        model.row_lower_ = _finite(row_lo)
        model.row_upper_ = _finite(row_hi)
        model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        model.a_matrix_.start_ = A.indptr.astype(np.int32)
        model.a_matrix_.index_ = A.indices.astype(np.int32)
        model.a_matrix_.value_ = A.data
        h.passModel(model)
        self._h = h
        self._row_lo = row_lo
        self._row_hi = row_hi
        self._senses = np.array(lp.senses, dtype=object)

    def set_rhs(self, rows, values) -> None:
        """Move the right-hand side of ``rows``, keeping each row's relation."""
        rows = np.asarray(rows, dtype=np.int32).reshape(-1)
        values = np.asarray(values, dtype=float).reshape(-1)
        s = self._senses[rows]
        lo = np.where(s == LE, -np.inf, values)
        hi = np.where(s == GE, np.inf, values)
        self._row_lo[rows] = lo
        self._row_hi[rows] = hi
        self._h.changeRowsBounds(rows.size, rows, _finite(lo), _finite(hi))

    def solve(self, basis: bool = True) -> LpSolution:
        """Run the simplex from the current basis.

        ``basis=False`` skips reading back the basis, which is slow for wide
        programs and unused on the dynamic-programming hot path.
        """
        h = self._h
        h.run()
        status = h.getModelStatus()
        if status not in _FINAL:
            # A warm start occasionally stalls; retry from a fresh basis.
            h.clearSolver()
            h.run()
            status = h.getModelStatus()
        if status == highspy.HighsModelStatus.kOptimal:
            sol = h.getSolution()
            x = np.array(sol.col_value)
            basic = np.zeros(0, dtype=int)
            if basis:
                status_codes = np.fromiter((int(s) for s in h.getBasis().col_status), dtype=int)
                basic = np.flatnonzero(status_codes == int(highspy.HighsBasisStatus.kBasic))
            return LpSolution(OPTIMAL, float(h.getInfo().objective_function_value), x, basic)
        if status == highspy.HighsModelStatus.kInfeasible:
            return LpSolution(INFEASIBLE)
        if status in (highspy.HighsModelStatus.kUnbounded,
                      highspy.HighsModelStatus.kUnboundedOrInfeasible):
            # Disambiguate with a zero-cost feasibility solve.
            probe = LpSession(LinearProgram(np.zeros_like(self.lp.c), self.lp.A, self.lp.senses,
                                            _rhs_from_bounds(self._senses, self._row_lo, self._row_hi),
                                            self.lp.lower, self.lp.upper))
            probe._h.run()
            if probe._h.getModelStatus() == highspy.HighsModelStatus.kOptimal:
                return LpSolution(UNBOUNDED)
            return LpSolution(INFEASIBLE)
        raise LpError(f"simplex stopped with status {h.modelStatusToString(status)}")


_FINAL = (
    highspy.HighsModelStatus.kOptimal,
    highspy.HighsModelStatus.kInfeasible,
    highspy.HighsModelStatus.kUnbounded,
    highspy.HighsModelStatus.kUnboundedOrInfeasible,
)


def _rhs_from_bounds(senses, lo, hi):
    return np.where(senses == GE, lo, hi)


def solve_min(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` once and return a basic optimal solution or a status."""
    return LpSession(lp).solve()
