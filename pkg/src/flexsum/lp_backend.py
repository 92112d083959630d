"""Block-structured linear programs over named variable groups.

Every optimization in the package is expressed through this one interface so
the underlying solver stays swappable. A :class:`LinearProgram` holds scalar,
vector, or matrix variable blocks; constraint rows act on the row-major
flattening of each block. Strict inequalities and absolute values never reach
the solver -- callers are responsible for closing them with an explicit margin
or auxiliary variables.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import DomainError

DEFAULT_TOL = 1e-8
TOL_ENV_VAR = "FLEXSUM_LP_TOL"

# scipy/HiGHS status codes -> interface statuses
_STATUS = {0: "optimal", 1: "numerical_failure", 2: "infeasible",
           3: "unbounded", 4: "numerical_failure"}


def default_tolerance() -> float:
    """Feasibility/optimality tolerance; the FLEXSUM_LP_TOL env var overrides."""
    raw = os.environ.get(TOL_ENV_VAR)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise DomainError(f"{TOL_ENV_VAR} must be a positive float, got {raw!r}") from exc
    if tol <= 0:
        raise DomainError(f"{TOL_ENV_VAR} must be positive, got {tol}")
    return tol


@dataclass(frozen=True)
class _Block:
    name: str
    shape: tuple
    offset: int
    lower: float
    upper: float

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1


@dataclass(frozen=True)
class LpSolution:
    """Outcome of one solve.

    ``values`` maps block names to arrays in the block's original shape and is
    present exactly when ``status == "optimal"``.
    """

    status: str
    objective_value: float | None
    values: dict | None

    def value(self, name: str) -> np.ndarray:
        if self.values is None:
            raise DomainError(f"no values available (status={self.status})")
        return self.values[name]

    def scalar(self, name: str) -> float:
        return float(np.asarray(self.value(name)).reshape(()))


class LinearProgram:
    """A linear program assembled from named variable blocks.

    Constraint coefficients are matrices whose columns index the row-major
    flattening of the referenced block. Inequalities are of the ``<=`` kind;
    equality rows are kept separately.
    """

    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise DomainError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self._blocks: dict[str, _Block] = {}
        self._ncols = 0
        self._objective: dict[str, np.ndarray] = {}
        self._eq: list[tuple[dict, np.ndarray]] = []
        self._ineq: list[tuple[dict, np.ndarray]] = []

    # -- construction -----------------------------------------------------

    def add_block(self, name: str, shape=(), lower=-np.inf, upper=np.inf) -> str:
        """Declare a variable block and return its name."""
        if name in self._blocks:
            raise DomainError(f"block {name!r} already declared")
        if isinstance(shape, int):
            shape = (shape,)
        shape = tuple(int(s) for s in shape)
        if any(s <= 0 for s in shape):
            raise DomainError(f"block {name!r} has empty shape {shape}")
        block = _Block(name, shape, self._ncols, float(lower), float(upper))
        self._blocks[name] = block
        self._ncols += block.size
        return name

    def set_objective(self, **coefficients) -> None:
        """Set per-entry objective coefficients, one array per block."""
        for name, coeff in coefficients.items():
            block = self._block(name)
            arr = np.asarray(coeff, dtype=float).reshape(-1)
            if arr.size != block.size:
                raise DomainError(
                    f"objective for {name!r} has {arr.size} entries, block has {block.size}")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"objective for {name!r} must be finite")
            self._objective[name] = arr

    def add_eq(self, terms: dict, rhs) -> None:
        """Add rows sum_b A_b vec(b) == rhs."""
        self._eq.append(self._prepare(terms, rhs))

    def add_ineq(self, terms: dict, rhs) -> None:
        """Add rows sum_b A_b vec(b) <= rhs."""
        self._ineq.append(self._prepare(terms, rhs))

    # -- assembly ----------------------------------------------------------

    @property
    def num_columns(self) -> int:
        return self._ncols

    def _block(self, name: str) -> _Block:
        try:
            return self._blocks[name]
        except KeyError:
            raise DomainError(f"constraint references undeclared block {name!r}") from None

    def _prepare(self, terms: dict, rhs) -> tuple[dict, np.ndarray]:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if rhs.ndim != 1:
            raise DomainError("constraint rhs must be a vector")
        if not np.all(np.isfinite(rhs)):
            raise DomainError("constraint rhs must be finite")
        if not terms:
            raise DomainError("constraint must reference at least one block")
        prepared = {}
        for name, mat in terms.items():
            block = self._block(name)
            if not sp.issparse(mat):
                mat = np.asarray(mat, dtype=float)
                if mat.ndim == 1:
                    mat = mat.reshape(1, -1)
                mat = sp.csr_matrix(mat)
            else:
                mat = mat.tocsr()
            if mat.shape != (rhs.size, block.size):
                raise DomainError(
                    f"term for {name!r} has shape {mat.shape}, expected {(rhs.size, block.size)}")
            prepared[name] = mat
        return prepared, rhs

    def _assemble(self, store):
        if not store:
            return None, None
        data, rows, cols = [], [], []
        rhs_parts = []
        row_offset = 0
        for terms, rhs in store:
            for name, mat in terms.items():
                coo = mat.tocoo()
                data.append(coo.data)
                rows.append(coo.row + row_offset)
                cols.append(coo.col + self._blocks[name].offset)
            rhs_parts.append(rhs)
            row_offset += rhs.size
        matrix = sp.csc_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(row_offset, self._ncols))
        return matrix, np.concatenate(rhs_parts)

    def _bounds(self) -> np.ndarray:
        bounds = np.empty((self._ncols, 2))
        for block in self._blocks.values():
            bounds[block.offset:block.offset + block.size, 0] = block.lower
            bounds[block.offset:block.offset + block.size, 1] = block.upper
        return bounds

    def _cost(self) -> np.ndarray:
        c = np.zeros(self._ncols)
        for name, coeff in self._objective.items():
            block = self._blocks[name]
            c[block.offset:block.offset + block.size] = coeff
        return c


def solve_lp(lp: LinearProgram, tol: float | None = None, method: str = "highs") -> LpSolution:
    """Solve a :class:`LinearProgram` and return an :class:`LpSolution`.

    ``tol`` is the primal/dual feasibility tolerance (default from
    :func:`default_tolerance`). ``method`` selects the HiGHS algorithm:
    ``"highs"`` (automatic/dual simplex), ``"highs-ds"``, or ``"highs-ipm"``.
    A given program solves deterministically: repeated calls return the same
    status and objective.
    """
    if tol is None:
        tol = default_tolerance()
    tol = float(tol)
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    a_ub, b_ub = lp._assemble(lp._ineq)
    a_eq, b_eq = lp._assemble(lp._eq)
    sign = -1.0 if lp.sense == "max" else 1.0
    # HiGHS rejects tolerances below 1e-10
    opt_tol = max(tol, 1e-10)
    options = {
        "presolve": True,
        "primal_feasibility_tolerance": opt_tol,
        "dual_feasibility_tolerance": opt_tol,
        "ipm_optimality_tolerance": opt_tol,
    }
    result = linprog(sign * lp._cost(), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                     bounds=lp._bounds(), method=method, options=options)
    status = _STATUS.get(result.status, "numerical_failure")
    if status != "optimal":
        return LpSolution(status=status, objective_value=None, values=None)
    values = {}
    for block in lp._blocks.values():
        chunk = result.x[block.offset:block.offset + block.size]
        values[block.name] = chunk.reshape(block.shape) if block.shape else float(chunk[0])
    return LpSolution(status="optimal", objective_value=sign * float(result.fun), values=values)
