"""Halfspace sets, generalized battery models, and volume metrics.

A charging profile ``u`` over ``T`` periods of length ``delta`` hours induces
the net-energy profile ``x = L u`` through the cumulative-sum matrix ``L``.
A generalized battery model bounds both ``u`` and ``L u`` elementwise, which
stacks into the halfspace system ``H u <= h`` with
``H = (L; -L; I; -I)`` and ``h = (x_hi; -x_lo; u_hi; -u_lo)``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, SolverFailure
from .lp_backend import LinearProgram, solve_lp

#: pivot threshold factor for declaring a matrix singular in log_abs_det
SINGULAR_PIVOT_RTOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class HPolytope:
    """The set {x : A x <= b}."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.ndim != 2 or b.ndim != 1:
            raise DomainError("A must be a matrix and b a vector")
        if A.shape[0] != b.shape[0]:
            raise DomainError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DomainError("A and b must be finite")
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "HPolytope":
        return cls(A=np.asarray(data["A"], dtype=float), b=np.asarray(data["b"], dtype=float))


@dataclass(frozen=True)
class BatteryModel:
    """Per-resource power and net-energy limits over a horizon of T periods.

    ``u_lo``/``u_hi`` bound the power profile (kW) and ``x_lo``/``x_hi`` bound
    the cumulative net energy (kWh); ``delta`` is the period length in hours.
    """

    u_lo: np.ndarray
    u_hi: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    delta: float

    def __post_init__(self):
        vecs = {}
        for name in ("u_lo", "u_hi", "x_lo", "x_hi"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise DomainError(f"{name} must be a finite vector")
            vecs[name] = v
        lengths = {v.shape[0] for v in vecs.values()}
        if len(lengths) != 1:
            raise DomainError("u_lo, u_hi, x_lo, x_hi must share one length")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if np.any(vecs["u_lo"] > vecs["u_hi"]):
            raise DomainError("u_lo must not exceed u_hi")
        if np.any(vecs["x_lo"] > vecs["x_hi"]):
            raise DomainError("x_lo must not exceed x_hi")
        for name, v in vecs.items():
            object.__setattr__(self, name, _freeze(v))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def T(self) -> int:
        return self.u_lo.shape[0]

    def to_dict(self) -> dict:
        return {"u_lo": self.u_lo.tolist(), "u_hi": self.u_hi.tolist(),
                "x_lo": self.x_lo.tolist(), "x_hi": self.x_hi.tolist(),
                "delta": self.delta}

    @classmethod
    def from_dict(cls, data: dict) -> "BatteryModel":
        return cls(u_lo=np.asarray(data["u_lo"], dtype=float),
                   u_hi=np.asarray(data["u_hi"], dtype=float),
                   x_lo=np.asarray(data["x_lo"], dtype=float),
                   x_hi=np.asarray(data["x_hi"], dtype=float),
                   delta=float(data["delta"]))


@dataclass(frozen=True)
class AHPolytope:
    """Affine image ``center + map @ base`` of an H-polytope."""

    center: np.ndarray
    map: np.ndarray
    base: HPolytope

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        mat = np.atleast_2d(np.asarray(self.map, dtype=float))
        if mat.shape[1] != self.base.dim:
            raise DomainError(
                f"map has {mat.shape[1]} columns, base lives in R^{self.base.dim}")
        if center.shape[0] != mat.shape[0]:
            raise DomainError("center length must match the map's row count")
        object.__setattr__(self, "center", _freeze(center))
        object.__setattr__(self, "map", _freeze(mat))


@dataclass(frozen=True)
class BaseSet:
    """Battery-structured H-polytope whose rhs averages a population's limits."""

    polytope: HPolytope
    h0: np.ndarray

    def __post_init__(self):
        h0 = np.atleast_1d(np.asarray(self.h0, dtype=float))
        if h0.shape[0] != self.polytope.num_rows:
            raise DomainError("h0 length must match the polytope row count")
        if not np.allclose(h0, self.polytope.b, rtol=0, atol=0):
            raise DomainError("h0 must equal the polytope rhs")
        object.__setattr__(self, "h0", _freeze(h0))

    @property
    def T(self) -> int:
        return self.polytope.dim

    @property
    def delta(self) -> float:
        # the H stack puts L first, whose top-left entry is the period length
        return float(self.polytope.A[0, 0])

    def to_dict(self) -> dict:
        return {"h0": self.h0.tolist(), "T": self.T, "delta": self.delta}

    @classmethod
    def from_dict(cls, data: dict) -> "BaseSet":
        return from_h0(np.asarray(data["h0"], dtype=float), int(data["T"]), float(data["delta"]))


def build_cumulative_matrix(T: int, delta: float) -> np.ndarray:
    """Lower-triangular T x T matrix with every entry on/below the diagonal = delta."""
    if T < 1:
        raise DomainError(f"T must be at least 1, got {T}")
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return np.tril(np.full((T, T), float(delta)))


def battery_constraint_matrix(T: int, delta: float) -> np.ndarray:
    """The 4T x T stack (L; -L; I; -I) shared by every battery model."""
    L = build_cumulative_matrix(T, delta)
    eye = np.eye(T)
    return np.vstack([L, -L, eye, -eye])


def battery_rhs(model: BatteryModel) -> np.ndarray:
    """Right-hand side (x_hi; -x_lo; u_hi; -u_lo) matching battery_constraint_matrix."""
    return np.concatenate([model.x_hi, -model.x_lo, model.u_hi, -model.u_lo])


def battery_to_hpolytope(model: BatteryModel) -> HPolytope:
    """Halfspace representation of a battery model's admissible power profiles."""
    return HPolytope(A=battery_constraint_matrix(model.T, model.delta), b=battery_rhs(model))


def from_h0(h0: np.ndarray, T: int, delta: float) -> BaseSet:
    """Base set with the shared battery constraint matrix and the given rhs."""
    h0 = np.asarray(h0, dtype=float)
    if h0.shape != (4 * T,):
        raise DomainError(f"h0 must have length 4T={4 * T}, got {h0.shape}")
    return BaseSet(polytope=HPolytope(A=battery_constraint_matrix(T, delta), b=h0), h0=h0)


def build_base_set(models: list[BatteryModel]) -> BaseSet:
    """Average the member rhs vectors into a base set over the shared H matrix."""
    if not models:
        raise DomainError("need at least one battery model")
    T, delta = models[0].T, models[0].delta
    for i, m in enumerate(models):
        if m.T != T or m.delta != delta:
            raise DomainError(
                f"model {i} has (T={m.T}, delta={m.delta}), expected (T={T}, delta={delta})")
    h0 = np.mean([battery_rhs(m) for m in models], axis=0)
    return from_h0(h0, T, delta)


def contains_point(p: HPolytope, x: np.ndarray, tol: float = 1e-9) -> bool:
    """Row-relative membership check: A x <= b + tol * (1 + |b|)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.dim,):
        raise DomainError(f"point has shape {x.shape}, expected ({p.dim},)")
    slack = tol * (1.0 + np.abs(p.b))
    return bool(np.all(p.A @ x <= p.b + slack))


def membership_violation(p: HPolytope, x: np.ndarray) -> float:
    """Largest row-relative constraint violation of x, negative when interior."""
    x = np.asarray(x, dtype=float)
    return float(np.max((p.A @ x - p.b) / (1.0 + np.abs(p.b))))


def support_point(p: HPolytope, direction: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Maximizer of ``direction . x`` over the polytope, found by LP."""
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (p.dim,):
        raise DomainError(f"direction has shape {direction.shape}, expected ({p.dim},)")
    lp = LinearProgram("max")
    lp.add_block("x", (p.dim,))
    lp.add_ineq({"x": p.A}, p.b)
    lp.set_objective(x=direction)
    sol = solve_lp(lp, tol=tol)
    if sol.status == "unbounded":
        raise DomainError("polytope is unbounded in the requested direction")
    if sol.status == "infeasible":
        raise DomainError("polytope is empty")
    if sol.status != "optimal":
        raise SolverFailure(f"support LP failed with status {sol.status}")
    return sol.value("x")


def chebyshev_center(p: HPolytope, tol: float | None = None) -> tuple[np.ndarray, float]:
    """Center and radius of a largest inscribed ball.

    The radius is zero for flat (lower-dimensional) sets. Raises
    :class:`DomainError` when the polytope is empty.
    """
    norms = np.linalg.norm(p.A, axis=1)
    lp = LinearProgram("max")
    lp.add_block("x", (p.dim,))
    lp.add_block("r", ())
    lp.add_ineq({"x": p.A, "r": norms.reshape(-1, 1)}, p.b)
    lp.set_objective(r=1.0)
    sol = solve_lp(lp, tol=tol)
    if sol.status == "unbounded":
        raise DomainError("polytope has an unbounded inscribed ball")
    if sol.status != "optimal":
        raise SolverFailure(f"chebyshev LP failed with status {sol.status}")
    radius = sol.scalar("r")
    if radius < -1e-9:
        raise DomainError("polytope is empty")
    return sol.value("x"), max(radius, 0.0)


def chebyshev_radius(p: HPolytope, tol: float | None = None) -> float:
    """Radius of a largest inscribed ball; positive iff full-dimensional."""
    return chebyshev_center(p, tol=tol)[1]


def log_abs_det(M: np.ndarray) -> tuple[int, float]:
    """Sign and log-magnitude of det(M) via LU with partial pivoting.

    Returns sign 0 (and -inf) when a pivot falls below
    ``SINGULAR_PIVOT_RTOL * max|M|``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DomainError(f"matrix must be square, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix must be finite")
    n = M.shape[0]
    if n == 0:
        return 1, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    pivot_tol = SINGULAR_PIVOT_RTOL * np.max(np.abs(M))
    if np.min(np.abs(diag)) <= pivot_tol:
        return 0, float("-inf")
    swaps = int(np.sum(piv != np.arange(n)))
    sign = (-1) ** swaps * int(np.prod(np.sign(diag)))
    return int(sign), float(np.sum(np.log(np.abs(diag))))


def volume_ratio(inner_map: np.ndarray, outer_map: np.ndarray) -> float:
    """|det(inner_map)| / |det(outer_map)|, computed in log space.

    Volumes of affine images of one common base set differ exactly by this
    determinant ratio, which keeps the metric tractable in high dimension.
    """
    inner_map = np.atleast_2d(np.asarray(inner_map, dtype=float))
    outer_map = np.atleast_2d(np.asarray(outer_map, dtype=float))
    if inner_map.shape != outer_map.shape:
        raise DomainError(
            f"map shapes differ: {inner_map.shape} vs {outer_map.shape}")
    sign_out, log_out = log_abs_det(outer_map)
    if sign_out == 0:
        raise DomainError("outer map is singular")
    sign_in, log_in = log_abs_det(inner_map)
    if sign_in == 0:
        return 0.0
    return float(np.exp(log_in - log_out))


def sample_points(p: HPolytope, k: int, seed: int, directions: int = 32) -> np.ndarray:
    """k deterministic points of the polytope: random convex combinations of
    support points along ``directions`` random directions."""
    if k < 1:
        raise DomainError("k must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dirs = rng.normal(size=(max(4, directions), p.dim))
    vertices = np.array([support_point(p, d) for d in dirs])
    weights = rng.dirichlet(np.ones(vertices.shape[0]), size=k)
    return weights @ vertices
