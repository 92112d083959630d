"""Outer approximations of the aggregate flexibility set.

Two constructions are provided. :func:`dilate_outer` scales the base set by
the population size -- always valid, because summing the per-resource
constraint systems bounds the aggregate by ``N`` times the averaged rhs.
:func:`solve_outer_lp` searches for a tighter linear image ``Z^{-1} @ U0`` by
optimizing the inverse map ``Z`` directly: each resource set is certified to
fit, after translation, inside a slice ``c_i * U0`` of the base set, the
translations sum to zero, and strict diagonal dominance of ``Z`` (margin
``epsilon``) keeps the map invertible without a nonconvex constraint.
Maximizing ``trace(Z)`` is the linearized stand-in for minimizing the volume
of ``Z^{-1} @ U0``.

With slices pinned to ``c_i = 1/N`` (``split="uniform"``) the program can be
infeasible for heterogeneous populations: the zero-translation requirement
cannot align resource sets of different widths inside equal slices whenever
the base set sits away from the origin. Optimized slices
(``split="optimized"``, the default) repair most of that while preserving a
zero center; when even they fail, the solver falls back to free per-set
translations, which certify ``U in center + Z^{-1} @ U0`` with a nonzero
center and are reported under ``method="lp_translated"``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .containment import ContainmentCertificate, encode_containment_rows
from .errors import DomainError, SolverFailure
from .lp_backend import LinearProgram, solve_lp
from .polytope import (BaseSet, BatteryModel, battery_rhs, battery_to_hpolytope,
                       contains_point)

DEFAULT_EPSILON = 1e-6
MAX_EPSILON_RETRIES = 5

SPLITS = ("optimized", "uniform")


@dataclass(frozen=True)
class OuterPerSet:
    """Per-resource translation, base-set share, and containment certificate."""

    gamma: np.ndarray
    share: float
    certificate: ContainmentCertificate | None

    def to_dict(self, include_certificate: bool = False) -> dict:
        data = {"gamma": np.asarray(self.gamma).tolist(), "share": self.share}
        if include_certificate and self.certificate is not None:
            data["lambda"] = self.certificate.multipliers.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "OuterPerSet":
        cert = None
        if "lambda" in data:
            cert = ContainmentCertificate(multipliers=np.asarray(data["lambda"], dtype=float))
        return cls(gamma=np.asarray(data["gamma"], dtype=float),
                   share=float(data["share"]), certificate=cert)


@dataclass(frozen=True)
class OuterResult:
    """An outer approximation ``center + Q_map @ U0`` with ``Z = Q_map^{-1}``."""

    Z: np.ndarray
    Q_map: np.ndarray
    center: np.ndarray
    per_set: tuple
    epsilon: float
    method: str
    base: BaseSet

    def dominance_margin(self) -> float:
        """min_i (Z_ii - sum_{j != i} |Z_ij|); positive means invertibility holds."""
        diag = np.diag(self.Z)
        off = np.sum(np.abs(self.Z), axis=1) - np.abs(diag)
        return float(np.min(diag - off))

    def to_dict(self, include_certificates: bool = False) -> dict:
        return {
            "Z": self.Z.tolist(),
            "Q_map": self.Q_map.tolist(),
            "center": self.center.tolist(),
            "epsilon": self.epsilon,
            "method": self.method,
            "per_set": [p.to_dict(include_certificates) for p in self.per_set],
            "base": self.base.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OuterResult":
        return cls(
            Z=np.asarray(data["Z"], dtype=float),
            Q_map=np.asarray(data["Q_map"], dtype=float),
            center=np.asarray(data["center"], dtype=float),
            per_set=tuple(OuterPerSet.from_dict(p) for p in data["per_set"]),
            epsilon=float(data["epsilon"]),
            method=str(data["method"]),
            base=BaseSet.from_dict(data["base"]),
        )


def invert_map(Z: np.ndarray) -> np.ndarray:
    """Inverse of a strictly diagonally dominant matrix with positive diagonal.

    Dominance is checked first (it guarantees invertibility); the inverse is
    verified to satisfy ``max|Z Q - I| <= 1e-8``.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[0] != Z.shape[1]:
        raise DomainError(f"matrix must be square, got {Z.shape}")
    diag = np.diag(Z)
    off = np.sum(np.abs(Z), axis=1) - np.abs(diag)
    if np.any(diag <= 0) or np.any(diag - off <= 0):
        raise DomainError("matrix is not strictly diagonally dominant with positive diagonal")
    Q = np.linalg.solve(Z, np.eye(Z.shape[0]))
    residual = float(np.max(np.abs(Z @ Q - np.eye(Z.shape[0]))))
    if residual > 1e-8:
        raise SolverFailure(f"inversion residual {residual:.3e} exceeds 1e-8")
    return Q


def outer_contains(outer: OuterResult, point: np.ndarray, tol: float = 1e-9) -> bool:
    """Membership in the outer set, tested through Z to avoid inversion error:
    ``point`` lies in ``center + Z^{-1} U0`` iff ``Z @ (point - center)`` lies
    in the base set."""
    point = np.asarray(point, dtype=float)
    return contains_point(outer.base.polytope, outer.Z @ (point - outer.center), tol=tol)


def dilate_outer(models: list[BatteryModel], base: BaseSet) -> OuterResult:
    """Scale the base set by the population size.

    Summing the per-resource constraint systems shows every aggregate profile
    satisfies ``H u <= N h0``, so containment holds by construction and is
    exact when all resource sets coincide.
    """
    n = _validate(models, base)
    T = base.T
    return OuterResult(Z=np.eye(T) / n, Q_map=float(n) * np.eye(T),
                       center=np.zeros(T), per_set=(), epsilon=0.0,
                       method="dilate", base=base)


def _validate(models: list[BatteryModel], base: BaseSet) -> int:
    if not models:
        raise DomainError("need at least one battery model")
    for i, m in enumerate(models):
        if m.T != base.T or m.delta != base.delta:
            raise DomainError(
                f"model {i} has (T={m.T}, delta={m.delta}), base has "
                f"(T={base.T}, delta={base.delta})")
    return len(models)


def _outer_lp_once(models: list[BatteryModel], base: BaseSet, epsilon: float,
                   split: str, free_translation: bool, tol: float | None):
    """One solve of the inverse-map LP; returns None when infeasible."""
    n = _validate(models, base)
    T = base.T
    H = base.polytope.A
    h0 = base.h0
    hs = [battery_rhs(m) for m in models]
    lp = LinearProgram("max")
    lp.add_block("Z", (T, T))
    lp.add_block("S", (T, T), lower=0.0)
    rows_template = encode_containment_rows(battery_to_hpolytope(models[0]), base.polytope)
    for i in range(n):
        lp.add_block(f"gamma_{i}", (T,))
        lp.add_block(f"Lambda_{i}", (4 * T, 4 * T), lower=0.0)
        if split == "optimized":
            lp.add_block(f"c_{i}", (), lower=0.0)
    # per-set rows: Lambda_i H = H Z ; Lambda_i h_i + H gamma_i <= c_i h0
    eq_lambda = rows_template.eq_lambda
    eq_z = rows_template.eq_gamma_map
    nrows = eq_lambda.shape[0]
    for i in range(n):
        ineq_lambda = sp.kron(sp.eye(4 * T), sp.csr_matrix(hs[i][None, :]), format="csr")
        lp.add_eq({f"Lambda_{i}": eq_lambda, "Z": eq_z}, np.zeros(nrows))
        if split == "optimized":
            lp.add_ineq({f"Lambda_{i}": ineq_lambda, f"gamma_{i}": H,
                         f"c_{i}": -h0.reshape(-1, 1)}, np.zeros(4 * T))
        else:
            lp.add_ineq({f"Lambda_{i}": ineq_lambda, f"gamma_{i}": H}, h0 / n)
    if split == "optimized":
        lp.add_eq({f"c_{i}": np.ones((1, 1)) for i in range(n)}, np.ones(1))
    if not free_translation:
        lp.add_eq({f"gamma_{i}": sp.eye(T, format="csr") for i in range(n)}, np.zeros(T))
    # |Z_ij| <= S_ij off the diagonal, then row dominance with margin epsilon
    abs_rows, dom_rows = [], []
    nz = T * T
    for r in range(T):
        for c in range(T):
            if r == c:
                continue
            k = r * T + c
            row = np.zeros(2 * nz)
            row[k] = 1.0
            row[nz + k] = -1.0
            abs_rows.append(row)
            row = np.zeros(2 * nz)
            row[k] = -1.0
            row[nz + k] = -1.0
            abs_rows.append(row)
    for r in range(T):
        row = np.zeros(2 * nz)
        row[r * T + r] = -1.0
        for c in range(T):
            if c != r:
                row[nz + r * T + c] = 1.0
        dom_rows.append(row)
    stacked = np.array(abs_rows + dom_rows)
    lp.add_ineq({"Z": stacked[:, :nz], "S": stacked[:, nz:]},
                np.concatenate([np.zeros(len(abs_rows)), -np.full(T, epsilon)]))
    lp.set_objective(Z=np.eye(T))
    sol = solve_lp(lp, tol=tol, method="highs-ipm")
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise SolverFailure(f"outer LP failed with solver status {sol.status}")
    Z = sol.value("Z")
    per_set = []
    for i in range(n):
        share = sol.scalar(f"c_{i}") if split == "optimized" else 1.0 / n
        per_set.append(OuterPerSet(
            gamma=sol.value(f"gamma_{i}"), share=share,
            certificate=ContainmentCertificate(multipliers=sol.value(f"Lambda_{i}"))))
    q_map = invert_map(Z)
    if free_translation:
        gamma_total = np.sum([p.gamma for p in per_set], axis=0)
        center = -q_map @ gamma_total
        method = "lp_translated"
    else:
        center = np.zeros(T)
        method = "lp"
    return OuterResult(Z=Z, Q_map=q_map, center=center, per_set=tuple(per_set),
                       epsilon=float(epsilon), method=method, base=base)


def solve_outer_lp(models: list[BatteryModel], base: BaseSet,
                   epsilon: float = DEFAULT_EPSILON, split: str = "optimized",
                   allow_translation: bool = True,
                   max_retries: int = MAX_EPSILON_RETRIES,
                   tol: float | None = None) -> OuterResult:
    """Trace-maximal invertible map ``Z`` with ``U in center + Z^{-1} U0``.

    Tries the zero-center program first (with uniform or optimized base-set
    shares per ``split``); if that is infeasible and ``allow_translation`` is
    set, retries with free per-set translations, and finally halves
    ``epsilon`` up to ``max_retries`` times. Raises :class:`DomainError` when
    no stage certifies containment.
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if split not in SPLITS:
        raise DomainError(f"split must be one of {SPLITS}, got {split!r}")
    attempts = [(epsilon, split, False)]
    if allow_translation:
        attempts.append((epsilon, split, True))
        attempts.extend((epsilon / 2 ** k, split, True) for k in range(1, max_retries + 1))
    else:
        attempts.extend((epsilon / 2 ** k, split, False) for k in range(1, max_retries + 1))
    for eps_k, split_k, free_k in attempts:
        result = _outer_lp_once(models, base, eps_k, split_k, free_k, tol)
        if result is not None:
            return result
    raise DomainError(
        "outer LP infeasible: no diagonally dominant inverse map certifies "
        f"containment down to epsilon={attempts[-1][0]:.3e}")
