"""Inner approximations of the aggregate flexibility set.

Each resource set ``U_i`` receives its own affine image ``gamma_i +
Gamma_i @ U0`` of the common base set, certified by a multiplier matrix; the
componentwise sums ``center = sum(gamma_i)`` and ``map = sum(Gamma_i)`` then
describe a set guaranteed to sit inside the Minkowski sum of the ``U_i``.
Four solvers share that skeleton:

* :func:`solve_structure_preserving` forces ``map`` to be a positive multiple
  of the identity (the result is again battery-structured) and maximizes the
  scale factor -- one coupled LP.
* :func:`solve_general_affine` frees the per-set maps and maximizes
  ``trace(map)``, a linearization of log-volume about the identity.
* :func:`solve_decomposed` solves the same problem as N independent per-set
  LPs, exploiting that the coupling in the general-affine program is only
  through the objective.
* :func:`solve_homothet_baseline` restricts each per-set map to a nonnegative
  scalar dilation -- the classical baseline this package improves on.

All programs are assembled in cumulative-energy coordinates (``v = L u``),
where the battery constraint matrix is bidiagonal instead of triangular; the
optimum is invariant under that similarity change and the solve is noticeably
faster. Results are mapped back to power coordinates before they are returned.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .containment import ContainmentCertificate, encode_containment_rows
from .errors import DomainError, SolverFailure
from .lp_backend import LinearProgram, solve_lp
from .polytope import (AHPolytope, BaseSet, BatteryModel, HPolytope, battery_rhs,
                       battery_to_hpolytope, build_cumulative_matrix, chebyshev_center)

#: closed stand-in for the strict positivity of the structure-preserving scale
EPS_ALPHA = 1e-9

#: per-set scales at or below this are treated as singleton approximations
SINGLETON_ALPHA = 1e-9

METHODS = ("structure", "affine", "decomposed", "homothet")


@dataclass(frozen=True)
class PerSetTransform:
    """Affine image of the base set certified to sit inside one resource set."""

    gamma: np.ndarray
    Gamma: np.ndarray
    certificate: ContainmentCertificate | None

    def to_dict(self, include_certificate: bool = False) -> dict:
        data = {"gamma": np.asarray(self.gamma).tolist(),
                "Gamma": np.asarray(self.Gamma).tolist()}
        if include_certificate and self.certificate is not None:
            data["lambda"] = self.certificate.multipliers.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PerSetTransform":
        cert = None
        if "lambda" in data:
            cert = ContainmentCertificate(multipliers=np.asarray(data["lambda"], dtype=float))
        return cls(gamma=np.asarray(data["gamma"], dtype=float),
                   Gamma=np.asarray(data["Gamma"], dtype=float),
                   certificate=cert)


@dataclass(frozen=True)
class TransformResult:
    """An inner approximation ``center + map @ U0`` with its per-set breakdown.

    ``center`` and ``map`` are the exact index-ordered sums of the per-set
    ``gamma``/``Gamma``. The base set travels with the result so that
    disaggregation and validation need no extra inputs.
    """

    center: np.ndarray
    map: np.ndarray
    per_set: tuple
    objective: float
    method: str
    base: BaseSet

    def inner_set(self) -> AHPolytope:
        return AHPolytope(center=self.center, map=self.map, base=self.base.polytope)

    @property
    def num_sets(self) -> int:
        return len(self.per_set)

    def to_dict(self, include_certificates: bool = False) -> dict:
        return {
            "center": self.center.tolist(),
            "map": self.map.tolist(),
            "method": self.method,
            "objective": self.objective,
            "per_set": [p.to_dict(include_certificates) for p in self.per_set],
            "base": self.base.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransformResult":
        return cls(
            center=np.asarray(data["center"], dtype=float),
            map=np.asarray(data["map"], dtype=float),
            per_set=tuple(PerSetTransform.from_dict(p) for p in data["per_set"]),
            objective=float(data["objective"]),
            method=str(data["method"]),
            base=BaseSet.from_dict(data["base"]),
        )


class _EnergyForm:
    """Shared pieces of the per-set containment programs in energy coordinates."""

    def __init__(self, models: list[BatteryModel], base: BaseSet):
        if not models:
            raise DomainError("need at least one battery model")
        T, delta = base.T, base.delta
        for i, m in enumerate(models):
            if m.T != T or m.delta != delta:
                raise DomainError(
                    f"model {i} has (T={m.T}, delta={m.delta}), base has (T={T}, delta={delta})")
        self.T = T
        self.delta = delta
        self.n = len(models)
        self.L = build_cumulative_matrix(T, delta)
        inv = np.zeros((T, T))
        idx = np.arange(T)
        inv[idx, idx] = 1.0 / delta
        inv[idx[1:], idx[:-1]] = -1.0 / delta
        self.L_inv = inv
        eye = np.eye(T)
        self.H = np.vstack([eye, -eye, inv, -inv])
        self.h0 = base.h0.copy()
        self.h = [battery_rhs(m) for m in models]
        base_v = HPolytope(A=self.H, b=self.h0)
        self.rows = encode_containment_rows(base_v, HPolytope(A=self.H, b=self.h[0]))

    def to_power(self, gamma_v: np.ndarray, Gamma_v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Undo the v = L u change of coordinates on one per-set transform."""
        return self.L_inv @ gamma_v, self.L_inv @ Gamma_v @ self.L


def _assemble(form: _EnergyForm, sols: list[tuple[np.ndarray, np.ndarray, np.ndarray | None]],
              objective: float, method: str, base: BaseSet) -> TransformResult:
    per_set = []
    for gamma, Gamma, lam in sols:
        cert = None if lam is None else ContainmentCertificate(multipliers=lam)
        per_set.append(PerSetTransform(gamma=gamma, Gamma=Gamma, certificate=cert))
    center = np.sum([p.gamma for p in per_set], axis=0)
    map_sum = np.sum([p.Gamma for p in per_set], axis=0)
    return TransformResult(center=center, map=map_sum, per_set=tuple(per_set),
                           objective=float(objective), method=method, base=base)


def _raise_for(status: str, what: str):
    if status == "infeasible":
        raise DomainError(
            f"{what} is infeasible; some individual flexibility set is likely empty")
    raise SolverFailure(f"{what} failed with solver status {status}")


def solve_structure_preserving(models: list[BatteryModel], base: BaseSet,
                               tol: float | None = None) -> TransformResult:
    """Largest battery-structured inner approximation ``center + alpha * U0``.

    One coupled LP over all per-set transforms with the constraint that the
    per-set maps sum to ``alpha * I`` (``alpha >= EPS_ALPHA``), maximizing
    ``alpha``. Solved with the interior-point method, which handles the
    coupling row block far better than simplex here.
    """
    form = _EnergyForm(models, base)
    T, n = form.T, form.n
    lp = LinearProgram("max")
    lp.add_block("alpha", (), lower=EPS_ALPHA)
    for i in range(n):
        lp.add_block(f"gamma_{i}", (T,))
        lp.add_block(f"Gamma_{i}", (T, T))
        lp.add_block(f"Lambda_{i}", form.rows.lambda_shape, lower=0.0)
        form.rows.install(lp, gamma=f"gamma_{i}", Gamma=f"Gamma_{i}",
                          Lambda=f"Lambda_{i}", rhs=form.h[i])
    coupling = {f"Gamma_{i}": sp.eye(T * T, format="csr") for i in range(n)}
    coupling["alpha"] = -np.eye(T).reshape(-1, 1)
    lp.add_eq(coupling, np.zeros(T * T))
    lp.set_objective(alpha=1.0)
    sol = solve_lp(lp, tol=tol, method="highs-ipm")
    if sol.status != "optimal":
        _raise_for(sol.status, "structure-preserving LP")
    sols = []
    for i in range(n):
        gamma, Gamma = form.to_power(sol.value(f"gamma_{i}"), sol.value(f"Gamma_{i}"))
        sols.append((gamma, Gamma, sol.value(f"Lambda_{i}")))
    return _assemble(form, sols, sol.scalar("alpha"), "structure", base)


def solve_general_affine(models: list[BatteryModel], base: BaseSet,
                         tol: float | None = None) -> TransformResult:
    """Trace-maximal inner approximation over general affine transforms.

    Maximizing ``trace(map)`` stands in for the nonconcave volume objective
    (first-order expansion of ``|det|`` about the identity). The program
    separates per set except for the objective, but is solved monolithically
    here; see :func:`solve_decomposed` for the split form.
    """
    form = _EnergyForm(models, base)
    T, n = form.T, form.n
    lp = LinearProgram("max")
    for i in range(n):
        lp.add_block(f"gamma_{i}", (T,))
        lp.add_block(f"Gamma_{i}", (T, T))
        lp.add_block(f"Lambda_{i}", form.rows.lambda_shape, lower=0.0)
        form.rows.install(lp, gamma=f"gamma_{i}", Gamma=f"Gamma_{i}",
                          Lambda=f"Lambda_{i}", rhs=form.h[i])
    lp.set_objective(**{f"Gamma_{i}": np.eye(T) for i in range(n)})
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        _raise_for(sol.status, "general-affine LP")
    sols = []
    for i in range(n):
        gamma, Gamma = form.to_power(sol.value(f"gamma_{i}"), sol.value(f"Gamma_{i}"))
        sols.append((gamma, Gamma, sol.value(f"Lambda_{i}")))
    return _assemble(form, sols, sol.objective_value, "affine", base)


def solve_decomposed(models: list[BatteryModel], base: BaseSet,
                     tol: float | None = None) -> TransformResult:
    """Per-set trace-maximal transforms, solved as N independent LPs.

    Reconstructing ``center``/``map`` as the sums recovers an optimal solution
    of the general-affine program; the objectives agree up to solver
    tolerance. The per-set programs are independent, so they could equally run
    concurrently -- the reconstruction is an order-fixed sum either way.
    """
    form = _EnergyForm(models, base)
    T, n = form.T, form.n
    sols = []
    total = 0.0
    for i in range(n):
        lp = LinearProgram("max")
        lp.add_block("gamma", (T,))
        lp.add_block("Gamma", (T, T))
        lp.add_block("Lambda", form.rows.lambda_shape, lower=0.0)
        form.rows.install(lp, gamma="gamma", Gamma="Gamma", Lambda="Lambda", rhs=form.h[i])
        lp.set_objective(Gamma=np.eye(T))
        sol = solve_lp(lp, tol=tol, method="highs-ipm")
        if sol.status != "optimal":
            _raise_for(sol.status, f"per-set trace LP for resource {i}")
        gamma, Gamma = form.to_power(sol.value("gamma"), sol.value("Gamma"))
        sols.append((gamma, Gamma, sol.value("Lambda")))
        total += sol.objective_value
    return _assemble(form, sols, total, "decomposed", base)


def solve_homothet_baseline(models: list[BatteryModel], base: BaseSet,
                            tol: float | None = None) -> TransformResult:
    """Sum of largest per-set dilations ``gamma_i + alpha_i * U0``.

    Each resource gets the biggest translated copy of the base set it can
    hold (``alpha_i >= 0``). Resource sets flatter than the base set only
    admit ``alpha_i = 0``; the translation is then pinned to the resource
    set's Chebyshev center so repeated runs agree.
    """
    form = _EnergyForm(models, base)
    T, n = form.T, form.n
    alpha_column = (form.rows.eq_gamma_map @ np.eye(T).reshape(-1)).reshape(-1, 1)
    sols = []
    total = 0.0
    for i in range(n):
        lp = LinearProgram("max")
        lp.add_block("alpha", (), lower=0.0)
        lp.add_block("gamma", (T,))
        lp.add_block("Lambda", form.rows.lambda_shape, lower=0.0)
        nrows = form.rows.eq_lambda.shape[0]
        lp.add_eq({"Lambda": form.rows.eq_lambda, "alpha": alpha_column}, np.zeros(nrows))
        lp.add_ineq({"Lambda": form.rows.ineq_lambda, "gamma": form.H}, form.h[i])
        lp.set_objective(alpha=1.0)
        sol = solve_lp(lp, tol=tol)
        if sol.status != "optimal":
            _raise_for(sol.status, f"per-set dilation LP for resource {i}")
        alpha_i = sol.scalar("alpha")
        if alpha_i <= SINGLETON_ALPHA:
            alpha_i = 0.0
            gamma, _ = chebyshev_center(battery_to_hpolytope(models[i]))
            lam = np.zeros(form.rows.lambda_shape)
        else:
            gamma = form.L_inv @ sol.value("gamma")
            lam = sol.value("Lambda")
        sols.append((gamma, alpha_i * np.eye(T), lam))
        total += alpha_i
    return _assemble(form, sols, total, "homothet", base)


_SOLVERS = {
    "structure": solve_structure_preserving,
    "affine": solve_general_affine,
    "decomposed": solve_decomposed,
    "homothet": solve_homothet_baseline,
}


def solve_inner(models: list[BatteryModel], base: BaseSet, method: str,
                tol: float | None = None) -> TransformResult:
    """Dispatch to one of the inner approximation methods by name."""
    try:
        solver = _SOLVERS[method]
    except KeyError:
        raise DomainError(f"unknown inner method {method!r}; choose from {METHODS}") from None
    return solver(models, base, tol=tol)
