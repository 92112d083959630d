"""Split an aggregate profile inside an inner approximation into per-resource
profiles.

A point ``u = center + map @ u0`` of the inner set pulls back to a base-set
point ``u0``; applying each stored per-set transform to ``u0`` yields profiles
that are individually feasible (their containment certificates guarantee it)
and that sum to ``u`` exactly, because ``center`` and ``map`` are the sums of
the per-set pieces.
"""

import numpy as np

from .errors import DomainError
from .inner_approx import TransformResult
from .lp_backend import LinearProgram, solve_lp
from .polytope import (BatteryModel, battery_to_hpolytope, chebyshev_center,
                       contains_point, log_abs_det, membership_violation)

#: condition-number ceiling for trusting direct inversion of the map
CONDITION_LIMIT = 1e12


def _map_invertible(map_matrix: np.ndarray) -> bool:
    sign, _ = log_abs_det(map_matrix)
    if sign == 0:
        return False
    return bool(np.linalg.cond(map_matrix) <= CONDITION_LIMIT)


def recover_base_point(result: TransformResult, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Base-set point ``u0`` with ``center + map @ u0 == u`` (within ``tol``).

    Direct inversion is used while the map is comfortably invertible;
    otherwise an LP searches the base set for a preimage, minimizing the
    sup-norm deviation from the base set's Chebyshev center so the answer is
    deterministic. Raises :class:`DomainError` when ``u`` lies outside the
    inner approximation.
    """
    u = np.asarray(u, dtype=float)
    T = result.base.T
    if u.shape != (T,):
        raise DomainError(f"profile has shape {u.shape}, expected ({T},)")
    base_poly = result.base.polytope
    if _map_invertible(result.map):
        u0 = np.linalg.solve(result.map, u - result.center)
        if not contains_point(base_poly, u0, tol=tol):
            raise DomainError("point outside inner approximation")
        return u0
    anchor, _ = chebyshev_center(base_poly)
    lp = LinearProgram("min")
    lp.add_block("u0", (T,))
    lp.add_block("t", (), lower=0.0)
    lp.add_ineq({"u0": base_poly.A}, base_poly.b)
    lp.add_eq({"u0": result.map}, u - result.center)
    ones = np.ones((T, 1))
    lp.add_ineq({"u0": np.eye(T), "t": -ones}, anchor)
    lp.add_ineq({"u0": -np.eye(T), "t": -ones}, -anchor)
    lp.set_objective(t=1.0)
    sol = solve_lp(lp)
    if sol.status == "infeasible":
        raise DomainError("point outside inner approximation")
    if sol.status != "optimal":
        raise DomainError(f"base-point recovery failed with solver status {sol.status}")
    return sol.value("u0")


def disaggregate(result: TransformResult, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Per-resource profiles (N, T) applying each per-set transform to the
    recovered base point; rows sum to ``u`` within ``tol``."""
    u0 = recover_base_point(result, u, tol=tol)
    return np.array([p.gamma + p.Gamma @ u0 for p in result.per_set])


def disaggregation_report(result: TransformResult, models: list[BatteryModel],
                          points: np.ndarray, tol: float = 1e-9) -> dict:
    """Worst-case residuals of disaggregating many aggregate profiles.

    Returns the maximum per-resource membership violation (row-relative) and
    the maximum sup-norm mismatch between each profile and the sum of its
    parts, across all ``points``.
    """
    if len(models) != result.num_sets:
        raise DomainError(
            f"result carries {result.num_sets} transforms but {len(models)} models given")
    polys = [battery_to_hpolytope(m) for m in models]
    worst_member = -np.inf
    worst_sum = 0.0
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for u in points:
        parts = disaggregate(result, u, tol=tol)
        worst_sum = max(worst_sum, float(np.max(np.abs(parts.sum(axis=0) - u))))
        for poly, part in zip(polys, parts):
            worst_member = max(worst_member, membership_violation(poly, part))
    return {"points": int(points.shape[0]),
            "max_membership_violation": float(worst_member),
            "max_sum_mismatch": float(worst_sum)}
