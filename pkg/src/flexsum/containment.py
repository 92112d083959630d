"""Multiplier certificates for containment of an affine image in an H-polytope.

Whether ``gamma + Gamma @ X`` fits inside ``Y = {y : H_y y <= h_y}`` is a
finite question: it holds exactly when a nonnegative multiplier matrix
``Lambda`` satisfies ``Lambda @ H_x == H_y @ Gamma`` and
``Lambda @ h_x <= h_y - H_y @ gamma``. Each row of ``Lambda`` is a dual
vector bounding the support of the image inside one halfspace of ``Y``, so the
condition is both necessary and sufficient (for nonempty ``X``) and, crucially,
linear in ``(gamma, Gamma, Lambda)`` -- ready to embed in a larger program.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, SolverFailure
from .lp_backend import LinearProgram, solve_lp
from .polytope import HPolytope


@dataclass(frozen=True)
class ContainmentCertificate:
    """Nonnegative multiplier matrix witnessing one containment."""

    multipliers: np.ndarray

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.multipliers, dtype=float))
        object.__setattr__(self, "multipliers", mat)

    def to_dict(self) -> dict:
        return {"lambda": self.multipliers.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ContainmentCertificate":
        return cls(multipliers=np.asarray(data["lambda"], dtype=float))


@dataclass(frozen=True)
class ContainmentRows:
    """Constraint blocks, in variables (gamma, Gamma, Lambda), encoding
    ``gamma + Gamma @ X in Y`` for fixed polytopes X and Y.

    ``eq_lambda`` and ``eq_gamma_map`` give the rows of
    ``Lambda H_x - H_y Gamma = 0`` acting on vec(Lambda) and vec(Gamma);
    ``ineq_lambda`` gives ``Lambda h_x`` acting on vec(Lambda), to be combined
    with ``H_y gamma <= h_y``.
    """

    lambda_shape: tuple
    gamma_dim: int
    map_shape: tuple
    eq_lambda: sp.csr_matrix
    eq_gamma_map: sp.csr_matrix
    ineq_lambda: sp.csr_matrix
    ineq_gamma: np.ndarray
    ineq_rhs: np.ndarray

    def install(self, lp: LinearProgram, gamma: str, Gamma: str, Lambda: str,
                rhs: np.ndarray | None = None) -> None:
        """Add the rows to ``lp``, binding the three placeholder roles to
        declared block names. ``rhs`` overrides the target's rhs vector, which
        is useful when many targets share one halfspace matrix."""
        rhs = self.ineq_rhs if rhs is None else np.asarray(rhs, dtype=float)
        nrows = self.eq_lambda.shape[0]
        lp.add_eq({Lambda: self.eq_lambda, Gamma: self.eq_gamma_map}, np.zeros(nrows))
        lp.add_ineq({Lambda: self.ineq_lambda, gamma: self.ineq_gamma}, rhs)


def encode_containment_rows(X: HPolytope, Y: HPolytope) -> ContainmentRows:
    """Build the linear rows certifying ``gamma + Gamma @ X in Y``.

    Blocks are sized for ``Lambda`` of shape (rows(Y), rows(X)), ``Gamma`` of
    shape (dim(Y), dim(X)), and ``gamma`` of length dim(Y). The caller is
    responsible for ensuring X is nonempty.
    """
    m_x, n_x = X.num_rows, X.dim
    m_y, n_y = Y.num_rows, Y.dim
    # vec(Lambda @ H_x) = (I kron H_x^T) vec(Lambda), row-major flattening
    eq_lambda = sp.kron(sp.eye(m_y), sp.csr_matrix(X.A.T), format="csr")
    # vec(H_y @ Gamma) = (H_y kron I) vec(Gamma)
    eq_gamma_map = -sp.kron(sp.csr_matrix(Y.A), sp.eye(n_x), format="csr")
    ineq_lambda = sp.kron(sp.eye(m_y), sp.csr_matrix(X.b[None, :]), format="csr")
    return ContainmentRows(
        lambda_shape=(m_y, m_x),
        gamma_dim=n_y,
        map_shape=(n_y, n_x),
        eq_lambda=eq_lambda,
        eq_gamma_map=eq_gamma_map,
        ineq_lambda=ineq_lambda,
        ineq_gamma=Y.A.copy(),
        ineq_rhs=Y.b.copy(),
    )


def certificate_violation(X: HPolytope, Y: HPolytope, gamma: np.ndarray,
                          Gamma: np.ndarray, certificate: ContainmentCertificate) -> float:
    """Largest violation of the three certificate conditions (0 means exact)."""
    lam = certificate.multipliers
    if lam.shape != (Y.num_rows, X.num_rows):
        raise DomainError(
            f"certificate has shape {lam.shape}, expected {(Y.num_rows, X.num_rows)}")
    gamma = np.asarray(gamma, dtype=float)
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    neg = max(0.0, float(-lam.min())) if lam.size else 0.0
    eq = float(np.max(np.abs(lam @ X.A - Y.A @ Gamma)))
    ineq = float(np.max(lam @ X.b - (Y.b - Y.A @ gamma)))
    return max(neg, eq, max(ineq, 0.0))


def check_containment(X: HPolytope, Y: HPolytope, gamma: np.ndarray, Gamma: np.ndarray,
                      tol: float = 1e-7) -> ContainmentCertificate | None:
    """Search for a multiplier certificate of ``gamma + Gamma @ X in Y``.

    Returns the certificate when the feasibility LP over Lambda admits one and
    ``None`` when it is infeasible. The equality block is imposed as paired
    inequalities with slack ``tol`` so that transforms produced by an earlier
    numerical solve remain certifiable; the returned certificate is re-checked
    arithmetically to within ``10 * tol``.
    """
    gamma = np.asarray(gamma, dtype=float)
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    if Gamma.shape != (Y.dim, X.dim):
        raise DomainError(f"Gamma has shape {Gamma.shape}, expected {(Y.dim, X.dim)}")
    if gamma.shape != (Y.dim,):
        raise DomainError(f"gamma has shape {gamma.shape}, expected ({Y.dim},)")
    rows = encode_containment_rows(X, Y)
    lp = LinearProgram("min")
    lp.add_block("Lambda", rows.lambda_shape, lower=0.0)
    target = (Y.A @ Gamma).reshape(-1)
    lp.add_ineq({"Lambda": rows.eq_lambda}, target + tol)
    lp.add_ineq({"Lambda": -rows.eq_lambda}, -(target - tol))
    lp.add_ineq({"Lambda": rows.ineq_lambda}, Y.b - Y.A @ gamma)
    sol = solve_lp(lp, tol=tol)
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise SolverFailure(f"certificate LP failed with status {sol.status}")
    certificate = ContainmentCertificate(multipliers=sol.value("Lambda"))
    violation = certificate_violation(X, Y, gamma, Gamma, certificate)
    if violation > 10 * tol:
        raise SolverFailure(
            f"certificate violates the containment conditions by {violation:.3e}")
    return certificate
