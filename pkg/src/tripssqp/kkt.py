"""Constraint block, null-space projection, multipliers and KKT measures.

With slack ``s > 0`` and ``S = diag(s)`` the rescaled constraint Jacobian is

    A = [[G, 0],
         [J, S]]          ((m+n) x (d+n))

and ``theta_vec = (c; h + s)``.  Everything that needs ``(A A^T)^{-1}`` goes
through the Cholesky factor stored on the block; the projector
``P = I - A^T (A A^T)^{-1} A`` is only ever applied, never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularConstraintError
from .problems import ProblemInstance

__all__ = [
    "PointEval",
    "evaluate_point",
    "ConstraintBlock",
    "build_block",
    "project_nullspace",
    "true_multipliers",
    "stationarity_measure",
    "kkt_vector",
    "kkt_reference_scale",
    "relative_kkt_residual",
]

_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class PointEval:
    """Deterministic constraint data (and exact gradient) at one ``x``."""

    x: np.ndarray
    grad: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    J: np.ndarray
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    def gram_inverse_factor(self):
        """``L^{-1}`` for the Cholesky factor ``L`` of ``G G^T``, computed once per point."""
        Li = self.cache.get("chol_GGt_inv")
        if Li is None:
            Li = self.cache["chol_GGt_inv"] = np.linalg.inv(_cholesky(self.G @ self.G.T, "G G^T"))
        return Li


def evaluate_point(problem: ProblemInstance, x) -> PointEval:
    x = np.asarray(x, dtype=float)
    return PointEval(
        x=x,
        grad=np.asarray(problem.eval_grad_f(x), dtype=float),
        c=np.asarray(problem.eval_c(x), dtype=float).reshape(problem.dim_eq),
        G=np.asarray(problem.eval_G(x), dtype=float).reshape(problem.dim_eq, problem.dim_x),
        h=np.asarray(problem.eval_h(x), dtype=float).reshape(problem.dim_ineq),
        J=np.asarray(problem.eval_J(x), dtype=float).reshape(problem.dim_ineq, problem.dim_x),
    )


def _cholesky(M, what):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise SingularConstraintError(f"{what} is not positive definite") from None
    piv = np.diag(L) ** 2
    if piv.size and piv.min() <= _PIVOT_RTOL * piv.max():
        raise SingularConstraintError(
            f"{what} is numerically singular (pivot ratio {piv.min() / piv.max():.2e})")
    return L


@dataclass(frozen=True)
class ConstraintBlock:
    A: np.ndarray
    theta_vec: np.ndarray
    chol_AAt: np.ndarray
    chol_inv: np.ndarray
    s: np.ndarray
    dim_x: int
    dim_eq: int

    @property
    def dim_ineq(self):
        return self.s.size

    def solve_AAt(self, r):
        """Return ``(A A^T)^{-1} r`` from the stored factor."""
        Li = self.chol_inv
        return Li.T @ (Li @ r)

    def aat_eigenvalues(self):
        return np.linalg.eigvalsh(self.A @ self.A.T)


def build_block(problem: ProblemInstance, x, s, point: PointEval | None = None) -> ConstraintBlock:
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("slack variables must be strictly positive")
    pt = evaluate_point(problem, x) if point is None else point
    d, m, n = problem.dim_x, problem.dim_eq, problem.dim_ineq
    A = np.zeros((m + n, d + n))
    A[:m, :d] = pt.G
    A[m:, :d] = pt.J
    A[m:, d:] = np.diag(s)
    L = _cholesky(A @ A.T, "A A^T")
    Linv = np.linalg.inv(L)
    theta_vec = np.concatenate([pt.c, pt.h + s])
    return ConstraintBlock(A=A, theta_vec=theta_vec, chol_AAt=L, chol_inv=Linv, s=s,
                           dim_x=d, dim_eq=m)


def project_nullspace(block: ConstraintBlock, v):
    """Apply ``P = I - A^T (A A^T)^{-1} A`` to ``v``."""
    v = np.asarray(v, dtype=float)
    return v - block.A.T @ block.solve_AAt(block.A @ v)


def true_multipliers(problem: ProblemInstance, x, s, theta, gradient=None, point=None):
    """Multipliers ``tau = theta / s`` and least-squares ``lambda``.

    ``lambda = -(G G^T)^{-1} G (grad + theta J^T S^{-1} 1)``; pass
    ``gradient`` to use an estimate instead of the exact objective gradient.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("slack variables must be strictly positive")
    tau = theta / s
    if problem.dim_eq == 0:
        return np.zeros(0), tau
    pt = evaluate_point(problem, x) if point is None else point
    g = pt.grad if gradient is None else np.asarray(gradient, dtype=float)
    G = pt.G
    Li = pt.gram_inverse_factor()
    lam = -Li.T @ (Li @ (G @ (g + pt.J.T @ tau)))
    return lam, tau


def stationarity_measure(block: ConstraintBlock, psi):
    """``Q = (P psi; theta_vec)``; ``psi = (g; -theta 1)``."""
    return np.concatenate([project_nullspace(block, psi), block.theta_vec])


def kkt_vector(problem: ProblemInstance, x, s, theta, point=None):
    """``(grad f + G^T lam + J^T tau; c; min(-h, tau))`` with the true multipliers."""
    pt = evaluate_point(problem, x) if point is None else point
    lam, tau = true_multipliers(problem, x, s, theta, point=pt)
    grad_lag = pt.grad + pt.J.T @ tau
    if problem.dim_eq:
        grad_lag = grad_lag + pt.G.T @ lam
    return np.concatenate([grad_lag, pt.c, np.minimum(-pt.h, tau)])


def kkt_reference_scale(problem: ProblemInstance, x0, s0, theta0, point=None) -> float:
    return max(float(np.linalg.norm(kkt_vector(problem, x0, s0, theta0, point))), 1.0)


def relative_kkt_residual(problem: ProblemInstance, x, s, theta, ref_scale, point=None) -> float:
    return float(np.linalg.norm(kkt_vector(problem, x, s, theta, point))) / ref_scale
