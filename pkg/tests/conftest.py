import numpy as np
import pytest

from tripssqp.kkt import build_block, evaluate_point
from tripssqp.problems import ProblemInstance


def random_qp(rng, d=4, m=1, n=2, convex=True):
    """Quadratic objective with linear constraints; data drawn from ``rng``."""
    M = rng.standard_normal((d, d))
    B = M @ M.T + d * np.eye(d) if convex else 0.5 * (M + M.T)
    q = rng.standard_normal(d)
    G = rng.standard_normal((m, d))
    bc = rng.standard_normal(m)
    J = rng.standard_normal((n, d))
    bh = rng.standard_normal(n)
    return ProblemInstance(
        name="random-qp", dim_x=d, dim_eq=m, dim_ineq=n,
        eval_f=lambda x: float(0.5 * x @ B @ x + q @ x),
        eval_grad_f=lambda x: B @ x + q,
        eval_hess_f=lambda x: B,
        eval_c=lambda x: G @ x - bc,
        eval_G=lambda x: G,
        eval_hess_c=lambda x: np.zeros((m, d, d)),
        eval_h=lambda x: J @ x - bh,
        eval_J=lambda x: J,
        eval_hess_h=lambda x: np.zeros((n, d, d)),
        x0=rng.standard_normal(d),
        meta={"B": B, "q": q},
    )


def random_block(rng, d=4, m=1, n=2):
    p = random_qp(rng, d, m, n)
    x = rng.standard_normal(d)
    s = rng.uniform(0.2, 2.0, n)
    return p, x, s, build_block(p, x, s, evaluate_point(p, x))


def lagrangian_bound_constant(G, J, s):
    """``1 + sqrt(k2 / k1)`` with ``max(||G||, ||J||, ||S||) <= sqrt(k2)`` and
    ``max(||G^T (G G^T)^-1||, ||S^-1||) <= 1 / sqrt(k1)`` at this point."""
    sq_k2 = max(np.linalg.norm(G, 2) if G.size else 0.0, np.linalg.norm(J, 2), s.max())
    inv_sq_k1 = 1.0 / s.min()
    if G.size:
        inv_sq_k1 = max(inv_sq_k1, np.linalg.norm(np.linalg.pinv(G), 2))
    return 1.0 + sq_k2 * inv_sq_k1


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
