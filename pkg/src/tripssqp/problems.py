"""Constrained problem abstraction and the noise model layered on top of it.

A :class:`ProblemInstance` is the deterministic ground truth

    min f(x)  s.t.  c(x) = 0,  h(x) <= 0

with dense Jacobians ``G = dc/dx`` (m x d) and ``J = dh/dx`` (n x d).  Noise
enters only through the oracles, which read the :class:`NoiseModel`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError

__all__ = [
    "ProblemInstance",
    "NoiseModel",
    "NOISE_KINDS",
    "check_derivatives",
    "lagrangian_constraint_hessian",
    "kkt_residual",
]

Vector = np.ndarray
Matrix = np.ndarray

NOISE_KINDS = ("gaussian", "subsample")
_NOISE_ALIASES = {
    "gaussian-cutest-style": "gaussian",
    "subsample-dataset": "subsample",
}


def _empty_vector(x):
    return np.zeros(0)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Dense problem ``min f(x) s.t. c(x) = 0, h(x) <= 0``.

    The optional ``sample_*`` callables evaluate per-data-point quantities
    for finite-sum objectives; they take ``(x, idx)`` with an integer index
    array and return the average over ``idx``.
    """

    name: str
    dim_x: int
    dim_eq: int
    dim_ineq: int
    eval_f: Callable[[Vector], float]
    eval_grad_f: Callable[[Vector], Vector]
    eval_c: Callable[[Vector], Vector]
    eval_G: Callable[[Vector], Matrix]
    eval_h: Callable[[Vector], Vector]
    eval_J: Callable[[Vector], Matrix]
    x0: Vector
    eval_hess_f: Optional[Callable[[Vector], Matrix]] = None
    eval_hess_c: Optional[Callable[[Vector], np.ndarray]] = None
    eval_hess_h: Optional[Callable[[Vector], np.ndarray]] = None
    known_solution: Optional[Vector] = None
    known_multipliers: Optional[tuple] = None
    n_samples: Optional[int] = None
    sample_f: Optional[Callable] = None
    sample_grad: Optional[Callable] = None
    sample_hess: Optional[Callable] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d, m, n = self.dim_x, self.dim_eq, self.dim_ineq
        if d < 1 or n < 1 or m < 0 or m >= d:
            raise ConfigError(
                f"{self.name}: need d >= 1, n >= 1 and 0 <= m < d (got d={d}, m={m}, n={n})"
            )
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (d,):
            raise ConfigError(f"{self.name}: x0 has shape {x0.shape}, expected ({d},)")
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)
        if self.known_solution is not None:
            xs = np.array(self.known_solution, dtype=float)
            xs.flags.writeable = False
            object.__setattr__(self, "known_solution", xs)

    @property
    def has_hessians(self) -> bool:
        return self.eval_hess_f is not None

    def hess_c(self, x):
        if self.dim_eq == 0 or self.eval_hess_c is None:
            return np.zeros((self.dim_eq, self.dim_x, self.dim_x))
        return self.eval_hess_c(x)

    def hess_h(self, x):
        if self.eval_hess_h is None:
            return np.zeros((self.dim_ineq, self.dim_x, self.dim_x))
        return self.eval_hess_h(x)


@dataclass(frozen=True)
class NoiseModel:
    """How objective estimates are perturbed.

    ``gaussian``: value ~ N(f, sigma2), gradient ~ N(grad f, sigma2 (I + 11^T)),
    Hessian entries (i, j) and (j, i) share one N(H_ij, sigma2) draw.
    ``subsample``: averages over indices drawn uniformly with replacement from
    the problem's ``n_samples`` data points (``sigma2`` is ignored).
    """

    sigma2: float = 0.0
    kind: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        kind = _NOISE_ALIASES.get(self.kind, self.kind)
        if kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.sigma2 >= 0.0:
            raise ConfigError("sigma2 must be non-negative")

    @property
    def exact(self) -> bool:
        return self.kind == "gaussian" and self.sigma2 == 0.0


def lagrangian_constraint_hessian(problem: ProblemInstance, x, lam, tau):
    """Return ``sum_i lam_i hess c_i + sum_i tau_i hess h_i`` (d x d)."""
    d = problem.dim_x
    out = np.zeros((d, d))
    if problem.dim_eq and problem.eval_hess_c is not None:
        out += np.tensordot(lam, problem.eval_hess_c(x), axes=1)
    if problem.eval_hess_h is not None:
        out += np.tensordot(tau, problem.eval_hess_h(x), axes=1)
    return out


def kkt_residual(problem: ProblemInstance, x, lam, tau) -> float:
    """Infinity-norm residual of the first-order KKT conditions of the
    inequality-constrained problem (stationarity, feasibility, sign and
    complementarity), evaluated with user-supplied multipliers."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    tau = np.asarray(tau, dtype=float)
    h = problem.eval_h(x)
    parts = [problem.eval_grad_f(x) + problem.eval_J(x).T @ tau, np.maximum(h, 0.0),
             np.maximum(-tau, 0.0), tau * h]
    if problem.dim_eq:
        parts[0] = parts[0] + problem.eval_G(x).T @ lam
        parts.append(problem.eval_c(x))
    return float(max(np.max(np.abs(p)) if p.size else 0.0 for p in parts))


def _central_jacobian(fun, x, step):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        hi = step * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        cols.append((np.atleast_1d(fun(xp)) - np.atleast_1d(fun(xm))) / (2.0 * hi))
    return np.column_stack(cols)


def check_derivatives(problem: ProblemInstance, points=None, n_random=10, seed=0,
                      rtol=1e-5, step=1e-6):
    """Compare analytic first derivatives against central differences.

    Returns the worst relative error over ``x0``, the given ``points`` and
    ``n_random`` points drawn around ``x0``.  The error of each Jacobian is
    measured as ``max|fd - exact| / max(1, max|exact|)``.
    """
    rng = np.random.default_rng(seed)
    pts = [problem.x0]
    if points is not None:
        pts.extend(points)
    pts.extend(problem.x0 + rng.standard_normal((n_random, problem.dim_x)) * 0.5)
    worst = 0.0
    pairs = [(problem.eval_f, lambda x: problem.eval_grad_f(x)[None, :]),
             (problem.eval_h, problem.eval_J)]
    if problem.dim_eq:
        pairs.append((problem.eval_c, problem.eval_G))
    for x in pts:
        for fun, jac in pairs:
            exact = np.atleast_2d(jac(x))
            fd = _central_jacobian(fun, x, step)
            err = np.max(np.abs(fd - exact)) / max(1.0, np.max(np.abs(exact)))
            worst = max(worst, float(err))
    return worst, worst <= rtol
