"""Rescaled trial step ``d~ = w~ + t~``: scaled normal step plus tangential step.

The normal step is the minimum-norm solution ``v`` of ``theta_vec + A v = 0``
shrunk by ``gamma_bar`` to respect both the normal part of the trust region
and the slack fraction-to-boundary rule.  The tangential step approximately
minimizes

    m(t) = 1/2 t^T W t + (psi + gamma_bar W v)^T t   s.t.  A t = 0, ||t|| <= Delta_hat

by projected Steihaug CG.  It is then truncated to the slack bound and
checked against the Cauchy decrease at the strengthened radius
``min(Delta_hat, eps_s - ||w~_s||)``; the Cauchy point is used if the check
fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kkt import ConstraintBlock, project_nullspace

__all__ = [
    "StepResult",
    "TangentialStep",
    "normal_step",
    "normal_scaling",
    "cauchy_point",
    "projected_cg",
    "tangential_step",
    "assemble_step",
    "compute_step",
    "boundary_intersection",
]


def _norm(v):
    return math.sqrt(float(v @ v))


# a projected gradient this small relative to the unprojected one is rounding
_NULL_TOL = 64 * np.finfo(float).eps


def _negligible(gnorm, rhs):
    return gnorm <= _NULL_TOL * _norm(rhs)


@dataclass(frozen=True)
class TangentialStep:
    t: np.ndarray
    decrease: float  # m(t) - m(0)
    cauchy_decrease: float  # m(t_C) - m(0) at the strengthened radius
    radius_eff: float
    fallback: bool
    cg_iterations: int
    cg_exit: str
    n_projections: int
    n_W_products: int


@dataclass(frozen=True)
class StepResult:
    dx: np.ndarray
    ds_tilde: np.ndarray
    w_tilde: np.ndarray
    t_tilde: np.ndarray
    gamma_bar: float
    v: np.ndarray
    tangential_decrease: float
    cauchy_decrease: float
    Delta_hat: float = 0.0
    radius_eff: float = 0.0
    fallback: bool = False
    cg_iterations: int = 0
    n_projections: int = 0
    n_W_products: int = 0

    @property
    def d_tilde(self):
        return np.concatenate([self.dx, self.ds_tilde])

    def ds(self, s):
        """Unscaled slack step ``S ds~``."""
        return s * self.ds_tilde


def normal_step(block: ConstraintBlock):
    """``v = -A^T (A A^T)^{-1} theta_vec``."""
    return -block.A.T @ block.solve_AAt(block.theta_vec)


def normal_scaling(v, v_s, Delta, zeta, eps_s):
    """``min(zeta eps_s / ||v_s||, zeta Delta / ||v||, 1)``; zero norms drop out."""
    gamma = 1.0
    nv_s = _norm(v_s)
    nv = _norm(v)
    if nv_s > 0.0:
        gamma = min(gamma, zeta * eps_s / nv_s)
    if nv > 0.0:
        gamma = min(gamma, zeta * Delta / nv)
    return gamma


def boundary_intersection(t, p, radius):
    """Positive ``alpha`` with ``||t + alpha p|| = radius`` (``||t|| <= radius``)."""
    a = float(p @ p)
    b = 2.0 * float(t @ p)
    c = float(t @ t) - radius * radius
    if a == 0.0:
        return 0.0
    disc = math.sqrt(max(b * b - 4.0 * a * c, 0.0))
    # numerically stable root selection
    if b >= 0.0:
        q = -0.5 * (b + disc)
        return c / q if q != 0.0 else 0.0
    return (-b + disc) / (2.0 * a)


def _model(W, rhs, t):
    return 0.5 * float(t @ W.apply(t)) + float(rhs @ t)


def cauchy_point(block: ConstraintBlock, W, rhs, radius_eff):
    """Minimizer of ``m`` along ``-P rhs`` inside the ball of radius ``radius_eff``.

    Returns ``(t_c, m(t_c) - m(0))``.
    """
    g = project_nullspace(block, rhs)
    gnorm = _norm(g)
    if _negligible(gnorm, rhs) or radius_eff <= 0.0:
        return np.zeros_like(rhs), 0.0
    curv = float(g @ W.apply(g))
    alpha_max = radius_eff / gnorm
    gg = gnorm * gnorm
    alpha = alpha_max if curv <= 0.0 else min(gg / curv, alpha_max)
    t = -alpha * g
    return t, -alpha * gg + 0.5 * alpha * alpha * curv


def projected_cg(block: ConstraintBlock, W, rhs, radius, max_iter=None, rtol=1e-10):
    """Projected Steihaug CG for ``min m(t) s.t. A t = 0, ||t|| <= radius``.

    Returns ``(t, iterations, exit_reason, n_projections, n_W_products)`` with
    exit reason one of ``"converged"``, ``"boundary"``, ``"negative-curvature"``,
    ``"max-iter"``.
    """
    dim = rhs.size
    if max_iter is None:
        max_iter = max(dim - block.dim_eq, 1)
    t = np.zeros(dim)
    r = np.array(rhs, dtype=float)
    g = project_nullspace(block, r)
    n_proj, n_mv = 1, 0
    g0 = _norm(g)
    if _negligible(g0, r) or radius <= 0.0:
        return t, 0, "converged", n_proj, n_mv
    p = -g
    rg = float(r @ g)
    for it in range(1, max_iter + 1):
        Wp = W.apply(p)
        n_mv += 1
        curv = float(p @ Wp)
        if curv <= 0.0:
            alpha = boundary_intersection(t, p, radius)
            return t + alpha * p, it, "negative-curvature", n_proj, n_mv
        alpha = rg / curv
        t_next = t + alpha * p
        if _norm(t_next) >= radius:
            alpha = boundary_intersection(t, p, radius)
            return t + alpha * p, it, "boundary", n_proj, n_mv
        t = t_next
        r = r + alpha * Wp
        g = project_nullspace(block, r)
        n_proj += 1
        if _norm(g) <= rtol * g0:
            return t, it, "converged", n_proj, n_mv
        rg_next = float(r @ g)
        p = project_nullspace(block, -g + (rg_next / rg) * p)
        n_proj += 1
        rg = rg_next
    return t, max_iter, "max-iter", n_proj, n_mv


def tangential_step(block: ConstraintBlock, W, rhs, Delta_hat, eps_s, w_tilde_s,
                    kappa_fcd=1.0) -> TangentialStep:
    dim = rhs.size
    d = block.dim_x
    if Delta_hat <= 0.0:
        return TangentialStep(np.zeros(dim), 0.0, 0.0, 0.0, False, 0, "empty", 0, 0)
    radius_eff = min(Delta_hat, eps_s - _norm(w_tilde_s))
    assert radius_eff > 0.0, "eps_s - ||w_s|| must stay positive (zeta < 1)"
    t_c, dec_c = cauchy_point(block, W, rhs, radius_eff)

    t, iters, reason, n_proj, n_mv = projected_cg(block, W, rhs, Delta_hat)
    n_proj += 1
    n_mv += 1
    # fraction-to-boundary: largest beta in (0, 1] with beta t_s >= -eps_s - w_s
    t_s = t[d:]
    lower = -eps_s - w_tilde_s
    neg = t_s < lower
    if np.any(neg):
        beta = float(np.min(lower[neg] / t_s[neg]))
        t = beta * t
    dec = _model(W, rhs, t)
    n_mv += 1
    fallback = False
    if not dec <= kappa_fcd * dec_c:
        t, dec, fallback = t_c, dec_c, True
    return TangentialStep(t, dec, dec_c, radius_eff, fallback, iters, reason, n_proj, n_mv)


def assemble_step(v, gamma_bar, tangential, s, dim_x=None) -> StepResult:
    """Combine ``w~ = gamma_bar v`` with the tangential step."""
    if isinstance(tangential, TangentialStep):
        ts = tangential
    else:
        t = np.asarray(tangential, dtype=float)
        ts = TangentialStep(t, 0.0, 0.0, 0.0, False, 0, "given", 0, 0)
    v = np.asarray(v, dtype=float)
    d = v.size - np.asarray(s).size if dim_x is None else dim_x
    w = gamma_bar * v
    d_tilde = w + ts.t
    return StepResult(
        dx=d_tilde[:d], ds_tilde=d_tilde[d:], w_tilde=w, t_tilde=ts.t, gamma_bar=gamma_bar,
        v=v, tangential_decrease=ts.decrease, cauchy_decrease=ts.cauchy_decrease,
        radius_eff=ts.radius_eff, fallback=ts.fallback, cg_iterations=ts.cg_iterations,
        n_projections=ts.n_projections, n_W_products=ts.n_W_products,
    )


def compute_step(block: ConstraintBlock, W, psi, Delta, zeta, eps_s, kappa_fcd=1.0) -> StepResult:
    d = block.dim_x
    v = normal_step(block)
    gamma = normal_scaling(v, v[d:], Delta, zeta, eps_s)
    w = gamma * v
    Delta_hat = math.sqrt(max(Delta * Delta - float(w @ w), 0.0))
    rhs = psi + gamma * W.apply(v)
    ts = tangential_step(block, W, rhs, Delta_hat, eps_s, w[d:], kappa_fcd)
    step = assemble_step(v, gamma, ts, block.s, dim_x=d)
    return replace(step, Delta_hat=Delta_hat, n_W_products=step.n_W_products + 1)
