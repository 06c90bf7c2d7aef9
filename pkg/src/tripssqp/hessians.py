"""Hessian approximations (Id, SR1, EstH, AveH) and the block operator W."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .kkt import true_multipliers
from .oracle import estimate_hessian
from .problems import lagrangian_constraint_hessian

__all__ = ["HESSIAN_KINDS", "HessianModel", "WOperator", "assemble_W"]

HESSIAN_KINDS = ("Id", "SR1", "EstH", "AveH")


@dataclass(frozen=True)
class WOperator:
    """``W = diag(H, theta I)`` acting on rescaled steps ``(dx; ds~)``.

    ``H is None`` encodes the identity without storing it.
    """

    H: np.ndarray | None
    theta: float
    dim_x: int
    norm: float

    def apply(self, v):
        d = self.dim_x
        top = v[:d] if self.H is None else self.H @ v[:d]
        return np.concatenate([top, self.theta * v[d:]])

    def dense(self, n):
        d = self.dim_x
        W = np.zeros((d + n, d + n))
        W[:d, :d] = np.eye(d) if self.H is None else self.H
        W[d:, d:] = self.theta * np.eye(n)
        return W


def assemble_W(H_bar, theta) -> WOperator:
    """Build ``W`` and its exact spectral norm ``max(||H||_2, theta)``."""
    H = np.asarray(H_bar, dtype=float)
    hnorm = float(np.max(np.abs(np.linalg.eigvalsh(H)))) if H.size else 0.0
    return WOperator(H=H, theta=float(theta), dim_x=H.shape[0], norm=max(hnorm, float(theta)))


def _identity_W(d, theta):
    return WOperator(H=None, theta=float(theta), dim_x=d, norm=max(1.0, float(theta)))


class HessianModel:
    """Per-run Hessian approximation state.

    Parameters
    ----------
    kind : {"Id", "SR1", "EstH", "AveH"}
    window : int
        Number of sampled Lagrangian Hessians averaged by AveH.
    sr1_tol : float
        SR1 skips the update when ``|r^T dx| < sr1_tol * ||r|| * ||dx||``
        with ``r = y - H dx``.
    """

    def __init__(self, kind="Id", window=50, sr1_tol=1e-8):
        if kind not in HESSIAN_KINDS:
            raise ConfigError(f"unknown Hessian kind {kind!r}; choose from {HESSIAN_KINDS}")
        self.kind = kind
        self.window = int(window)
        self.sr1_tol = sr1_tol
        self.H = None
        self.prev_x = None
        self.prev_grad_lag = None
        self.n_sr1_updates = 0
        self.n_sr1_skips = 0
        self._buffer = deque()

    def flop_cost(self, d):
        """Charged cost of one Hessian construction."""
        return d if self.kind == "Id" else d * d

    def samples_per_build(self):
        return 1 if self.kind in ("EstH", "AveH") else 0

    def sampled_lagrangian_hessian(self, problem, noise, x, s, theta, g_bar, point, iteration):
        """One-sample estimate of the Lagrangian Hessian in ``x``."""
        H_f = estimate_hessian(problem, noise, x, iteration).value
        lam, tau = true_multipliers(problem, x, s, theta, gradient=g_bar, point=point)
        H = H_f + lagrangian_constraint_hessian(problem, x, lam, tau)
        return 0.5 * (H + H.T)

    def sr1_update(self, dx, y):
        """In-place SR1 update; returns False when the guard skips it."""
        r = y - self.H @ dx
        denom = float(r @ dx)
        if abs(denom) < self.sr1_tol * np.linalg.norm(r) * np.linalg.norm(dx) or denom == 0.0:
            self.n_sr1_skips += 1
            return False
        H = self.H + np.outer(r, r) / denom
        self.H = 0.5 * (H + H.T)
        self.n_sr1_updates += 1
        return True

    def build(self, problem, noise, x, s, theta, g_bar, point, iteration=0):
        """Return the ``W`` operator for this iteration."""
        d = problem.dim_x
        if self.kind == "Id":
            return _identity_W(d, theta)

        if self.kind == "SR1":
            lam, tau = true_multipliers(problem, x, s, theta, gradient=g_bar, point=point)
            grad_lag = g_bar + point.J.T @ tau
            if problem.dim_eq:
                grad_lag = grad_lag + point.G.T @ lam
            if self.H is None:
                self.H = np.eye(d)
            if self.prev_x is None:
                self.prev_x, self.prev_grad_lag = np.array(x), grad_lag
            elif not np.array_equal(x, self.prev_x):
                self.sr1_update(x - self.prev_x, grad_lag - self.prev_grad_lag)
                self.prev_x, self.prev_grad_lag = np.array(x), grad_lag
            return assemble_W(self.H, theta)

        H_sample = self.sampled_lagrangian_hessian(problem, noise, x, s, theta, g_bar, point,
                                                   iteration)
        if self.kind == "EstH":
            self.H = H_sample
            return assemble_W(H_sample, theta)

        # AveH: partial average until the window fills
        self._buffer.append(H_sample)
        if len(self._buffer) > self.window:
            self._buffer.popleft()
        H = np.mean(self._buffer, axis=0)
        self.H = 0.5 * (H + H.T)
        return assemble_W(self.H, theta)
