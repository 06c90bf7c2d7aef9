"""l2 barrier merit function, predicted/actual reductions and the merit loop.

    L(x, s) = f(x) - theta * sum(log s) + mu_bar * ||(c(x); h(x) + s)||
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MeritDivergenceError

__all__ = [
    "MeritState",
    "merit_value",
    "predicted_reduction",
    "prediction_parts",
    "predicted_reduction_unscaled",
    "pred_threshold",
    "merit_loop",
    "actual_reduction",
]


def _norm(v):
    return math.sqrt(float(v @ v))

DEFAULT_MU_CAP = 1e10


@dataclass
class MeritState:
    mu_bar: float = 1.0
    rho: float = 1.5
    mu_cap: float = DEFAULT_MU_CAP


def _log_barrier(s):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("merit function needs strictly positive slacks")
    return float(np.sum(np.log(s)))


def merit_value(f_value, s, constraints, theta, mu_bar):
    """Merit value; ``constraints = (c, h)`` at the same point.

    ``f_value`` may be exact or an estimate; the barrier and penalty terms
    are always exact.
    """
    c, h = constraints
    viol = np.concatenate([np.asarray(c, dtype=float), np.asarray(h, dtype=float) + s])
    return float(f_value) - theta * _log_barrier(s) + mu_bar * _norm(viol)


def prediction_parts(psi, W, block, step):
    """Split ``Pred = model + mu_bar * feas`` into its two mu-independent parts."""
    d_tilde = step.d_tilde
    model = float(psi @ d_tilde) + 0.5 * float(d_tilde @ W.apply(d_tilde))
    tv = block.theta_vec
    feas = _norm(tv + block.A @ d_tilde) - _norm(tv)
    return model, feas


def predicted_reduction(psi, W, block, step, mu_bar):
    """``psi^T d + 1/2 d^T W d + mu_bar (||theta_vec + A d|| - ||theta_vec||)``."""
    model, feas = prediction_parts(psi, W, block, step)
    return model + mu_bar * feas


def predicted_reduction_unscaled(g_bar, H, theta, c, G, h, J, s, dx, ds, mu_bar):
    """Same quantity written in the unscaled slack step ``ds = S ds~``."""
    s = np.asarray(s, dtype=float)
    ds_over_s = ds / s
    model = (float(g_bar @ dx) + 0.5 * float(dx @ H @ dx)
             - theta * float(np.sum(ds_over_s)) + 0.5 * theta * float(ds_over_s @ ds_over_s))
    lin = np.concatenate([c + G @ dx, h + s + J @ dx + ds])
    cur = np.concatenate([c, h + s])
    return model + mu_bar * (_norm(lin) - _norm(cur))


def pred_threshold(Q_norm, W_norm, Delta, eps_s, kappa_fcd):
    """``-(kappa_fcd / 2) ||Q|| min(Delta, eps_s, ||Q|| / ||W||)``."""
    ratio = Q_norm / W_norm if W_norm > 0.0 else np.inf
    return -0.5 * kappa_fcd * Q_norm * min(Delta, eps_s, ratio)


def merit_loop(state: MeritState, threshold, pred_at):
    """Grow ``mu_bar`` by ``rho`` until ``pred_at(mu_bar) <= threshold``.

    Parameters
    ----------
    state : MeritState
        Updated in place.
    threshold : float
        Required upper bound on the predicted reduction.
    pred_at : callable
        ``mu -> Pred`` (affine in ``mu``).

    Returns
    -------
    pred : float
        Predicted reduction at the final ``mu_bar``.
    turns : int
        Number of ``rho`` multiplications performed.
    """
    mu = state.mu_bar
    turns = 0
    pred = pred_at(mu)
    while pred > threshold:
        mu *= state.rho
        turns += 1
        if mu > state.mu_cap:
            raise MeritDivergenceError(
                f"merit parameter exceeded cap {state.mu_cap:g} (Pred={pred:.3e}, "
                f"threshold={threshold:.3e})")
        pred = pred_at(mu)
    state.mu_bar = mu
    return pred, turns


def actual_reduction(f_bar_k, f_bar_trial, s, s_trial, constraints, constraints_trial,
                     theta, mu_bar):
    """Estimated merit change between the current and the trial point."""
    c, h = constraints
    c_t, h_t = constraints_trial
    barrier = _log_barrier(s_trial) - _log_barrier(s)
    viol = _norm(np.concatenate([c, h + s]))
    viol_t = _norm(np.concatenate([c_t, h_t + s_trial]))
    return float(f_bar_trial - f_bar_k - theta * barrier + mu_bar * (viol_t - viol))
