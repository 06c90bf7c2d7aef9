"""Probabilistic zeroth- and first-order oracles built from sample averages.

Batch sizes follow the adaptive rules

    |xi_g| = C_g / (p_g kappa_g^2 Delta^2)
    |xi_f| = C_f / min(p_f kappa_f^2 Delta^4, eps_bar^2)

rounded up and clamped to ``[1, max_batch]``.  Randomness comes from a
counter-based generator keyed by ``(noise.seed, iteration, oracle kind)``, so
an estimate is a pure function of its inputs.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError
from .problems import NoiseModel, ProblemInstance

__all__ = [
    "OracleConfig",
    "OracleEstimate",
    "gradient_batch_size",
    "value_batch_size",
    "estimate_gradient",
    "sample_gradient",
    "estimate_value_pair",
    "sample_value",
    "estimate_hessian",
    "keyed_rng",
    "kappa_f_bound",
]

GRADIENT, VALUE, VALUE_TRIAL, HESSIAN = 0, 1, 2, 3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class OracleConfig:
    kappa_g: float = 0.01
    kappa_f: float = 0.0005
    p_g: float = 0.05
    p_f: float = 0.05
    C_g: float = 5.0
    C_f: float = 5.0
    max_batch: int = 10_000

    def __post_init__(self):
        if not (self.kappa_g > 0 and self.kappa_f > 0 and self.C_g > 0 and self.C_f > 0):
            raise ConfigError("kappa_g, kappa_f, C_g, C_f must be positive")
        if not (0 < self.p_g < 1 and 0 < self.p_f < 1):
            raise ConfigError("p_g and p_f must lie in (0, 1)")
        if int(self.max_batch) < 1:
            raise ConfigError("max_batch must be a positive integer")
        object.__setattr__(self, "max_batch", int(self.max_batch))


@dataclass(frozen=True)
class OracleEstimate:
    value: object
    batch_size: int
    kind: str


def kappa_f_bound(kappa_fcd, eps_s, eta, Delta_max):
    """Largest admissible ``kappa_f`` for the given solver parameters."""
    return kappa_fcd * eps_s * eta ** 3 / (16.0 * max(1.0, Delta_max))


def _clamp_batch(raw, max_batch):
    if not raw < max_batch:
        return max_batch
    return max(1, math.ceil(raw))


def gradient_batch_size(Delta_k, config: OracleConfig) -> int:
    denom = config.p_g * config.kappa_g ** 2 * Delta_k ** 2
    if denom <= 0.0:  # includes underflow of a tiny radius
        return config.max_batch
    return _clamp_batch(config.C_g / denom, config.max_batch)


def value_batch_size(Delta_k, eps_bar_k, config: OracleConfig) -> int:
    denom = min(config.p_f * config.kappa_f ** 2 * Delta_k ** 4, eps_bar_k ** 2)
    if denom <= 0.0:
        return config.max_batch
    return _clamp_batch(config.C_f / denom, config.max_batch)


_local = threading.local()


def keyed_rng(seed, iteration, kind) -> np.random.Generator:
    """Philox stream for one oracle call; independent across keys.

    The stream is a pure function of the key.  A per-thread generator is
    re-keyed in place, which is several times cheaper than building one; the returned
    generator is only valid until the next call on the same thread.
    """
    key = np.array([int(seed) & _MASK64, (int(iteration) * 8 + int(kind)) & _MASK64],
                   dtype=np.uint64)
    gen = getattr(_local, "gen", None)
    if gen is None:
        gen = _local.gen = np.random.Generator(np.random.Philox(key=[0, 0]))
    gen.bit_generator.state = {
        "bit_generator": "Philox",
        "state": {"counter": np.zeros(4, dtype=np.uint64), "key": key},
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }
    return gen


def _check(value, what):
    # the sum is finite unless some entry is non-finite (or it overflows)
    if not math.isfinite(float(np.sum(value))) and not np.all(np.isfinite(value)):
        raise NonFiniteError(f"non-finite {what} estimate")
    return value


def _subsample_indices(problem, rng, batch):
    if problem.n_samples is None:
        raise ConfigError(f"{problem.name}: subsample noise needs a finite-sum problem")
    return rng.integers(0, problem.n_samples, size=batch)


def sample_gradient(problem: ProblemInstance, noise: NoiseModel, x, batch, iteration=0):
    """Average of ``batch`` gradient draws at ``x``.

    For the Gaussian model the batch mean is drawn directly from its exact
    law ``N(grad f, sigma2 (I + 11^T) / batch)``.
    """
    x = np.asarray(x, dtype=float)
    if noise.kind == "subsample":
        rng = keyed_rng(noise.seed, iteration, GRADIENT)
        return _check(problem.sample_grad(x, _subsample_indices(problem, rng, batch)), "gradient")
    g = problem.eval_grad_f(x)
    if noise.sigma2 == 0.0:
        return _check(np.array(g, dtype=float), "gradient")
    rng = keyed_rng(noise.seed, iteration, GRADIENT)
    z = rng.standard_normal(x.size + 1)
    scale = math.sqrt(noise.sigma2 / batch)
    return _check(g + scale * (z[:-1] + z[-1]), "gradient")


def sample_value(problem: ProblemInstance, noise: NoiseModel, x, batch, iteration=0, kind=VALUE):
    x = np.asarray(x, dtype=float)
    if noise.kind == "subsample":
        rng = keyed_rng(noise.seed, iteration, kind)
        return _check(problem.sample_f(x, _subsample_indices(problem, rng, batch)), "value")
    f = problem.eval_f(x)
    if noise.sigma2 == 0.0:
        return _check(float(f), "value")
    rng = keyed_rng(noise.seed, iteration, kind)
    return _check(float(f + math.sqrt(noise.sigma2 / batch) * rng.standard_normal()), "value")


def estimate_gradient(problem, noise, x, Delta_k, config: OracleConfig, iteration=0):
    batch = gradient_batch_size(Delta_k, config)
    g = sample_gradient(problem, noise, x, batch, iteration)
    return OracleEstimate(g, batch, "first")


def estimate_value_pair(problem, noise, x, x_trial, Delta_k, eps_bar_k, config: OracleConfig,
                        iteration=0):
    """Objective estimates at the current and trial points.

    Both use ``value_batch_size`` samples; the two draws are independent even
    when ``x_trial == x``.
    """
    batch = value_batch_size(Delta_k, eps_bar_k, config)
    f_k = sample_value(problem, noise, x, batch, iteration, VALUE)
    f_s = sample_value(problem, noise, x_trial, batch, iteration, VALUE_TRIAL)
    return OracleEstimate(f_k, batch, "zeroth"), OracleEstimate(f_s, batch, "zeroth")


def estimate_hessian(problem: ProblemInstance, noise: NoiseModel, x, iteration=0):
    """Single-sample estimate of the objective Hessian."""
    x = np.asarray(x, dtype=float)
    if noise.kind == "subsample":
        rng = keyed_rng(noise.seed, iteration, HESSIAN)
        H = problem.sample_hess(x, _subsample_indices(problem, rng, 1))
        return OracleEstimate(_check(H, "Hessian"), 1, "hessian")
    if problem.eval_hess_f is None:
        raise ConfigError(f"{problem.name}: no objective Hessian available")
    H = np.array(problem.eval_hess_f(x), dtype=float)
    if noise.sigma2 != 0.0:
        rng = keyed_rng(noise.seed, iteration, HESSIAN)
        E = np.triu(rng.standard_normal(H.shape))
        E = E + np.triu(E, 1).T
        H = H + math.sqrt(noise.sigma2) * E
    return OracleEstimate(_check(H, "Hessian"), 1, "hessian")
