import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tripssqp.errors import ConfigError, NonFiniteError
from tripssqp.logistic import LogisticProblemConfig, make_logistic_problem
from tripssqp.oracle import (GRADIENT, OracleConfig, estimate_gradient, estimate_hessian,
                             estimate_value_pair, gradient_batch_size, kappa_f_bound, keyed_rng, sample_gradient,
                             sample_value, value_batch_size)
from tripssqp.problems import NoiseModel, ProblemInstance
from tripssqp.suite import get_problem


def test_gradient_batch_examples():
    cfg = OracleConfig()
    assert gradient_batch_size(1.0, cfg) == 10_000  # raw 1e6, clamped
    assert gradient_batch_size(1e9, cfg) == 1
    assert gradient_batch_size(10.0, OracleConfig(kappa_g=1.0)) == 1
    # ceil, never round
    assert gradient_batch_size(1.0, OracleConfig(kappa_g=1.0, C_g=5.01, max_batch=10 ** 6)) == 101


def test_value_batch_examples():
    assert value_batch_size(1.0, 1.0, OracleConfig()) == 10_000
    assert value_batch_size(1e6, 1e6, OracleConfig()) == 1
    cfg = OracleConfig(C_f=2.0, p_f=0.5, kappa_f=1.0)
    assert value_batch_size(1.0, 10.0, cfg) == 4


def test_default_kappa_f_is_admissible():
    bound = kappa_f_bound(1.0, 0.9, 0.6, 10.0)
    assert bound == pytest.approx(0.001215)
    assert OracleConfig().kappa_f <= bound


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1.0001, 10.0), st.floats(1e-3, 1e3))
def test_batch_sizes_are_monotone(Delta, factor, eps_bar):
    cfg = OracleConfig(max_batch=10 ** 9)
    assert gradient_batch_size(Delta * factor, cfg) <= gradient_batch_size(Delta, cfg)
    assert value_batch_size(Delta * factor, eps_bar * factor, cfg) <= \
        value_batch_size(Delta, eps_bar, cfg)
    assert 1 <= gradient_batch_size(Delta, cfg) <= cfg.max_batch


@pytest.mark.parametrize("kw", [dict(kappa_g=0), dict(p_g=1.0), dict(max_batch=0), dict(C_f=-1)])
def test_oracle_config_validation(kw):
    with pytest.raises(ConfigError):
        OracleConfig(**kw)


def test_zero_noise_is_exact():
    p = get_problem("rosenbrock_disc")
    x = np.array([0.3, -0.2])
    noise = NoiseModel(0.0)
    est = estimate_gradient(p, noise, x, 0.5, OracleConfig())
    assert est.value.tobytes() == np.asarray(p.eval_grad_f(x), dtype=float).tobytes()
    assert est.batch_size == gradient_batch_size(0.5, OracleConfig())
    fk, fs = estimate_value_pair(p, noise, x, x + 0.1, 1.0, 1.0, OracleConfig())
    assert fk.value == p.eval_f(x) and fs.value == p.eval_f(x + 0.1)
    np.testing.assert_array_equal(estimate_hessian(p, noise, x).value, p.eval_hess_f(x))


def test_estimates_are_deterministic_per_key():
    p = get_problem("quad_box")
    noise = NoiseModel(1e-2, seed=11)
    a = sample_gradient(p, noise, p.x0, 7, iteration=3)
    b = sample_gradient(p, noise, p.x0, 7, iteration=3)
    c = sample_gradient(p, noise, p.x0, 7, iteration=4)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


def test_value_pair_draws_are_independent_at_same_point():
    p = get_problem("quad_box")
    fk, fs = estimate_value_pair(p, NoiseModel(1e-2, seed=1), p.x0, p.x0, 1.0, 1.0,
                                 OracleConfig(max_batch=5))
    assert fk.value != fs.value
    assert fk.batch_size == fs.batch_size == 5


def test_value_estimate_standard_deviation():
    p = get_problem("quad_box")
    sigma2, B, trials = 1e-2, 16, 10_000
    noise = NoiseModel(sigma2, seed=4)
    f = p.eval_f(p.x0)
    vals = np.array([sample_value(p, noise, p.x0, B, iteration=i) for i in range(trials)]) - f
    sd = math.sqrt(sigma2 / B)
    # standard error of a sample standard deviation is about sd / sqrt(2 n)
    assert abs(vals.std(ddof=1) - sd) <= 10 * sd / math.sqrt(2 * trials)
    assert abs(vals.mean()) <= 10 * sd / math.sqrt(trials)


def test_gradient_covariance_single_draw():
    """Empirical covariance vs sigma2 (I + 11^T) entrywise within 10 standard errors."""
    p = get_problem("rosenbrock_disc")
    sigma2, n = 1e-2, 100_000
    noise = NoiseModel(sigma2, seed=8)
    x = np.array([0.1, 0.4])
    g = p.eval_grad_f(x)
    E = np.array([sample_gradient(p, noise, x, 1, iteration=i) for i in range(n)]) - g
    C = E.T @ E / n
    target = sigma2 * (np.eye(2) + np.ones((2, 2)))
    # Var(e_i e_j) = S_ii S_jj + S_ij^2 for Gaussian e
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target ** 2) / n)
    assert np.all(np.abs(C - target) <= 10 * se)


def test_hessian_noise_is_symmetric():
    p = get_problem("qp_large")
    H = estimate_hessian(p, NoiseModel(1e-1, seed=2), p.x0, iteration=5).value
    np.testing.assert_array_equal(H, H.T)
    assert not np.allclose(H, p.eval_hess_f(p.x0))


def test_subsample_full_batch_averages_drawn_multiset():
    p = make_logistic_problem(LogisticProblemConfig(N=30, seed=0))
    noise = NoiseModel(kind="subsample", seed=5)
    x = np.linspace(-0.2, 0.2, 15)
    g = sample_gradient(p, noise, x, 30, iteration=2)
    idx = keyed_rng(5, 2, GRADIENT).integers(0, 30, size=30)
    np.testing.assert_allclose(g, p.sample_grad(x, idx), rtol=1e-14)
    assert len(set(idx.tolist())) < 30  # with replacement: duplicates are typical


def test_subsample_needs_finite_sum():
    p = get_problem("quad_box")
    with pytest.raises(ConfigError):
        sample_gradient(p, NoiseModel(kind="subsample"), p.x0, 3)


def test_non_finite_estimates_raise():
    p = ProblemInstance(
        name="bad", dim_x=1, dim_eq=0, dim_ineq=1,
        eval_f=lambda x: float("nan"), eval_grad_f=lambda x: np.array([np.inf]),
        eval_c=lambda x: np.zeros(0), eval_G=lambda x: np.zeros((0, 1)),
        eval_h=lambda x: x - 1, eval_J=lambda x: np.ones((1, 1)), x0=[0.0])
    with pytest.raises(NonFiniteError):
        sample_gradient(p, NoiseModel(0.0), p.x0, 1)
    with pytest.raises(NonFiniteError):
        sample_value(p, NoiseModel(1e-2), p.x0, 1)


def test_batch_sizes_survive_radius_underflow():
    cfg = OracleConfig()
    assert gradient_batch_size(1e-200, cfg) == cfg.max_batch
    assert gradient_batch_size(0.0, cfg) == cfg.max_batch
    assert value_batch_size(1e-100, 1e-300, cfg) == cfg.max_batch
