import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import lagrangian_bound_constant, random_block, random_qp
from tripssqp.errors import DomainError, SingularConstraintError
from tripssqp.kkt import (build_block, evaluate_point, kkt_reference_scale, kkt_vector,
                          project_nullspace, relative_kkt_residual, stationarity_measure,
                          true_multipliers)
from tripssqp.problems import ProblemInstance
from tripssqp.suite import SUITE_NAMES, get_problem


def _linear_problem(G, J, c0=None, h0=None, grad=None):
    G = np.atleast_2d(np.asarray(G, dtype=float)).reshape(-1, np.shape(J)[-1])
    J = np.atleast_2d(np.asarray(J, dtype=float))
    m, d = G.shape
    n = J.shape[0]
    c0 = np.zeros(m) if c0 is None else np.asarray(c0, float)
    h0 = -np.ones(n) if h0 is None else np.asarray(h0, float)
    grad = np.zeros(d) if grad is None else np.asarray(grad, float)
    return ProblemInstance(
        name="lin", dim_x=d, dim_eq=m, dim_ineq=n,
        eval_f=lambda x: float(grad @ x), eval_grad_f=lambda x: grad,
        eval_c=lambda x: G @ x + c0, eval_G=lambda x: G,
        eval_h=lambda x: J @ x + h0, eval_J=lambda x: J, x0=np.zeros(d))


def _dense_projector(A):
    return np.eye(A.shape[1]) - np.linalg.pinv(A) @ A


def test_build_block_scalar_example():
    p = _linear_problem(np.zeros((0, 1)), [[2.0]])
    blk = build_block(p, np.zeros(1), np.array([3.0]))
    np.testing.assert_array_equal(blk.A, [[2.0, 3.0]])
    np.testing.assert_allclose(blk.A @ blk.A.T, [[13.0]])
    np.testing.assert_allclose(blk.chol_AAt @ blk.chol_AAt.T, [[13.0]])


def test_build_block_identity_gram():
    m, n, d = 2, 3, 4
    G = np.zeros((m, d))
    G[:, :m] = np.eye(m)
    p = _linear_problem(G, np.zeros((n, d)))
    blk = build_block(p, np.zeros(d), np.ones(n))
    np.testing.assert_allclose(blk.A @ blk.A.T, np.eye(m + n))
    np.testing.assert_allclose(blk.A[:m, :d], G)
    np.testing.assert_allclose(blk.A[m:, d:], np.eye(n))


def test_build_block_right_inverse(rng):
    _, _, _, blk = random_block(rng, d=3, m=1, n=2)  # 3 x 5 block
    y = rng.standard_normal(3)
    z = blk.A.T @ blk.solve_AAt(y)
    np.testing.assert_allclose(blk.A @ z, y, atol=1e-10)
    np.testing.assert_allclose(z, np.linalg.pinv(blk.A) @ y, atol=1e-10)


def test_build_block_errors():
    p = _linear_problem(np.zeros((1, 2)), [[1.0, 0.0]])
    with pytest.raises(SingularConstraintError):
        build_block(p, np.zeros(2), np.ones(1))  # G = 0
    q = _linear_problem(np.zeros((0, 2)), [[1.0, 0.0]])
    with pytest.raises(DomainError):
        build_block(q, np.zeros(2), np.zeros(1))


def test_projection_examples():
    p = _linear_problem(np.zeros((0, 1)), [[0.0]])
    # A = [1 s] with negligible s is the coordinate case A = [1 0]
    blk = build_block(_linear_problem(np.zeros((0, 1)), [[1.0]]), np.zeros(1), np.array([1e-300]))
    np.testing.assert_allclose(project_nullspace(blk, np.array([3.0, 4.0])), [0.0, 4.0],
                               atol=1e-12)
    blk = build_block(p, np.zeros(1), np.ones(1))  # A = [0 1]
    np.testing.assert_allclose(project_nullspace(blk, np.array([3.0, 4.0])), [3.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2), st.integers(1, 3))
def test_projection_matches_svd_oracle(seed, m, n):
    rng = np.random.default_rng(seed)
    _, _, _, blk = random_block(rng, d=m + 2, m=m, n=n)
    v = rng.standard_normal(blk.A.shape[1])
    Pv = project_nullspace(blk, v)
    scale = np.linalg.norm(v)
    np.testing.assert_allclose(Pv, _dense_projector(blk.A) @ v, atol=1e-10 * scale)
    assert np.linalg.norm(blk.A @ Pv) <= 1e-10 * scale
    np.testing.assert_allclose(project_nullspace(blk, Pv), Pv, atol=1e-10 * scale)
    w = rng.standard_normal(blk.A.shape[0])
    assert np.linalg.norm(project_nullspace(blk, blk.A.T @ w)) <= 1e-10 * np.linalg.norm(w) * \
        np.linalg.norm(blk.A)


def test_true_multiplier_examples(rng):
    p, x, s, _ = random_block(rng, d=4, m=2, n=2)
    lam, tau = true_multipliers(p, x, s, 0.0)
    np.testing.assert_array_equal(tau, 0.0)
    G, g = p.eval_G(x), p.eval_grad_f(x)
    np.testing.assert_allclose(lam, -np.linalg.solve(G @ G.T, G @ g), rtol=1e-10)
    _, tau = true_multipliers(p, x, 0.7 * np.ones(2), 0.7)
    np.testing.assert_allclose(tau, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-6, 10.0))
def test_lambda_is_least_squares_minimizer(seed, theta):
    rng = np.random.default_rng(seed)
    p, x, s, _ = random_block(rng, d=5, m=2, n=3)
    lam, tau = true_multipliers(p, x, s, theta)
    assert np.all(tau > 0)
    G, J = p.eval_G(x), p.eval_J(x)
    r = p.eval_grad_f(x) + theta * J.T @ (1.0 / s)
    ref = np.linalg.lstsq(G.T, -r, rcond=None)[0]
    np.testing.assert_allclose(lam, ref, rtol=1e-10, atol=1e-10 * np.linalg.norm(r))


def test_multipliers_without_equalities(rng):
    p, x, s, _ = random_block(rng, d=3, m=0, n=2)
    lam, tau = true_multipliers(p, x, s, 0.5)
    assert lam.shape == (0,)
    np.testing.assert_allclose(tau, 0.5 / s)


def test_stationarity_measure_examples(rng):
    p, x, s, blk = random_block(rng, d=4, m=1, n=2)
    # feasible point with psi in the row space of A -> Q = 0
    feasible = build_block(_linear_problem(p.eval_G(x), p.eval_J(x),
                                           c0=-p.eval_G(x) @ x, h0=-p.eval_J(x) @ x - s),
                           x, s)
    np.testing.assert_allclose(feasible.theta_vec, 0.0, atol=1e-12)
    psi = feasible.A.T @ rng.standard_normal(3)
    assert np.linalg.norm(stationarity_measure(feasible, psi)) <= 1e-10
    assert np.linalg.norm(stationarity_measure(feasible, np.zeros(6))) <= 1e-12
    psi = rng.standard_normal(6)
    dense = np.concatenate([_dense_projector(blk.A) @ psi, blk.theta_vec])
    assert np.linalg.norm(stationarity_measure(blk, psi)) == \
        pytest.approx(np.linalg.norm(dense), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-4, 2.0), st.integers(0, 2))
def test_lagrangian_gradient_bounded_by_projected_gradient(seed, theta, m):
    rng = np.random.default_rng(seed)
    p, x, s, blk = random_block(rng, d=4, m=m, n=2)
    lam, tau = true_multipliers(p, x, s, theta)
    g, G, J = p.eval_grad_f(x), p.eval_G(x), p.eval_J(x)
    grad_lag = g + G.T @ lam + J.T @ tau
    psi = np.concatenate([g, -theta * np.ones(2)])
    Ppsi = project_nullspace(blk, psi)
    # grad L = (P_G, -P_G J^T S^-1) P psi exactly
    PG = np.eye(4) - (np.linalg.pinv(G) @ G if m else 0.0)
    M = np.hstack([PG, -PG @ J.T @ np.diag(1.0 / s)])
    np.testing.assert_allclose(grad_lag, M @ Ppsi, atol=1e-10 * np.linalg.norm(psi))
    bound = lagrangian_bound_constant(G, J, s) * np.linalg.norm(Ppsi)
    assert np.linalg.norm(grad_lag) <= bound * (1 + 1e-10) + 1e-12


@pytest.mark.parametrize("name", SUITE_NAMES)
def test_relative_residual_small_at_known_solution(name):
    p = get_problem(name)
    theta = 1e-12
    lam, tau = p.known_multipliers
    h = p.eval_h(p.known_solution)
    # slack on the barrier path: s = theta / tau where active, -h elsewhere
    s = np.where(tau > 0, theta / np.maximum(tau, 1e-300), -h)
    assert np.all(s > 0)
    assert relative_kkt_residual(p, p.known_solution, s, theta, 1.0) <= 1e-6


def test_reference_scale_clamp():
    p = _linear_problem(np.zeros((0, 1)), [[1.0]], h0=[-1.0], grad=[0.3])
    # residual vector at x=0, s=1, theta=0: (0.3; min(1, 0)) -> norm 0.3 -> clamp to 1
    assert kkt_reference_scale(p, np.zeros(1), np.ones(1), 0.0) == 1.0
    big = _linear_problem(np.zeros((0, 1)), [[1.0]], h0=[-1.0], grad=[30.0])
    assert kkt_reference_scale(big, np.zeros(1), np.ones(1), 0.0) == pytest.approx(30.0)


def test_complementarity_inactive_constraint():
    p = _linear_problem(np.zeros((0, 1)), [[0.0]], h0=[-1.0])
    v = kkt_vector(p, np.zeros(1), np.ones(1), 0.0)
    assert v[-1] == 0.0  # min(1, 0)


def test_point_cache_reuses_gram_factor(rng):
    p = random_qp(rng, d=4, m=2, n=1)
    pt = evaluate_point(p, p.x0)
    true_multipliers(p, p.x0, np.ones(1), 0.1, point=pt)
    Li = pt.cache["chol_GGt_inv"]
    true_multipliers(p, p.x0, np.ones(1), 0.2, point=pt)
    assert pt.cache["chol_GGt_inv"] is Li
