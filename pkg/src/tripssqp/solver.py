"""Trust-region interior-point stochastic SQP and its fixed-sampling baseline.

:func:`solve` runs the adaptive-sampling method: every iteration draws a
gradient with a radius-dependent batch, tests the stationarity gate, computes
a trust-region step, adjusts the merit parameter, draws objective estimates
at both points and accepts or rejects with the ratio test.
:func:`solve_fully_stochastic` is the fixed-sampling counterpart: one
gradient sample per iteration, a radius generated from ``||Q_bar||`` and no
acceptance test.

Budget accounting (charged per iteration, ``D = d + n``, ``K = m + n``):

* Hessian construction: ``d`` for Id, ``d^2`` for SR1 / EstH / AveH;
* forming and factoring ``A A^T`` (only when ``(x, s)`` changed): ``K^2 D + K^3 // 3``;
* each null-space projection: ``2 K D + 2 K^2``;
* each product with a dense ``H``: ``d^2`` (diagonal products are O(d) and free);
* spectral norm of a dense ``H``: ``d^2``.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (ConfigError, DomainError, MeritDivergenceError, NonFiniteError,
                     SingularConstraintError, StalledError)
from .hessians import HessianModel
from .kkt import (build_block, evaluate_point, kkt_reference_scale, project_nullspace,
                  relative_kkt_residual)
from .merit import MeritState, actual_reduction, merit_loop, pred_threshold, prediction_parts
from .oracle import (OracleConfig, estimate_value_pair, gradient_batch_size, kappa_f_bound,
                     sample_gradient, value_batch_size)
from .problems import NoiseModel, ProblemInstance
from .steps import compute_step
from .trace import IterationRecord, RunTrace

__all__ = [
    "SolverConfig",
    "SolverState",
    "BarrierSchedule",
    "parse_schedule",
    "IterationDetail",
    "initialize",
    "iterate_once",
    "iterate_fully_stochastic",
    "solve",
    "solve_fully_stochastic",
    "fully_stochastic_radius",
    "STATUSES",
    "BUDGET_KINDS",
]

STATUSES = ("running", "converged", "budget-exhausted", "singular", "merit-divergence",
            "non-finite", "stalled")
BUDGET_KINDS = ("iterations", "flops", "gradient-evaluations", "epochs")

_SCHEDULE_RE = re.compile(r"^\s*(geom|power)\s*\(\s*([0-9.eE+-]+)\s*\)\s*$")


@dataclass(frozen=True)
class BarrierSchedule:
    """``geom(q)``: ``theta_k = q^k``; ``power(p)``: ``theta_k = max(k, 1)^-p``."""

    kind: str
    param: float

    def __call__(self, k):
        if self.kind == "geom":
            return self.param ** k
        return max(k, 1) ** (-self.param)

    def __str__(self):
        return f"{self.kind}({self.param:g})"


def parse_schedule(text) -> BarrierSchedule:
    if isinstance(text, BarrierSchedule):
        return text
    m = _SCHEDULE_RE.match(str(text))
    if not m:
        raise ConfigError(f"bad barrier schedule {text!r}; use geom(q) or power(p)")
    kind, param = m.group(1), float(m.group(2))
    if kind == "geom" and not 0.0 < param < 1.0:
        raise ConfigError("geom(q) needs 0 < q < 1")
    if kind == "power" and not param > 0.0:
        raise ConfigError("power(p) needs p > 0")
    return BarrierSchedule(kind, param)


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 0.6
    zeta: float = 0.5
    eps_s: float = 0.9
    kappa_fcd: float = 1.0
    Delta_max: float = 10.0
    rho: float = 1.5
    gamma: float = 1.5
    Delta_0: float = 1.0
    eps_bar_0: float = 1.0
    mu_bar_0: float = 1.0
    barrier_schedule: str = "geom(0.9999)"
    max_iters: int = 10_000
    budget: str = "iterations"
    budget_limit: Optional[float] = None
    tol_rel_kkt: float = 1e-4
    s_min: float = 1e-2
    mu_cap: float = 1e10
    diagnostics: bool = False
    # fixed-sampling baseline
    fs_zeta: float = 10.0
    fs_delta: float = 10.0
    fs_beta: float = 0.5
    fs_threshold: str = "positive"

    def __post_init__(self):
        for name in ("eta", "zeta", "eps_s"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if not 0.0 < self.kappa_fcd <= 1.0:
            raise ConfigError("kappa_fcd must lie in (0, 1]")
        if not (self.rho > 1.0 and self.gamma > 1.0 and self.Delta_max > 0.0):
            raise ConfigError("need rho > 1, gamma > 1, Delta_max > 0")
        if not 0.0 < self.Delta_0 <= self.Delta_max:
            raise ConfigError("Delta_0 must lie in (0, Delta_max]")
        if not (self.eps_bar_0 > 0.0 and self.mu_bar_0 > 0.0 and self.s_min > 0.0):
            raise ConfigError("eps_bar_0, mu_bar_0 and s_min must be positive")
        if self.budget not in BUDGET_KINDS:
            raise ConfigError(f"budget must be one of {BUDGET_KINDS}")
        if self.fs_threshold not in ("positive", "negated"):
            raise ConfigError("fs_threshold must be 'positive' or 'negated'")
        if int(self.max_iters) < 0:
            raise ConfigError("max_iters must be non-negative")
        parse_schedule(self.barrier_schedule)

    @property
    def schedule(self) -> BarrierSchedule:
        return parse_schedule(self.barrier_schedule)

    def check_oracle(self, oracle: OracleConfig):
        bound = kappa_f_bound(self.kappa_fcd, self.eps_s, self.eta, self.Delta_max)
        if oracle.kappa_f > bound * (1.0 + 1e-12):
            raise ConfigError(f"kappa_f={oracle.kappa_f:g} exceeds the admissible bound {bound:g}")


@dataclass
class SolverState:
    x: np.ndarray
    s: np.ndarray
    Delta: float
    eps_bar: float
    mu_bar: float
    theta: float
    k: int = 0
    status: str = "running"
    rel_kkt: float = math.nan
    ref_scale: float = 1.0
    point: object = field(default=None, repr=False)
    block: object = field(default=None, repr=False)
    # fully-stochastic baseline keeps its merit parameter here too
    used: dict = field(default_factory=lambda: {"flops": 0, "grad_evals": 0, "samples": 0,
                                                "iterations": 0})


@dataclass
class IterationDetail:
    """Everything computed in one iteration, handed to an optional monitor."""

    k: int
    x: np.ndarray
    s: np.ndarray
    theta: float
    Delta: float
    g_bar: np.ndarray
    psi: np.ndarray
    block: object
    W: object
    Q_bar_norm: float
    gate_passed: bool
    step: object = None
    threshold: float = math.nan
    pred: float = math.nan
    ared: float = math.nan
    accepted: bool = False
    x_next: np.ndarray = None
    s_next: np.ndarray = None


def initialize(problem: ProblemInstance, config: SolverConfig) -> SolverState:
    x = np.array(problem.x0, dtype=float)
    h0 = np.asarray(problem.eval_h(x), dtype=float)
    s = np.maximum(-h0, config.s_min)
    theta = config.schedule(0)
    state = SolverState(x=x, s=s, Delta=config.Delta_0, eps_bar=config.eps_bar_0,
                        mu_bar=config.mu_bar_0, theta=theta)
    state.point = evaluate_point(problem, x)
    state.ref_scale = kkt_reference_scale(problem, x, s, theta, state.point)
    state.rel_kkt = relative_kkt_residual(problem, x, s, theta, state.ref_scale, state.point)
    return state


def _block_flops(problem):
    D = problem.dim_x + problem.dim_ineq
    K = problem.dim_eq + problem.dim_ineq
    return K * K * D + K ** 3 // 3, 2 * K * D + 2 * K * K


def _ensure_block(state, problem):
    """Return ``(block, flops)`` for the current ``(x, s)``, rebuilding if stale."""
    if state.block is None:
        if state.point is None:
            state.point = evaluate_point(problem, state.x)
        state.block = build_block(problem, state.x, state.s, state.point)
        return state.block, _block_flops(problem)[0]
    return state.block, 0


def _hessian_flops(model, W, d):
    dense = W.H is not None
    return model.flop_cost(d) + (d * d if dense else 0), (d * d if dense else 0)


def _budget_units(config, problem, charges):
    if config.budget == "iterations":
        return charges["iterations"]
    if config.budget == "flops":
        return charges["flops"]
    if config.budget == "gradient-evaluations":
        return charges["grad_evals"]
    if problem.n_samples is None:
        raise ConfigError("epoch budgets need a finite-sum problem")
    return charges["samples"] / problem.n_samples


def _budget_limit(config):
    if config.budget_limit is not None:
        return config.budget_limit
    return config.max_iters if config.budget == "iterations" else math.inf


def _finish_iteration(state, problem, config, record):
    """Advance the barrier parameter, update residual, charges and status."""
    state.k += 1
    state.theta = config.schedule(state.k)
    if state.point is None:
        state.point = evaluate_point(problem, state.x)
    state.rel_kkt = relative_kkt_residual(problem, state.x, state.s, state.theta,
                                          state.ref_scale, state.point)
    record.rel_kkt = state.rel_kkt
    if not (math.isfinite(state.rel_kkt) and np.all(np.isfinite(state.x))
            and np.all(np.isfinite(state.s))):
        raise NonFiniteError(f"iterate or residual became non-finite at iteration {state.k}")
    for key, val in (("flops", record.flops), ("grad_evals", record.grad_evals),
                     ("samples", record.samples), ("iterations", 1)):
        state.used[key] += val
    record.charge = {"iterations": 1, "flops": record.flops,
                     "gradient-evaluations": record.grad_evals,
                     "epochs": record.samples}[config.budget]
    if state.rel_kkt <= config.tol_rel_kkt:
        state.status = "converged"
    elif (_budget_units(config, problem, state.used) >= _budget_limit(config)
          or state.k >= config.max_iters):
        state.status = "budget-exhausted"


def _true_Q_norm(problem, state, block):
    n = problem.dim_ineq
    psi = np.concatenate([state.point.grad, -state.theta * np.ones(n)])
    return float(np.linalg.norm(np.concatenate([project_nullspace(block, psi), block.theta_vec])))


def iterate_once(state: SolverState, problem: ProblemInstance, noise: NoiseModel,
                 config: SolverConfig, oracle_config: OracleConfig, hessian_model: HessianModel,
                 monitor: Optional[Callable] = None):
    """One adaptive-sampling iteration; mutates and returns ``(state, record)``."""
    d, n = problem.dim_x, problem.dim_ineq
    k, theta, Delta = state.k, state.theta, state.Delta
    x, s = state.x, state.s

    batch_g = gradient_batch_size(Delta, oracle_config)
    g_bar = sample_gradient(problem, noise, x, batch_g, iteration=k)
    block, flops = _ensure_block(state, problem)
    _, proj_flops = _block_flops(problem)
    psi = np.concatenate([g_bar, -theta * np.ones(n)])
    Pz = project_nullspace(block, psi)
    Q_norm = float(np.sqrt(Pz @ Pz + block.theta_vec @ block.theta_vec))
    W = hessian_model.build(problem, noise, x, s, theta, g_bar, state.point, iteration=k)
    h_flops, mv_flops = _hessian_flops(hessian_model, W, d)
    flops += proj_flops + h_flops
    samples = batch_g + hessian_model.samples_per_build()

    record = IterationRecord(
        k=k, theta=theta, Delta=Delta, eps_bar=state.eps_bar, mu_bar=state.mu_bar,
        batch_g=batch_g, batch_f=0, norm_Q_bar=Q_norm, rel_kkt=math.nan,
        classification="gate-fail-unsuccessful", hessian_norm=W.norm if W.H is not None else 1.0,
        step_norm=0.0, grad_evals=batch_g,
    )
    if config.diagnostics:
        record.norm_Q_true = _true_Q_norm(problem, state, block)
    detail = None
    if monitor is not None:
        detail = IterationDetail(k=k, x=x, s=s, theta=theta, Delta=Delta, g_bar=g_bar, psi=psi,
                                 block=block, W=W, Q_bar_norm=Q_norm, gate_passed=False)

    gamma = config.gamma
    if Q_norm / max(1.0, W.norm) < config.eta * Delta:
        state.Delta = Delta / gamma
        state.eps_bar = state.eps_bar / gamma
    else:
        step = compute_step(block, W, psi, Delta, config.zeta, config.eps_s, config.kappa_fcd)
        flops += step.n_projections * proj_flops + step.n_W_products * mv_flops
        x_t = x + step.dx
        s_t = s + s * step.ds_tilde
        if noise.exact and np.array_equal(x_t, x) and np.array_equal(s_t, s):
            # exact evaluations give Ared = 0 here, so the ratio test fails and every
            # later radius is smaller still; noisy value estimates can still recover
            raise StalledError(f"step of norm {np.linalg.norm(step.d_tilde):.1e} is below "
                               f"floating-point resolution at iteration {k}")
        model, feas = prediction_parts(psi, W, block, step)
        flops += mv_flops
        threshold = pred_threshold(Q_norm, W.norm, Delta, config.eps_s, config.kappa_fcd)
        merit = MeritState(state.mu_bar, config.rho, config.mu_cap)
        pred, turns = merit_loop(merit, threshold, lambda mu: model + mu * feas)
        state.mu_bar = merit.mu_bar

        est_k, est_t = estimate_value_pair(problem, noise, x, x_t, Delta, state.eps_bar,
                                           oracle_config, iteration=k)
        point_t = evaluate_point(problem, x_t)
        ared = actual_reduction(est_k.value, est_t.value, s, s_t,
                                (state.point.c, state.point.h), (point_t.c, point_t.h),
                                theta, state.mu_bar)
        samples += 2 * est_k.batch_size
        record.batch_f = est_k.batch_size
        record.pred, record.ared, record.merit_turns = pred, ared, turns
        record.gamma_bar = step.gamma_bar
        record.mu_bar = state.mu_bar
        record.step_norm = float(np.linalg.norm(step.d_tilde))

        accepted = ared <= config.eta * pred
        if accepted:
            state.x, state.s = x_t, s_t
            state.point, state.block = point_t, None
            state.Delta = min(gamma * Delta, config.Delta_max)
            if -pred >= state.eps_bar:
                state.eps_bar = gamma * state.eps_bar
                record.classification = "reliable"
            else:
                state.eps_bar = state.eps_bar / gamma
                record.classification = "unreliable"
        else:
            state.Delta = Delta / gamma
            state.eps_bar = state.eps_bar / gamma
            record.classification = "ratio-fail-unsuccessful"
        if detail is not None:
            detail.gate_passed = True
            detail.step, detail.threshold, detail.pred, detail.ared = step, threshold, pred, ared
            detail.accepted = accepted
            detail.x_next, detail.s_next = x_t, s_t

    record.flops, record.samples = int(flops), int(samples)
    _finish_iteration(state, problem, config, record)
    if monitor is not None:
        monitor(detail, record)
    return state, record


def fully_stochastic_radius(Q_norm, beta, zeta, delta):
    """Radius ``beta * r(||Q||)`` with the continuous three-piece rule

    ``r = zeta ||Q||`` below ``1/zeta``, ``1`` on ``[1/zeta, delta]`` and
    ``||Q|| / delta`` above ``delta``.
    """
    if Q_norm < 1.0 / zeta:
        r = zeta * Q_norm
    elif Q_norm <= delta:
        r = 1.0
    else:
        r = Q_norm / delta
    return beta * r


def iterate_fully_stochastic(state: SolverState, problem: ProblemInstance, noise: NoiseModel,
                             config: SolverConfig, hessian_model: HessianModel,
                             monitor: Optional[Callable] = None):
    """One fixed-sampling iteration (single gradient sample, always move)."""
    d, n = problem.dim_x, problem.dim_ineq
    k, theta, x, s = state.k, state.theta, state.x, state.s

    g_bar = sample_gradient(problem, noise, x, 1, iteration=k)
    block, flops = _ensure_block(state, problem)
    _, proj_flops = _block_flops(problem)
    psi = np.concatenate([g_bar, -theta * np.ones(n)])
    Pz = project_nullspace(block, psi)
    Q_norm = float(np.sqrt(Pz @ Pz + block.theta_vec @ block.theta_vec))
    W = hessian_model.build(problem, noise, x, s, theta, g_bar, state.point, iteration=k)
    h_flops, mv_flops = _hessian_flops(hessian_model, W, d)
    flops += proj_flops + h_flops

    Delta = fully_stochastic_radius(Q_norm, config.fs_beta, config.fs_zeta, config.fs_delta)
    state.Delta = Delta
    record = IterationRecord(
        k=k, theta=theta, Delta=Delta, eps_bar=math.nan, mu_bar=state.mu_bar, batch_g=1,
        batch_f=0, norm_Q_bar=Q_norm, rel_kkt=math.nan, classification="accepted",
        hessian_norm=W.norm if W.H is not None else 1.0, step_norm=0.0, grad_evals=1,
    )
    if config.diagnostics:
        record.norm_Q_true = _true_Q_norm(problem, state, block)

    step = None
    threshold = pred = math.nan
    if Delta > 0.0:
        step = compute_step(block, W, psi, Delta, config.zeta, config.eps_s, config.kappa_fcd)
        flops += step.n_projections * proj_flops + step.n_W_products * mv_flops
        model, feas = prediction_parts(psi, W, block, step)
        eps_s = config.eps_s
        bound = Q_norm * min(Delta, eps_s) + 0.5 * W.norm * min(Delta ** 2, eps_s ** 2)
        threshold = bound if config.fs_threshold == "positive" else -bound
        merit = MeritState(state.mu_bar, config.rho, config.mu_cap)
        pred, turns = merit_loop(merit, threshold, lambda mu: model + mu * feas)
        state.mu_bar = merit.mu_bar
        record.pred, record.merit_turns, record.mu_bar = pred, turns, state.mu_bar
        record.gamma_bar = step.gamma_bar
        record.step_norm = float(np.linalg.norm(step.d_tilde))
        if record.step_norm > 0.0:
            state.x = x + step.dx
            state.s = s + s * step.ds_tilde
            state.point, state.block = evaluate_point(problem, state.x), None

    record.flops = int(flops)
    record.samples = 1 + hessian_model.samples_per_build()
    _finish_iteration(state, problem, config, record)
    if monitor is not None:
        detail = IterationDetail(k=k, x=x, s=s, theta=theta, Delta=Delta, g_bar=g_bar, psi=psi,
                                 block=block, W=W, Q_bar_norm=Q_norm, gate_passed=True,
                                 step=step, threshold=threshold, pred=pred, accepted=True,
                                 x_next=state.x, s_next=state.s)
        monitor(detail, record)
    return state, record


def _config_echo(problem, noise, config, oracle_config, hessian_kind, method, seed):
    return {
        "method": method,
        "problem": problem.name,
        "hessian": hessian_kind,
        "seed": seed,
        "noise": dataclasses.asdict(noise),
        "solver": dataclasses.asdict(config),
        "oracle": None if oracle_config is None else dataclasses.asdict(oracle_config),
    }


def _run(step_fn, problem, noise, config, hessian, seed, method, oracle_config, monitor):
    if seed is not None:
        noise = dataclasses.replace(noise, seed=int(seed))
    model = hessian if isinstance(hessian, HessianModel) else HessianModel(hessian)
    trace = RunTrace(budget_kind=config.budget,
                     config=_config_echo(problem, noise, config, oracle_config, model.kind,
                                         method, noise.seed))
    if config.budget == "epochs" and problem.n_samples is None:
        raise ConfigError("epoch budgets need a finite-sum problem")
    try:
        state = initialize(problem, config)
    except SingularConstraintError as exc:
        trace.status, trace.message = "singular", str(exc)
        return None, trace
    except (NonFiniteError, DomainError) as exc:
        trace.status, trace.message = "non-finite", str(exc)
        return None, trace
    if state.rel_kkt <= config.tol_rel_kkt:
        state.status = "converged"
    elif config.max_iters == 0 or _budget_limit(config) <= 0:
        state.status = "budget-exhausted"
    while state.status == "running":
        try:
            state, record = step_fn(state, noise, model, monitor)
        except SingularConstraintError as exc:
            state.status, trace.message = "singular", str(exc)
            break
        except MeritDivergenceError as exc:
            state.status, trace.message = "merit-divergence", str(exc)
            break
        except (NonFiniteError, DomainError) as exc:
            state.status, trace.message = "non-finite", str(exc)
            break
        except StalledError as exc:
            state.status, trace.message = "stalled", str(exc)
            break
        trace.records.append(record)
    trace.status = state.status
    trace.total_flops = state.used["flops"]
    trace.total_grad_evals = state.used["grad_evals"]
    trace.total_samples = state.used["samples"]
    trace.budget_used = _budget_units(config, problem, state.used)
    trace.final_rel_kkt = state.rel_kkt
    return state, trace


def solve(problem: ProblemInstance, noise: NoiseModel = NoiseModel(),
          config: SolverConfig = SolverConfig(), oracle_config: OracleConfig = OracleConfig(),
          hessian="Id", seed=None, monitor=None):
    """Run the adaptive-sampling method until convergence or budget exhaustion.

    Returns ``(final_state, trace)``; failures are reported through
    ``trace.status`` rather than raised.  ``final_state`` is None when the
    starting point itself cannot be evaluated.
    """
    config.check_oracle(oracle_config)

    def step_fn(state, noise_, model, mon):
        return iterate_once(state, problem, noise_, config, oracle_config, model, mon)

    return _run(step_fn, problem, noise, config, hessian, seed, "TR-IP-SSQP", oracle_config,
                monitor)


def solve_fully_stochastic(problem: ProblemInstance, noise: NoiseModel = NoiseModel(),
                           config: SolverConfig = SolverConfig(), hessian="Id", seed=None,
                           monitor=None):
    def step_fn(state, noise_, model, mon):
        return iterate_fully_stochastic(state, problem, noise_, config, model, mon)

    return _run(step_fn, problem, noise, config, hessian, seed, "Fully-TR-IP-SSQP", None, monitor)
