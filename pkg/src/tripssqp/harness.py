"""Multi-run experiment sweeps, result tables, residual boxes and performance profiles."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, TripSSQPError
from .hessians import HESSIAN_KINDS
from .logistic import LogisticProblemConfig, make_logistic_problem
from .oracle import OracleConfig
from .problems import NoiseModel
from .solver import BUDGET_KINDS, SolverConfig, solve, solve_fully_stochastic
from .suite import SUITE_NAMES, get_problem

__all__ = [
    "EXPERIMENTS",
    "ALGORITHMS",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "run_seed",
    "build_instances",
    "run_experiment",
    "performance_profile",
    "residual_summary",
    "load_config",
    "config_from_dict",
    "RESULTS_SCHEMA_VERSION",
]

RESULTS_SCHEMA_VERSION = 1

EXPERIMENTS = ("exp1-barrier-schedules", "exp2-hessians-flops", "exp3-adaptive-vs-fixed",
               "logistic")

_ALGO_ALIASES = {
    "adaptive": "adaptive", "TR-IP-SSQP": "adaptive",
    "fixed": "fixed", "Fully-TR-IP-SSQP": "fixed",
}
ALGORITHMS = ("adaptive", "fixed")

# desk-scale defaults: (budget kind, limit, oracle max batch)
_EXPERIMENT_DEFAULTS = {
    "exp1-barrier-schedules": ("iterations", 10_000, 10_000),
    "exp2-hessians-flops": ("flops", 1_000_000, 10_000),
    "exp3-adaptive-vs-fixed": ("gradient-evaluations", 100_000, 1_000),
    "logistic": ("epochs", 200, 10_000),
}


def _method_id(algorithm, hessian):
    return f"{algorithm}-{hessian}"


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep over instances x methods x noise levels x seeds.

    ``methods`` is a list of ``(algorithm, hessian)`` pairs with algorithm in
    ``{"adaptive", "fixed"}``.  ``budget`` / ``budget_limit`` default per
    experiment; ``solver`` and ``oracle`` hold field overrides for
    :class:`SolverConfig` / :class:`OracleConfig`.
    """

    experiment: str = "exp1-barrier-schedules"
    noise_levels: tuple = (1e-8,)
    methods: tuple = (("adaptive", "Id"),)
    runs_per_instance: int = 5
    budget: Optional[str] = None
    budget_limit: Optional[float] = None
    problems: tuple = SUITE_NAMES
    noise_kind: Optional[str] = None
    seed: int = 0
    solver: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    logistic: dict = field(default_factory=dict)
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        methods = []
        for m in self.methods:
            if isinstance(m, str):
                algo, _, hess = m.rpartition("-")
            else:
                algo, hess = m
            algo = _ALGO_ALIASES.get(algo)
            if algo is None or hess not in HESSIAN_KINDS:
                raise ConfigError(f"bad method {m!r}; expected (adaptive|fixed, {HESSIAN_KINDS})")
            methods.append((algo, hess))
        object.__setattr__(self, "methods", tuple(methods))
        object.__setattr__(self, "noise_levels", tuple(float(v) for v in self.noise_levels))
        object.__setattr__(self, "problems", tuple(self.problems))
        if not self.methods or not self.noise_levels:
            raise ConfigError("methods and noise_levels must be non-empty")
        if any(v < 0 for v in self.noise_levels):
            raise ConfigError("noise levels must be non-negative")
        if int(self.runs_per_instance) < 1:
            raise ConfigError("runs_per_instance must be >= 1")
        if self.budget is not None and self.budget not in BUDGET_KINDS:
            raise ConfigError(f"budget must be one of {BUDGET_KINDS}")
        if self.experiment != "logistic":
            unknown = set(self.problems) - set(SUITE_NAMES)
            if unknown:
                raise ConfigError(f"unknown problems {sorted(unknown)}")
        # surface bad overrides now rather than mid-sweep
        self.solver_config()
        self.oracle_config()

    @property
    def budget_kind(self):
        return self.budget or _EXPERIMENT_DEFAULTS[self.experiment][0]

    @property
    def budget_value(self):
        if self.budget_limit is not None:
            return float(self.budget_limit)
        if self.budget is None or self.budget == _EXPERIMENT_DEFAULTS[self.experiment][0]:
            return float(_EXPERIMENT_DEFAULTS[self.experiment][1])
        raise ConfigError("budget_limit is required when overriding the budget kind")

    def solver_config(self) -> SolverConfig:
        kw = dict(self.solver)
        kw.setdefault("budget", self.budget_kind)
        kw.setdefault("budget_limit", self.budget_value)
        if kw["budget"] != "iterations":
            kw.setdefault("max_iters", 10 ** 9)
        else:
            kw.setdefault("max_iters", int(kw["budget_limit"]))
        try:
            return SolverConfig(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad solver option: {exc}") from None

    def oracle_config(self) -> OracleConfig:
        kw = dict(self.oracle)
        kw.setdefault("max_batch", _EXPERIMENT_DEFAULTS[self.experiment][2])
        try:
            return OracleConfig(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad oracle option: {exc}") from None

    def noise(self, sigma2, seed):
        kind = self.noise_kind or ("subsample" if self.experiment == "logistic" else "gaussian")
        if kind in ("subsample", "subsample-dataset") and sigma2 == 0.0:
            kind = "gaussian"  # sigma2 = 0 always means exact evaluations
        return NoiseModel(sigma2=sigma2, kind=kind, seed=seed)


@dataclass(frozen=True)
class ResultRow:
    problem: str
    method: str
    noise: float
    seed: int
    final_rel_kkt: float
    iterations: int
    budget_used: float
    status: str
    budget_to_converge: float = math.nan


class ResultTable:
    """Rows of one sweep, ordered by (instance, method, noise, run)."""

    columns = [f.name for f in dataclasses.fields(ResultRow)]

    def __init__(self, rows=(), budget_kind="iterations"):
        self.rows = list(rows)
        self.budget_kind = budget_kind

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other):
        return isinstance(other, ResultTable) and self.to_csv() == other.to_csv()

    @property
    def failed(self):
        return [r for r in self.rows if r.status not in ("converged", "budget-exhausted")]

    def methods(self):
        return list(dict.fromkeys(r.method for r in self.rows))

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write(f"# tripssqp results schema v{RESULTS_SCHEMA_VERSION} "
                  f"budget_kind={self.budget_kind}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in dataclasses.astuple(r)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text):
        if "\n" in str(path_or_text):
            text = str(path_or_text)
        else:
            with open(path_or_text) as fh:
                text = fh.read()
        lines = text.splitlines()
        budget_kind = "iterations"
        if lines and lines[0].startswith("#"):
            for tok in lines[0].split():
                if tok.startswith("budget_kind="):
                    budget_kind = tok.split("=", 1)[1]
            lines = lines[1:]
        rows = []
        for rec in csv.DictReader(lines):
            try:
                rows.append(ResultRow(
                    problem=rec["problem"], method=rec["method"], noise=float(rec["noise"]),
                    seed=int(rec["seed"]), final_rel_kkt=float(rec["final_rel_kkt"]),
                    iterations=int(rec["iterations"]), budget_used=float(rec["budget_used"]),
                    status=rec["status"],
                    budget_to_converge=float(rec.get("budget_to_converge") or "nan")))
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"malformed results table: {exc}") from None
        return cls(rows, budget_kind)


def run_seed(master, instance, run):
    """Child seed for run ``run`` of instance ``instance``."""
    return int(np.random.SeedSequence([int(master), int(instance), int(run)]).generate_state(1)[0])


def build_instances(config: ExperimentConfig):
    if config.experiment == "logistic":
        kw = dict(config.logistic)
        try:
            lc = LogisticProblemConfig(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad logistic option: {exc}") from None
        return [make_logistic_problem(lc)]
    return [get_problem(name) for name in config.problems]


def _run_one(problem, method, noise, solver_config, oracle_config):
    algo, hess = method
    try:
        if algo == "adaptive":
            _, trace = solve(problem, noise, solver_config, oracle_config, hessian=hess)
        else:
            _, trace = solve_fully_stochastic(problem, noise, solver_config, hessian=hess)
    except TripSSQPError as exc:
        return "error", math.nan, 0, 0.0, str(exc)
    return trace.status, trace.final_rel_kkt, trace.iterations, trace.budget_used, trace.message


def run_experiment(config: ExperimentConfig, progress=None) -> ResultTable:
    """Run every (instance, method, noise, seed) combination sequentially.

    Per-run failures become status rows; the sweep never aborts.
    """
    instances = build_instances(config)
    sc, oc = config.solver_config(), config.oracle_config()
    rows = []
    for i, problem in enumerate(instances):
        for method in config.methods:
            for sigma2 in config.noise_levels:
                for r in range(config.runs_per_instance):
                    seed = run_seed(config.seed, i, r)
                    noise = config.noise(sigma2, seed)
                    status, rk, iters, used, _ = _run_one(problem, method, noise, sc, oc)
                    row = ResultRow(problem=problem.name, method=_method_id(*method),
                                    noise=sigma2, seed=seed, final_rel_kkt=float(rk),
                                    iterations=int(iters), budget_used=float(used),
                                    status=status,
                                    budget_to_converge=float(used) if status == "converged"
                                    else math.nan)
                    rows.append(row)
                    if progress is not None:
                        progress(row)
    return ResultTable(rows, config.budget_kind)


def performance_profile(table: ResultTable, budget_grid, noise=None):
    """Fraction of instances solved within each budget, per method.

    A run counts as solved at budget ``B`` if it converged using at most
    ``B``.  The per-instance indicator is averaged over seeds, so an instance
    solved in 3 of 5 runs contributes 0.6.  Returns ``{method: array}``.
    """
    grid = np.asarray(budget_grid, dtype=float)
    if grid.size and np.any(np.diff(grid) < 0):
        raise ConfigError("budget grid must be ascending")
    rows = [r for r in table.rows if noise is None or r.noise == noise]
    if not rows:
        raise ConfigError("empty result table")
    problems = list(dict.fromkeys(r.problem for r in rows))
    curves = {}
    for method in dict.fromkeys(r.method for r in rows):
        total = np.zeros(grid.size)
        for p in problems:
            runs = [r for r in rows if r.method == method and r.problem == p]
            if not runs:
                continue
            need = np.array([r.budget_to_converge if r.status == "converged" else np.inf
                             for r in runs])
            total += np.mean(need[None, :] <= grid[:, None], axis=1)
        curves[method] = total / len(problems)
    return curves


def residual_summary(table: ResultTable):
    """Box statistics of final residuals per (method, noise).

    Quartiles use linear interpolation between order statistics (numpy's
    default ``linear`` method).  Returns a list of dicts.
    """
    if not len(table):
        raise ConfigError("empty result table")
    groups = {}
    for r in table.rows:
        groups.setdefault((r.method, r.noise), []).append(r.final_rel_kkt)
    out = []
    for (method, noise), vals in groups.items():
        v = np.asarray(vals, dtype=float)
        v = v[np.isfinite(v)]
        qs = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0]) if v.size else [math.nan] * 5
        out.append({"method": method, "noise": noise, "count": int(v.size),
                    "min": float(qs[0]), "q1": float(qs[1]), "median": float(qs[2]),
                    "q3": float(qs[3]), "max": float(qs[4])})
    return out


def summary_csv(summary, path=None):
    buf = io.StringIO()
    buf.write(f"# tripssqp residual summary schema v{RESULTS_SCHEMA_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=["method", "noise", "count", "min", "q1", "median", "q3",
                                        "max"], lineterminator="\n")
    w.writeheader()
    w.writerows(summary)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def profile_csv(curves, budget_grid, path=None):
    buf = io.StringIO()
    buf.write(f"# tripssqp profile schema v{RESULTS_SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    methods = list(curves)
    w.writerow(["budget"] + methods)
    for j, b in enumerate(budget_grid):
        w.writerow([repr(float(b))] + [repr(float(curves[m][j])) for m in methods])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def default_budget_grid(table: ResultTable, points=50):
    """Log-spaced grid from the smallest converged budget to the largest budget used."""
    used = [r.budget_used for r in table.rows if r.budget_used > 0]
    conv = [r.budget_to_converge for r in table.rows if r.status == "converged"]
    if not used:
        return np.array([1.0])
    lo = max(min(conv + used), 1e-12)
    hi = max(used)
    return np.geomspace(lo, hi, points) if hi > lo else np.array([hi])


_TOP_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def config_from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section, cls in (("solver", SolverConfig), ("oracle", OracleConfig),
                         ("logistic", LogisticProblemConfig)):
        sub = data.get(section) or {}
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        bad = set(sub) - {f.name for f in dataclasses.fields(cls)}
        if bad:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")
    kw = dict(data)
    if "methods" in kw:
        kw["methods"] = tuple(tuple(m) if isinstance(m, list) else m for m in kw["methods"])
    for key in ("solver", "oracle", "logistic"):
        kw[key] = dict(kw.get(key) or {})
    try:
        return ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Read a YAML or JSON experiment document; unknown keys are errors."""
    import yaml

    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return config_from_dict(data or {})
