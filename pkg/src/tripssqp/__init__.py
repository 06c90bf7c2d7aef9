"""Trust-region interior-point stochastic SQP for inequality-constrained problems.

Typical use::

    from tripssqp import get_problem, NoiseModel, SolverConfig, solve
    state, trace = solve(get_problem("quad_box"), NoiseModel(sigma2=1e-8), SolverConfig())
"""

from .errors import (ConfigError, CsvParseError, DatasetError, DomainError, EmptyDatasetError,
                     LabelError, MeritDivergenceError, NonFiniteError, RankError,
                     SingularConstraintError, StalledError, TripSSQPError)
from .harness import (ExperimentConfig, ResultRow, ResultTable, load_config,
                      performance_profile, residual_summary, run_experiment)
from .hessians import HESSIAN_KINDS, HessianModel, WOperator, assemble_W
from .kkt import (ConstraintBlock, build_block, project_nullspace, relative_kkt_residual,
                  stationarity_measure, true_multipliers)
from .logistic import LogisticProblemConfig, load_csv_dataset, make_logistic_problem
from .merit import MeritState, actual_reduction, merit_loop, merit_value, predicted_reduction
from .oracle import (OracleConfig, OracleEstimate, estimate_gradient, estimate_value_pair,
                     gradient_batch_size, value_batch_size)
from .problems import NoiseModel, ProblemInstance
from .solver import (SolverConfig, SolverState, initialize, iterate_once, solve,
                     solve_fully_stochastic)
from .steps import StepResult, compute_step
from .suite import SUITE_NAMES, get_problem, make_analytic_suite
from .trace import IterationRecord, RunTrace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
