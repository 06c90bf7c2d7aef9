"""
Constrained logistic regression with subsampled estimates
=========================================================

A finite-sum problem: the loss averages over N data points, and the solver
estimates it from random subsets.  Cost is counted in epochs, one epoch
being N per-example gradient or loss evaluations.
"""

from tripssqp import LogisticProblemConfig, NoiseModel, SolverConfig, make_logistic_problem, solve

# 15 features, 2000 Gaussian examples, 5 random linear equality constraints and
# a norm-ball inequality.  CSV data works the same way with dataset="csv".
problem = make_logistic_problem(LogisticProblemConfig(dataset="normal", d=15, N=2000, seed=0))
print(problem.name, "d =", problem.dim_x, "equalities =", problem.dim_eq,
      "inequalities =", problem.dim_ineq)

cfg = SolverConfig(budget="epochs", budget_limit=600, max_iters=10**9)

# %%
# With kind="subsample" the estimates average over indices drawn with
# replacement, so sigma2 plays no role.  The batch cap of 10^4 is five epochs,
# and each iteration draws one gradient batch and two objective batches.
for seed in (1, 2):
    noise = NoiseModel(kind="subsample", seed=seed)
    for hessian in ("Id", "EstH"):
        state, trace = solve(problem, noise, cfg, hessian=hessian)
        print(f"seed {seed} {hessian:<5} {trace.status:<17} iterations={trace.iterations:<3} "
              f"epochs={trace.budget_used:5.0f} rel_kkt={trace.final_rel_kkt:.2e}")

# %%
# The default NoiseModel() evaluates on the full data set, which is handy as
# a reference run.
_, exact = solve(problem, NoiseModel(), SolverConfig(max_iters=40))
print(f"exact, 40 iterations: rel_kkt={exact.final_rel_kkt:.2e}")
