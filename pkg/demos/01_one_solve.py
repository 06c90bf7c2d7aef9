"""
Solving one noisy constrained problem
=====================================

We write a small problem by hand, solve it under several noise levels and
look at what the trace records.  Run with ``python demos/01_one_solve.py``.
"""

import numpy as np

from tripssqp import NoiseModel, ProblemInstance, SolverConfig, solve

# minimize (x0 - 3)^2 + x1^2  subject to  x0 + x1 = 2  and  x0 <= 1.5
# The minimizer is x = (1.5, 0.5) with the inequality active (multiplier 4).
target = np.array([3.0, 0.0])
problem = ProblemInstance(
    name="toy",
    dim_x=2, dim_eq=1, dim_ineq=1,
    eval_f=lambda x: float(np.sum((x - target) ** 2)),
    eval_grad_f=lambda x: 2 * (x - target),
    eval_hess_f=lambda x: 2 * np.eye(2),
    eval_c=lambda x: np.array([x[0] + x[1] - 2.0]),
    eval_G=lambda x: np.array([[1.0, 1.0]]),
    eval_h=lambda x: np.array([x[0] - 1.5]),
    eval_J=lambda x: np.array([[1.0, 0.0]]),
    x0=[0.0, 0.0],
)

# %%
# The residual cannot drop far below the barrier parameter theta.  The default
# schedule geom(0.9999) still has theta = 0.82 after 2000 iterations, while
# power(0.5) is down to 0.022.  With exact evaluations that is the whole story.
#
# With noise, every estimate is capped at 10^4 samples.  Once the predicted
# reduction falls to the size of the noise in the objective estimates the
# ratio test starts failing about half the time, so noise sets its own floor.
print("sigma2     schedule       rel_kkt   x")
for sigma2 in (0.0, 1e-8, 1e-4):
    for schedule in ("geom(0.9999)", "power(0.5)"):
        cfg = SolverConfig(max_iters=2000, barrier_schedule=schedule)
        state, trace = solve(problem, NoiseModel(sigma2), cfg, seed=0)
        print(f"{sigma2:<8g}  {schedule:<13}  {trace.final_rel_kkt:.2e}  {np.round(state.x, 4)}")

# %%
# Every iteration is one record.  The classification says which branch ran:
# gate failures and ratio failures shrink the radius, the other two accept.
cfg = SolverConfig(max_iters=2000, barrier_schedule="power(0.5)")
state, trace = solve(problem, NoiseModel(1e-4), cfg, hessian="EstH", seed=0)
kinds, counts = np.unique(trace.column("classification"), return_counts=True)
print({str(k): int(c) for k, c in zip(kinds, counts)})

delta = np.array(trace.column("Delta"))
print(f"trust radius: median {np.median(delta):.1e}, min {delta.min():.1e}")
print("gradient batch sizes seen:", sorted(set(trace.column("batch_g"))))
print("total gradient evaluations:", trace.total_grad_evals)

# The same trace serializes to JSON or CSV, e.g. trace.to_json("trace.json").
