"""Compute reference solutions for the analytic suite.

SLSQP finds the active set, then Newton's method on the reduced KKT system
polishes (x, lambda, tau) to machine precision.  Prints a ``_SOLUTIONS``
literal to paste into ``suite.py``.
"""

import numpy as np
from scipy.optimize import minimize

from tripssqp.problems import kkt_residual
from tripssqp.suite import _BUILDERS, _build


def polish(p, x, active, iters=50):
    d, m = p.dim_x, p.dim_eq
    act = np.flatnonzero(active)
    k = act.size
    lam = np.zeros(m)
    tau = np.zeros(k)
    # least-squares multiplier start
    rows = [p.eval_G(x)] if m else []
    rows.append(p.eval_J(x)[act])
    C = np.vstack(rows)
    mult = np.linalg.lstsq(C.T, -p.eval_grad_f(x), rcond=None)[0]
    lam, tau = mult[:m], mult[m:]
    for _ in range(iters):
        G = p.eval_G(x)
        JA = p.eval_J(x)[act]
        grad = p.eval_grad_f(x) + G.T @ lam + JA.T @ tau
        HL = p.eval_hess_f(x)
        if m:
            HL = HL + np.tensordot(lam, p.hess_c(x), axes=1)
        HL = HL + np.tensordot(tau, p.hess_h(x)[act], axes=1)
        Cm = np.vstack([G, JA])
        K = np.block([[HL, Cm.T], [Cm, np.zeros((m + k, m + k))]])
        r = np.concatenate([grad, p.eval_c(x), p.eval_h(x)[act]])
        if np.max(np.abs(r)) < 1e-15:
            break
        step = np.linalg.solve(K, -r)
        x = x + step[:d]
        lam = lam + step[d:d + m]
        tau = tau + step[d + m:]
    full_tau = np.zeros(p.dim_ineq)
    full_tau[act] = tau
    return x, lam, full_tau


def main():
    out = {}
    for i, (name, _) in enumerate(_BUILDERS):
        p = _build(i, 0, with_solution=False)
        cons = [{"type": "ineq", "fun": lambda x, p=p: -p.eval_h(x), "jac": lambda x, p=p: -p.eval_J(x)}]
        if p.dim_eq:
            cons.append({"type": "eq", "fun": p.eval_c, "jac": p.eval_G})
        res = minimize(p.eval_f, p.x0, jac=p.eval_grad_f, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-14, "maxiter": 2000})
        active = p.eval_h(res.x) > -1e-5
        x, lam, tau = polish(p, res.x, active)
        r = kkt_residual(p, x, lam, tau)
        print(f"# {name}: kkt={r:.2e} active={active.sum()} min_tau_active={tau[active].min() if active.any() else None} "
              f"max_h_inactive={p.eval_h(x)[~active].max() if (~active).any() else None}")
        out[name] = (x.tolist(), lam.tolist(), tau.tolist())
    print("_SOLUTIONS = {")
    for name, (x, lam, tau) in out.items():
        print(f"    {name!r}: (")
        print(f"        {[float(v) for v in x]!r},")
        print(f"        {[float(v) for v in lam]!r},")
        print(f"        {[float(v) for v in tau]!r},")
        print("    ),")
    print("}")


if __name__ == "__main__":
    main()
