"""Built-in analytic test suite (small smooth problems with known solutions).

Every problem has at least one inequality.  Problem data that is random is
drawn once from fixed internal seeds, so the stored solutions stay valid; the
``seed`` argument of :func:`make_analytic_suite` only perturbs starting points.
Solutions and multipliers were computed offline with a Newton polish of the
KKT system (``tools/solve_suite.py``) and are embedded below.
"""

from __future__ import annotations

import numpy as np

from .problems import ProblemInstance

__all__ = ["make_analytic_suite", "SUITE_NAMES", "get_problem"]


def _linear(Amat, bvec):
    Amat = np.asarray(Amat, dtype=float)
    bvec = np.asarray(bvec, dtype=float)
    m, d = Amat.shape
    return (
        lambda x: Amat @ x - bvec,
        lambda x: Amat,
        lambda x: np.zeros((m, d, d)),
    )


def _quadratic(B, q):
    B = np.asarray(B, dtype=float)
    q = np.asarray(q, dtype=float)
    return (
        lambda x: 0.5 * x @ B @ x + q @ x,
        lambda x: B @ x + q,
        lambda x: B,
    )


def _logsumexp(M, off, reg):
    M = np.asarray(M, dtype=float)
    off = np.asarray(off, dtype=float)
    d = M.shape[1]

    def f(x):
        z = M @ x + off
        zmax = z.max()
        return zmax + np.log(np.exp(z - zmax).sum()) + 0.5 * reg * x @ x

    def grad(x):
        z = M @ x + off
        p = np.exp(z - z.max())
        p /= p.sum()
        return M.T @ p + reg * x

    def hess(x):
        z = M @ x + off
        p = np.exp(z - z.max())
        p /= p.sum()
        Mp = M.T @ p
        return (M.T * p) @ M - np.outer(Mp, Mp) + reg * np.eye(d)

    return f, grad, hess


def _no_eq(d):
    return (
        lambda x: np.zeros(0),
        lambda x: np.zeros((0, d)),
        lambda x: np.zeros((0, d, d)),
    )


# --- problem definitions -------------------------------------------------

def _quad_box():
    t = np.array([2.0, 0.5, -1.0, 3.0, 0.25])
    d = t.size
    f, g, H = _quadratic(np.eye(d), -t)
    c, G, Hc = _no_eq(d)
    h, J, Hh = _linear(np.eye(d), np.ones(d))
    return dict(f=(f, g, H), c=(c, G, Hc), h=(h, J, Hh), x0=np.zeros(d))


def _quad_eq_nonneg():
    rng = np.random.default_rng(101)
    d = 6
    L = rng.standard_normal((d, d)) * 0.3
    B = np.diag(np.arange(1.0, d + 1)) + L @ L.T
    q = rng.standard_normal(d) * 2.0
    Aeq = rng.standard_normal((2, d))
    beq = Aeq @ np.array([1.0, 0.2, 0.5, 0.1, 0.8, 0.3])
    return dict(f=_quadratic(B, q), c=_linear(Aeq, beq), h=_linear(-np.eye(d), np.zeros(d)),
                x0=np.full(d, 0.5))


def _rosenbrock_disc():
    def f(x):
        return (1.0 - x[0]) ** 2 + 10.0 * (x[1] - x[0] ** 2) ** 2

    def g(x):
        r = x[1] - x[0] ** 2
        return np.array([-2.0 * (1.0 - x[0]) - 40.0 * x[0] * r, 20.0 * r])

    def H(x):
        return np.array([[2.0 - 40.0 * x[1] + 120.0 * x[0] ** 2, -40.0 * x[0]],
                         [-40.0 * x[0], 20.0]])

    return dict(
        f=(f, g, H), c=_no_eq(2),
        h=(lambda x: np.array([x @ x - 1.5]), lambda x: 2.0 * x[None, :],
           lambda x: 2.0 * np.eye(2)[None]),
        x0=np.array([-1.2, 1.0]),
    )


def _logsumexp_simplex():
    rng = np.random.default_rng(103)
    d = 4
    M = rng.standard_normal((5, d))
    off = rng.standard_normal(5)
    return dict(f=_logsumexp(M, off, 0.1), c=_linear(np.ones((1, d)), [1.0]),
                h=_linear(-np.eye(d), np.zeros(d)), x0=np.full(d, 0.25))


def _sphere_projection():
    t = np.array([1.0, 2.0, 3.0])
    f, g, H = _quadratic(2.0 * np.eye(3), -2.0 * t)
    f0 = t @ t
    return dict(
        f=(lambda x: f(x) + f0, g, H),
        c=(lambda x: np.array([x @ x - 4.0]), lambda x: 2.0 * x[None, :],
           lambda x: 2.0 * np.eye(3)[None]),
        h=_linear(np.array([[1.0, 0.0, 0.0]]), [0.5]),
        x0=np.array([0.0, 1.0, 1.0]),
    )


def _ball_projection():
    t = np.array([1.0, 2.0, -1.0, 0.5])
    t = t * (2.5 / np.linalg.norm(t))
    f, g, H = _quadratic(np.eye(4), -t)
    return dict(
        f=(f, g, H), c=_no_eq(4),
        h=(lambda x: np.array([x @ x - 1.0]), lambda x: 2.0 * x[None, :],
           lambda x: 2.0 * np.eye(4)[None]),
        x0=np.zeros(4),
    )


def _chained_rosenbrock_bounds():
    d = 6

    def f(x):
        return float(np.sum((1.0 - x[:-1]) ** 2) + 5.0 * np.sum((x[1:] - x[:-1] ** 2) ** 2))

    def g(x):
        r = x[1:] - x[:-1] ** 2
        out = np.zeros(d)
        out[:-1] += -2.0 * (1.0 - x[:-1]) - 20.0 * x[:-1] * r
        out[1:] += 10.0 * r
        return out

    def H(x):
        out = np.zeros((d, d))
        i = np.arange(d - 1)
        out[i, i] += 2.0 - 20.0 * x[1:] + 60.0 * x[:-1] ** 2
        out[i + 1, i + 1] += 10.0
        out[i, i + 1] = out[i + 1, i] = -20.0 * x[:-1]
        return out

    return dict(f=(f, g, H), c=_no_eq(d), h=_linear(np.eye(d), np.full(d, 0.8)),
                x0=np.full(d, -0.5))


def _qp_large():
    rng = np.random.default_rng(107)
    d, m, n = 20, 5, 10
    L = rng.standard_normal((d, d)) / np.sqrt(d)
    B = L @ L.T + np.eye(d)
    q = rng.standard_normal(d)
    Aeq = rng.standard_normal((m, d))
    beq = rng.standard_normal(m)
    lower = np.full(n, -0.3)
    Jm = np.zeros((n, d))
    Jm[np.arange(n), np.arange(n)] = -1.0
    return dict(f=_quadratic(B, q), c=_linear(Aeq, beq), h=_linear(Jm, -lower),
                x0=np.zeros(d))


def _logsumexp_halfspaces():
    rng = np.random.default_rng(109)
    d = 5
    M = rng.standard_normal((6, d))
    off = rng.standard_normal(6)
    C = rng.standard_normal((3, d))
    e = np.array([-0.3, 0.2, -0.1])
    return dict(f=_logsumexp(M, off, 0.2), c=_no_eq(d), h=_linear(C, e),
                x0=np.zeros(d) - 0.1 * np.sign(C.sum(axis=0)))


def _circle_linear():
    return dict(
        f=(lambda x: x[0] + x[1] + 0.5 * x[2] ** 2,
           lambda x: np.array([1.0, 1.0, x[2]]),
           lambda x: np.diag([0.0, 0.0, 1.0])),
        c=(lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 2.0]),
           lambda x: np.array([[2.0 * x[0], 2.0 * x[1], 0.0]]),
           lambda x: np.diag([2.0, 2.0, 0.0])[None]),
        h=_linear(np.array([[0.0, 0.0, -1.0]]), [-1.0]),
        x0=np.array([1.0, 0.5, 2.0]),
    )


_BUILDERS = [
    ("quad_box", _quad_box),
    ("quad_eq_nonneg", _quad_eq_nonneg),
    ("rosenbrock_disc", _rosenbrock_disc),
    ("logsumexp_simplex", _logsumexp_simplex),
    ("sphere_projection", _sphere_projection),
    ("ball_projection", _ball_projection),
    ("chained_rosenbrock_bounds", _chained_rosenbrock_bounds),
    ("qp_large", _qp_large),
    ("logsumexp_halfspaces", _logsumexp_halfspaces),
    ("circle_linear", _circle_linear),
]

SUITE_NAMES = tuple(name for name, _ in _BUILDERS)

# (x*, lambda*, tau*) per problem; see tools/solve_suite.py.
_SOLUTIONS = {
    'quad_box': (
        [1.0, 0.5, -1.0, 1.0, 0.25],
        [],
        [1.0, 0.0, 0.0, 2.0, 0.0],
    ),
    'quad_eq_nonneg': (
        [0.6167274468096027, 0.4471980779851598, 0.16279174047096975, 0.48636060973164114, 0.5810264852958681, 0.0],
        [-0.169343819353927, -1.5027845981732155],
        [0.0, 0.0, 0.0, 0.0, 0.0, 4.9299406945879465],
    ),
    'rosenbrock_disc': (
        [0.9082012668333573, 0.8216875677058069],
        [],
        [0.03823805416310057],
    ),
    'logsumexp_simplex': (
        [0.10601872253863233, -5.431461406842217e-28, 0.8939812774613677, 8.635746611115925e-28],
        [0.11008620529426391],
        [0.0, 0.08353778771681838, 0.0, 0.6224236190832991],
    ),
    'sphere_projection': (
        [0.5, 1.0741723110591492, 1.611258466588724],
        [0.8618986725025255],
        [0.13810132749747447],
    ),
    'ball_projection': (
        [0.4, 0.8, -0.4, 0.2],
        [],
        [0.75],
    ),
    'chained_rosenbrock_bounds': (
        [0.8, 0.8, 0.8, 0.7839346723384689, 0.6787946420786855, 0.4607621661147307],
        [],
        [2.9599999999999986, 1.3599999999999994, 1.102954757415501, 0.0, 0.0, 0.0],
    ),
    'qp_large': (
        [-0.21402575107646488, 0.7058035146666921, 0.28973991228097895, -0.028349122436309493, -0.20553740143269175, -0.2024111518127937, -0.3, 0.0031859383418464957, 0.14545047791202675, -0.14580548506934013, -0.3374690511031061, -0.19467730076421136, 0.4620263064619128, -0.22701884669137826, 0.353272245052951, -0.7224625366206782, -0.5801716097313092, -1.2970045114051352, -0.024108108755521912, -0.14649147300666207],
        [-0.5088993069495663, 0.4665717404210725, 0.5528696955701223, -0.017063886564827806, -0.5107101744916379],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.27123486250462703, 0.0, 0.0, 0.0],
    ),
    'logsumexp_halfspaces': (
        [-0.5600216831654775, -0.5246665998174566, 0.32984522670099176, 0.2832480709790944, -0.205964721647393],
        [],
        [0.25982804000152315, 0.0, 0.1662200392027356],
    ),
    'circle_linear': (
        [-1.0, -1.0, 1.0],
        [0.5],
        [1.0],
    ),
}


def _build(index, seed, with_solution=True):
    name, builder = _BUILDERS[index]
    parts = builder()
    f, g, H = parts["f"]
    c, G, Hc = parts["c"]
    h, J, Hh = parts["h"]
    x0 = np.asarray(parts["x0"], dtype=float)
    d = x0.size
    if seed:
        rng = np.random.default_rng([seed, index])
        x0 = x0 + 0.1 * rng.standard_normal(d)
    m = c(x0).size
    n = h(x0).size
    sol = _SOLUTIONS.get(name) if with_solution else None
    return ProblemInstance(
        name=name, dim_x=d, dim_eq=m, dim_ineq=n,
        eval_f=lambda x: float(f(x)), eval_grad_f=g, eval_hess_f=H,
        eval_c=c, eval_G=G, eval_hess_c=Hc,
        eval_h=h, eval_J=J, eval_hess_h=Hh,
        x0=x0,
        known_solution=None if sol is None else sol[0],
        known_multipliers=None if sol is None else (np.asarray(sol[1]), np.asarray(sol[2])),
    )


def make_analytic_suite(count=len(_BUILDERS), seed=0):
    """Return the first ``count`` problems of the built-in suite.

    ``seed == 0`` keeps the canonical starting points; any other seed adds a
    deterministic ``N(0, 0.1^2)`` perturbation to them.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    count = min(count, len(_BUILDERS))
    return [_build(i, seed) for i in range(count)]


def get_problem(name, seed=0):
    for i, (nm, _) in enumerate(_BUILDERS):
        if nm == name:
            return _build(i, seed)
    raise KeyError(f"unknown problem {name!r}; choose from {', '.join(SUITE_NAMES)}")
