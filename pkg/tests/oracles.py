"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written against a different code path than
the library: scipy linprog for the dual labels and the matching relaxation,
dense grid search for the power optimum, and direct formula evaluation for
achieved GDoF. Tests freeze expected values through these functions instead
of trusting the implementation under test.
"""

import itertools

import numpy as np
from scipy.optimize import linprog

from tinq import ChannelMatrix, PowerAlloc, achieved_gdof


def lp_dual_labels(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximum-left-label equilibrium of the assignment dual via linprog.

    maximize sum(y_u) subject to y_u_i + y_v_j >= a_ij for i != j,
    y_u_j + y_v_j = a_jj, and y >= 0. Variables are [y_u, y_v].
    """
    n = a.shape[0]
    c = np.concatenate([-np.ones(n), np.zeros(n)])
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            row = np.zeros(2 * n)
            row[i] = -1.0
            row[n + j] = -1.0
            rows.append(row)
            rhs.append(-a[i, j])
    a_eq = np.zeros((n, 2 * n))
    b_eq = np.zeros(n)
    for j in range(n):
        a_eq[j, j] = 1.0
        a_eq[j, n + j] = 1.0
        b_eq[j] = a[j, j]
    res = linprog(
        c,
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(rhs) if rhs else None,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * (2 * n),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"dual oracle LP failed: {res.message}")
    return res.x[:n], res.x[n:]


def assignment_lp_weight(a: np.ndarray) -> float:
    """LP relaxation of the max-weight perfect assignment (Birkhoff polytope:
    row and column sums equal one)."""
    n = a.shape[0]
    c = -a.reshape(-1)
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n:(i + 1) * n] = 1.0
        a_eq[n + i, i::n] = 1.0
    res = linprog(c, A_eq=a_eq, b_eq=np.ones(2 * n),
                  bounds=[(0, 1)] * (n * n), method="highs")
    if not res.success:
        raise RuntimeError(f"matching relaxation LP failed: {res.message}")
    return float(-res.fun)


def brute_matching_weight(a: np.ndarray) -> float:
    """Max-weight perfect assignment by permutation enumeration (n <= 8)."""
    n = a.shape[0]
    best = -np.inf
    for perm in itertools.permutations(range(n)):
        best = max(best, sum(a[i, perm[i]] for i in range(n)))
    return float(best)


def gp_grid_best(g: np.ndarray, w: np.ndarray, grid: int = 220) -> float:
    """Grid search over per-link power fractions in [1e-8, 1] maximizing
    sum_i w_i log SINR_i. Only sized for two links."""
    n = g.shape[0]
    assert n == 2
    axis = np.concatenate([[1e-8], np.logspace(-6, 0, grid)])
    best = -np.inf
    for p0 in axis:
        for p1 in axis:
            p = np.array([p0, p1])
            num = np.diag(g) * p
            interference = g.T @ p - num
            val = float(np.sum(w * np.log(num / (1.0 + interference))))
            best = max(best, val)
    return best


def random_alpha(rng: np.random.Generator, k: int,
                 diag_lo: float = 0.5, diag_hi: float = 2.5,
                 cross_hi: float = 2.0) -> ChannelMatrix:
    a = rng.uniform(0.0, cross_hi, size=(k, k))
    a[np.diag_indices(k)] = rng.uniform(diag_lo, diag_hi, size=k)
    return ChannelMatrix(np.round(a, 6))


def random_feasible_instance(rng: np.random.Generator, k: int):
    """A random channel with a target known to be achievable: evaluate the
    GDoF actually achieved by a random power allocation and keep its support.

    Returns (alpha, d, subset) with d zero off the support.
    """
    alpha = random_alpha(rng, k)
    r = PowerAlloc(-rng.uniform(0.0, 1.5, size=k))
    d = achieved_gdof(alpha, r).d
    keep = d > 1e-9
    subset = tuple(int(i) for i in np.flatnonzero(keep))
    return alpha, np.where(keep, d, 0.0), subset
