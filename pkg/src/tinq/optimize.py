"""Weighted sum-GDoF maximization.

Four routes: a linear program over one subset's achievable polytope, an exact
search over all active subsets (the disjunctive optimum), finite-SNR power
control as a geometric program solved in log-domain convex form, and a
decentralized dual-decomposition variant of the same objective. A pipeline
operation chains the GP with the assignment-based power minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .exceptions import (
    ConvergenceFailure,
    DivergenceDetected,
    EmptyPolytope,
    ShapeError,
    SubsetTooLarge,
)
from .model import (
    ChannelMatrix,
    GdofTuple,
    PhysicalNetwork,
    PowerAlloc,
    achieved_gdof,
    strength_from_physical,
)
from .power import solve_power_auction, solve_power_hungarian
from .region import tina_polytope

__all__ = [
    "WeightVector",
    "GpSolution",
    "max_weighted_gdof_lp",
    "max_weighted_gdof_exact",
    "gp_power_control",
    "gp_gdof_equivalence_gap",
    "decentralized_gp",
    "gp_then_assignment",
]

LP_SUBSET_MAX = 16
EXACT_K_MAX = 10
Z_FLOOR = -80.0  # log-power box: e^-80 is numerically silent


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative user priorities with at least one positive entry."""

    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.w, dtype=float).reshape(-1)
        if v.size < 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ShapeError("weights must be finite and nonnegative")
        if not np.any(v > 0):
            raise ShapeError("at least one weight must be positive")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "w", v)

    @property
    def K(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class GpSolution:
    """Finite-SNR power-control solution: linear transmit power fractions in
    (0, 1] on the solved subset (0 elsewhere), per-link SINR, the throughput
    objective sum w*log2(1+SINR), the inverse-SINR values t (constraint tight
    by construction), and the raw geometric objective prod t^w."""

    powers: np.ndarray
    sinr: np.ndarray
    objective: float
    t: np.ndarray
    geo_objective: float
    sum_w_log2_sinr: float
    subset: tuple


def _as_weights(w, K: int) -> np.ndarray:
    if w is None:
        return np.ones(K)
    if isinstance(w, WeightVector):
        v = w.w
    else:
        v = np.asarray(w, dtype=float).reshape(-1)
    if v.size != K:
        raise ShapeError(f"got {v.size} weights for {K} users")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ShapeError("weights must be finite and nonnegative")
    return v


def _effective_subset(K: int, subset, w: np.ndarray) -> tuple[int, ...]:
    """Subset restricted to positively weighted users, validated."""
    if subset is None:
        idx = tuple(range(K))
    else:
        idx = tuple(sorted(int(i) for i in subset))
        if len(set(idx)) != len(idx):
            raise IndexError(f"subset has repeated indices: {subset}")
        if idx and (idx[0] < 0 or idx[-1] >= K):
            raise IndexError(f"subset {subset} out of range for K={K}")
    return tuple(k for k in idx if w[k] > 0)


def max_weighted_gdof_lp(alpha: ChannelMatrix, subset=None, w=None,
                         cap: int = LP_SUBSET_MAX) -> tuple[GdofTuple, float]:
    """Maximize sum w_k d_k over one subset's achievable polytope.

    Zero-weight users are dropped from the subset before solving (they are
    best served silent for this objective). Materializes all 2^n - 1
    constraints, so the effective subset is capped at 16 users.
    """
    wv = _as_weights(w, alpha.K)
    idx = _effective_subset(alpha.K, subset, wv)
    if len(idx) == 0:
        return GdofTuple(np.zeros(alpha.K)), 0.0
    if len(idx) > cap:
        raise SubsetTooLarge(f"LP subset size {len(idx)} exceeds cap {cap}")

    poly = tina_polytope(alpha, idx)
    pos = {k: p for p, k in enumerate(idx)}
    rows, bounds = [], []
    for users, bound in poly.constraints.items():
        row = np.zeros(len(idx))
        for u in users:
            row[pos[u]] = 1.0
        rows.append(row)
        bounds.append(bound)
    if min(bounds) < 0:
        # some sum bound went negative, which cannot happen while every cross
        # strength stays below the direct strength it interferes with
        raise EmptyPolytope(
            f"subset {idx} has a negative sum bound {min(bounds):.6g}"
        )
    res = linprog(
        c=-wv[list(idx)],
        A_ub=np.array(rows), b_ub=np.array(bounds),
        bounds=[(0, None)] * len(idx),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"LP solve failed: {res.message}")
    d = np.zeros(alpha.K)
    d[list(idx)] = np.maximum(res.x, 0.0)
    return GdofTuple(d), float(-res.fun)


def max_weighted_gdof_exact(alpha: ChannelMatrix, w=None,
                            k_max: int = EXACT_K_MAX) -> tuple[GdofTuple, tuple, float]:
    """Global optimum of the weighted sum over the union of all subsets'
    polytopes, by enumerating active subsets and solving each LP.

    Restricting enumeration to subsets of the weight support is exact:
    removing a zero-weight user relaxes every remaining bound. Capped at 10
    users; larger networks should use the scheduling pipeline instead.
    """
    wv = _as_weights(w, alpha.K)
    if alpha.K > k_max:
        raise SubsetTooLarge(
            f"exact search capped at {k_max} users (got {alpha.K}); "
            "use a scheduling pipeline for larger networks"
        )
    support = [k for k in range(alpha.K) if wv[k] > 0]
    best = (GdofTuple(np.zeros(alpha.K)), (), 0.0)
    import itertools
    for size in range(1, len(support) + 1):
        for sub in itertools.combinations(support, size):
            try:
                d, obj = max_weighted_gdof_lp(alpha, sub, wv)
            except EmptyPolytope:
                # an empty member contributes nothing to the union
                continue
            if obj > best[2] + 1e-12:
                best = (d, sub, obj)
    return best


def _gp_inputs(net: PhysicalNetwork, subset, w):
    wv = _as_weights(w, net.K)
    idx = _effective_subset(net.K, subset, wv)
    if len(idx) == 0:
        raise ShapeError("no positively weighted users in subset")
    g = net.nominal_snr()[np.ix_(idx, idx)]
    if np.any(np.diag(g) <= 0):
        raise ShapeError("direct gains must be positive on the solved subset")
    return wv, idx, g


def gp_power_control(net: PhysicalNetwork, subset=None, w=None,
                     max_iter: int = 1000) -> GpSolution:
    """Minimize prod t_i^{w_i} with t_i = (1 + sum_{j!=i} g_ji P_j)/(g_ii P_i)
    over power fractions 0 < P_i <= 1, i.e. maximize sum w_i log SINR_i.

    Solved in log-power coordinates, where the objective is smooth and convex,
    with an analytic gradient under box bounds.
    """
    wv, idx, g = _gp_inputs(net, subset, w)
    n = len(idx)
    ww = wv[list(idx)]
    cross = g.copy()
    np.fill_diagonal(cross, 0.0)
    log_gdiag = np.log(np.diag(g))

    def objective(z):
        x = np.exp(z)
        interference = cross.T @ x  # at receiver i: sum_j g_ji x_j
        f = float(np.sum(ww * (np.log1p(interference) - log_gdiag - z)))
        denom = 1.0 + interference
        # d/dz_k: -w_k + x_k * sum_i w_i g_ki / denom_i
        grad = -ww + np.exp(z) * (cross @ (ww / denom))
        return f, grad

    # deterministic restarts: the demanding ftol can abort the line search on
    # ill-conditioned instances, so fall back to a shifted start and then to a
    # looser (still tight) tolerance before declaring failure
    res = None
    for z0, ftol in ((np.zeros(n), 1e-15), (np.full(n, -2.0), 1e-15),
                     (np.zeros(n), 1e-12)):
        cand = minimize(
            objective, z0, jac=True, method="L-BFGS-B",
            bounds=[(Z_FLOOR, 0.0)] * n,
            options={"maxiter": max_iter, "ftol": ftol, "gtol": 1e-10},
        )
        if res is None or cand.fun < res.fun:
            res = cand
        if cand.success:
            res = cand
            break
    if not res.success and np.max(np.abs(res.jac)) > 1e-5:
        raise ConvergenceFailure(
            f"geometric-program solve did not converge: {res.message}",
            last_iterate=np.exp(res.x),
        )

    x = np.exp(res.x)
    interference = cross.T @ x
    sinr_sub = np.diag(g) * x / (1.0 + interference)
    t_sub = 1.0 / sinr_sub

    powers = np.zeros(net.K)
    powers[list(idx)] = x
    sinr_full = np.zeros(net.K)
    sinr_full[list(idx)] = sinr_sub
    t_full = np.full(net.K, np.inf)
    t_full[list(idx)] = t_sub
    return GpSolution(
        powers=powers,
        sinr=sinr_full,
        objective=float(np.sum(ww * np.log2(1.0 + sinr_sub))),
        t=t_full,
        geo_objective=float(np.prod(t_sub ** ww)),
        sum_w_log2_sinr=float(np.sum(ww * np.log2(sinr_sub))),
        subset=idx,
    )


def gp_gdof_equivalence_gap(net: PhysicalNetwork, subset=None, w=None) -> float:
    """|GP objective on the log-P scale - LP optimum|.

    The GP value sum w_i log(SINR_i)/log(P) matches the polytope LP optimum up
    to sum w_i log|subset|/log P, shrinking as the reference power grows.
    """
    wv = _as_weights(w, net.K)
    alpha = strength_from_physical(net)
    idx = _effective_subset(net.K, subset, wv)
    _, lp_obj = max_weighted_gdof_lp(alpha, idx, wv)
    sol = gp_power_control(net, idx, wv)
    log_p = math.log(net.reference_power)
    gp_obj = float(np.sum(wv[list(idx)] * np.log(sol.sinr[list(idx)]))) / log_p
    return abs(gp_obj - lp_obj)


def _local_estimate_solve(w_i, gamma_col, lower, upper):
    """Exact minimizer of w_i*max{0, max_j v_j} + sum_j gamma_j v_j over a box.

    Positive-dual coordinates sit at their lower bound; the rest share a cap m
    chosen at a breakpoint of the convex piecewise-linear cost.
    """
    v = lower.copy()
    neg = gamma_col <= 0
    if not np.any(neg):
        return v
    base = 0.0
    if np.any(~neg):
        base = max(base, float(lower[~neg].max()))
    m_lo = max(base, float(lower[neg].max()))
    candidates = [m_lo] + [float(u) for u in upper[neg] if u > m_lo]
    best_m, best_val = None, np.inf
    for m in sorted(set(candidates)):
        caps = np.minimum(upper[neg], m)
        val = w_i * max(base, m, 0.0) + float(gamma_col[neg] @ caps)
        if val < best_val - 1e-15:
            best_val, best_m = val, m
    v[neg] = np.minimum(upper[neg], best_m)
    return v


def decentralized_gp(alpha: ChannelMatrix, subset=None, w=None, step=None,
                     iters: int = 5000, return_info: bool = False):
    """Distributed weighted sum-GDoF power control by dual decomposition.

    Each user keeps its own power exponent and local estimates of the
    interference exponents it receives; consistency is priced by dual
    variables updated with stepsize delta(t) (default 0.5/sqrt(t)). Local
    solves are exact (the subproblems are piecewise linear over boxes), and
    the reported allocation is the stepsize-weighted average of the iterates.
    Raises DivergenceDetected if the consistency residual grows for 100
    consecutive iterations.

    Returns (PowerAlloc, GdofTuple), plus an info dict (residuals, objective)
    when ``return_info``.
    """
    wv = _as_weights(w, alpha.K)
    idx = _effective_subset(alpha.K, subset, wv)
    if len(idx) == 0:
        raise ShapeError("no positively weighted users in subset")
    if step is None:
        step = lambda t: 0.5 / math.sqrt(t)
    n = len(idx)
    a = alpha.alpha[np.ix_(idx, idx)]
    ww = wv[list(idx)]
    r_box = float(alpha.alpha.max()) + 1.0

    if n == 1:
        r = np.full(alpha.K, -np.inf)
        r[idx[0]] = 0.0
        pa = PowerAlloc(r)
        d = achieved_gdof(alpha, pa, clamp=True)
        return (pa, d, {"residuals": [0.0]}) if return_info else (pa, d)

    off = ~np.eye(n, dtype=bool)
    upper = a.copy()          # r'_ji <= alpha_ji (r_j <= 0)
    lower = a - r_box         # r'_ji >= alpha_ji - r_box
    gamma = np.zeros((n, n))  # gamma[j, i] prices r'_ji = alpha_ji + r_j

    r = np.zeros(n)
    rp = upper.copy()
    r_avg = np.zeros(n)
    rp_avg = np.zeros((n, n))
    wsum = 0.0
    residuals = []
    grow = 0
    for t in range(1, iters + 1):
        delta = float(step(t))
        for p in range(n):
            others = off[:, p]
            coef = -ww[p] - float(gamma[p, others].sum())
            r[p] = -r_box if coef > 0 else 0.0
            rp[others, p] = _local_estimate_solve(
                ww[p], gamma[others, p], lower[others, p], upper[others, p]
            )
        target = a + r[:, None]  # alpha_ji + r_j at (j, i)
        gamma[off] += delta * (rp[off] - target[off])

        wsum += delta
        r_avg += delta * (r - r_avg) / wsum
        rp_avg += delta * (rp - rp_avg) / wsum
        avg_target = a + r_avg[:, None]
        res = float(np.abs(rp_avg[off] - avg_target[off]).sum())
        residuals.append(res)
        if len(residuals) >= 2 and res > residuals[-2] + 1e-12:
            grow += 1
            if grow >= 100:
                raise DivergenceDetected(
                    f"consistency residual grew for {grow} consecutive steps"
                )
        else:
            grow = 0

    r_full = np.full(alpha.K, -np.inf)
    r_full[list(idx)] = np.minimum(r_avg, 0.0)
    pa = PowerAlloc(r_full)
    d = achieved_gdof(alpha, pa, clamp=True)
    if return_info:
        info = {
            "residuals": residuals,
            "objective": float(wv @ d.d),
            "subset": idx,
        }
        return pa, d, info
    return pa, d


def gp_then_assignment(net: PhysicalNetwork, subset=None, w=None,
                       solver: str = "hungarian", epsilon: float = 1e-5,
                       ) -> tuple[PowerAlloc, GdofTuple]:
    """Finite-SNR pipeline: GP power control, map powers to the log-P scale,
    read off the achieved GDoF, then re-solve for the minimal powers that
    achieve exactly that tuple.

    The achieved GDoF is preserved and no link's power increases; links whose
    GP-implied GDoF is nonpositive are switched off before the solve.
    """
    sol = gp_power_control(net, subset, w)
    alpha = strength_from_physical(net)
    log_p = math.log(net.reference_power)

    r_gp = np.full(net.K, -np.inf)
    for k in sol.subset:
        r_gp[k] = math.log(sol.powers[k]) / log_p
    d_gp = achieved_gdof(alpha, PowerAlloc(r_gp), clamp=True)

    active = tuple(k for k in sol.subset if d_gp.d[k] > 1e-12)
    d_target = np.zeros(net.K)
    for k in active:
        d_target[k] = d_gp.d[k]
    if not active:
        return PowerAlloc(np.full(net.K, -np.inf)), GdofTuple(d_target)
    if solver == "hungarian":
        r_min, _ = solve_power_hungarian(alpha, d_target, subset=active)
    elif solver == "auction":
        r_min, _ = solve_power_auction(alpha, d_target, subset=active, epsilon=epsilon)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return r_min, GdofTuple(d_target)
