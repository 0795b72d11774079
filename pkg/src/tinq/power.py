"""Globally minimal power allocation for a target GDoF tuple.

The target d on an active subset defines the square input matrix

    A_ij = alpha_ij (i != j),   A_jj = alpha_jj - d_j,

whose assignment-problem dual labels (y_u, y_v) encode power: the
componentwise-maximal left labels over all dual optima with a tight diagonal
give the componentwise-minimal feasible powers r_j = -y_{u_j}. Two solvers are
provided: a centralized Kuhn-Munkres label algorithm whose intermediate states
(initial labels, per-round label decrements, round count) are observable, and
a decentralized fixed-increment auction that reaches the same labels up to a
documented |subset|*epsilon gap.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ImmediatelyInfeasible,
    Infeasible,
    InfeasibleGdof,
    InfeasibleOrEpsilonTooLarge,
    ShapeError,
)
from .model import ChannelMatrix, GdofTuple, PowerAlloc

__all__ = [
    "AssignmentMatrix",
    "LabelPair",
    "KmTrace",
    "build_assignment_matrix",
    "solve_power_hungarian",
    "solve_power_auction",
    "is_feasible",
]

DEFAULT_TOL = 1e-9
DEFAULT_EPSILON = 1e-5


@dataclass(frozen=True)
class AssignmentMatrix:
    """Input matrix of the assignment problem over the active subset."""

    A: np.ndarray
    subset: tuple

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LabelPair:
    """Dual labels over the active subset: y_u_i + y_v_j >= A_ij everywhere,
    with equality on the diagonal at output; both nonnegative."""

    y_u: np.ndarray
    y_v: np.ndarray


@dataclass(frozen=True)
class KmTrace:
    """Observable solver states: labels at initialization, the label decrement
    of every update round, labels after each round, and the round count."""

    initial_y_u: np.ndarray
    initial_y_v: np.ndarray
    alpha_l: tuple
    y_u_after: tuple
    y_v_after: tuple

    @property
    def rounds(self) -> int:
        return len(self.alpha_l)


def _as_gdof(d) -> np.ndarray:
    if isinstance(d, GdofTuple):
        return d.d
    return np.asarray(d, dtype=float).reshape(-1)


def _resolve_subset(alpha: ChannelMatrix, d: np.ndarray, subset) -> tuple[int, ...]:
    if d.size != alpha.K:
        raise ShapeError(f"d has {d.size} entries for a {alpha.K}-user network")
    if np.any(np.isnan(d)) or np.any(d < 0):
        raise ValueError("GDoF targets must be nonnegative")
    if subset is None:
        return tuple(int(k) for k in np.nonzero(d > 0)[0])
    idx = tuple(sorted(int(i) for i in subset))
    if len(set(idx)) != len(idx):
        raise IndexError(f"subset has repeated indices: {subset}")
    if idx and (idx[0] < 0 or idx[-1] >= alpha.K):
        raise IndexError(f"subset {subset} out of range for K={alpha.K}")
    return idx


def build_assignment_matrix(alpha: ChannelMatrix, d, subset=None) -> AssignmentMatrix:
    """A_ij = alpha_ij off the diagonal, alpha_jj - d_j on it, over the subset.

    Users with zero target GDoF must be removed from the subset first (passing
    subset=None uses the support of d). A target above the direct strength
    makes the diagonal negative and is rejected outright.
    """
    dv = _as_gdof(d)
    idx = _resolve_subset(alpha, dv, subset)
    for k in idx:
        if dv[k] <= 0:
            raise ValueError(
                f"user {k} has target {dv[k]}; zero-GDoF users must be removed first"
            )
        if dv[k] > alpha.alpha[k, k]:
            raise ImmediatelyInfeasible(
                f"target d_{k}={dv[k]} exceeds direct strength {alpha.alpha[k, k]}"
            )
    a = alpha.alpha[np.ix_(idx, idx)].copy()
    for p, k in enumerate(idx):
        a[p, p] = alpha.alpha[k, k] - dv[k]
    return AssignmentMatrix(A=a, subset=idx)


def _full_power(alpha: ChannelMatrix, subset, y_u) -> PowerAlloc:
    r = np.full(alpha.K, -np.inf)
    for p, k in enumerate(subset):
        r[k] = -y_u[p]
    return PowerAlloc(r)


def solve_power_hungarian(alpha: ChannelMatrix, d, subset=None,
                          tol: float = DEFAULT_TOL, return_trace: bool = False):
    """Kuhn-Munkres solve for the minimum-power allocation achieving d.

    Left labels start at the row maxima of A, right labels at zero, and label
    updates lower the tree rows by the minimum slack alpha_L until the whole
    diagonal is tight; then r_j = -y_{u_j}. Each augmentation round matches
    one more row, so at most |subset| rounds occur; if they complete without
    the diagonal going tight, the diagonal is not an optimal assignment and
    the target is infeasible.

    Returns (PowerAlloc, LabelPair), plus a KmTrace when ``return_trace``.
    """
    am = build_assignment_matrix(alpha, d, subset)
    n, A = am.n, am.A
    if n == 0:
        r = PowerAlloc(np.full(alpha.K, -np.inf))
        labels = LabelPair(y_u=np.zeros(0), y_v=np.zeros(0))
        trace = KmTrace(np.zeros(0), np.zeros(0), (), (), ())
        return (r, labels, trace) if return_trace else (r, labels)

    y_u = A.max(axis=1).astype(float)
    y_v = np.zeros(n)
    match_of_col = [-1] * n
    match_of_row = [-1] * n

    trace_alpha, trace_yu, trace_yv = [], [], []
    initial_y_u, initial_y_v = y_u.copy(), y_v.copy()

    def diag_tight() -> bool:
        return bool(np.all(y_u + y_v - np.diag(A) <= tol))

    # deterministic greedy matching inside the equality subgraph
    for i in range(n):
        for j in range(n):
            if match_of_col[j] < 0 and y_u[i] + y_v[j] - A[i, j] <= tol:
                match_of_col[j] = i
                match_of_row[i] = j
                break

    def make_result():
        labels = LabelPair(y_u=y_u.copy(), y_v=y_v.copy())
        trace = KmTrace(
            initial_y_u=initial_y_u, initial_y_v=initial_y_v,
            alpha_l=tuple(trace_alpha),
            y_u_after=tuple(trace_yu), y_v_after=tuple(trace_yv),
        )
        r = _full_power(alpha, am.subset, y_u)
        return (r, labels, trace) if return_trace else (r, labels)

    while True:
        if diag_tight():
            return make_result()
        try:
            root = match_of_row.index(-1)
        except ValueError:
            # perfect matching, diagonal still slack: the diagonal is not an
            # optimal assignment, so the target lies outside the region
            raise InfeasibleGdof("no feasible power allocation achieves d")

        in_tree_row = [False] * n
        in_tree_col = [False] * n
        in_tree_row[root] = True
        prev_col = [-1] * n  # tree row that discovered each column
        slack = y_u[root] + y_v - A[root]
        slack_row = [root] * n

        augmented = False
        while not augmented:
            j_tight = -1
            for j in range(n):
                if not in_tree_col[j] and slack[j] <= tol:
                    j_tight = j
                    break
            if j_tight < 0:
                candidates = [j for j in range(n) if not in_tree_col[j]]
                alpha_l = min(slack[j] for j in candidates)
                if len(trace_alpha) > n * n + n:
                    # each update adds a tight column to some tree, so this
                    # bound cannot be reached; guard against stalls anyway
                    raise RuntimeError("label updates exceeded the n^2 bound")
                for i in range(n):
                    if in_tree_row[i]:
                        y_u[i] -= alpha_l
                for j in range(n):
                    if in_tree_col[j]:
                        y_v[j] += alpha_l
                    else:
                        slack[j] -= alpha_l
                trace_alpha.append(float(alpha_l))
                trace_yu.append(y_u.copy())
                trace_yv.append(y_v.copy())
                if diag_tight():
                    return make_result()
                continue

            j = j_tight
            prev_col[j] = slack_row[j]
            owner = match_of_col[j]
            if owner < 0:
                # augmenting path found: flip matches back to the root
                while True:
                    row = prev_col[j]
                    old = match_of_row[row]
                    match_of_col[j] = row
                    match_of_row[row] = j
                    if old < 0:
                        break
                    j = old
                augmented = True
            else:
                in_tree_col[j] = True
                in_tree_row[owner] = True
                new_slack = y_u[owner] + y_v - A[owner]
                better = new_slack < slack
                slack = np.where(better, new_slack, slack)
                for jj in range(n):
                    if better[jj]:
                        slack_row[jj] = owner


def solve_power_auction(alpha: ChannelMatrix, d, subset=None,
                        epsilon: float = DEFAULT_EPSILON, snap: bool = False,
                        bid_cap: int | None = None):
    """Decentralized auction solve for the minimum-power allocation.

    Bidders are transmitters holding their own row of A; products are the
    receivers. Each unassigned bidder in turn values every product at
    A_ij - y_v_j, takes the best one if its value is at least epsilon
    (displacing any owner back into the demand queue), and raises that
    product's price by epsilon. Final prices sit within |subset|*epsilon of
    the centralized minimum-price labels and r_i = y_v_j - A_ij on the final
    assignment. The demand queue is FIFO and value ties go to the lowest
    product index, so runs are deterministic.

    ``snap`` re-derives exact labels with a centralized solve of the same
    instance after the auction terminates. The bid count is capped at
    ceil(10 n^2 max(A)/epsilon) + n, beyond which the target is declared
    infeasible (or epsilon too large to resolve it).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    am = build_assignment_matrix(alpha, d, subset)
    n, A = am.n, am.A
    if n == 0:
        return PowerAlloc(np.full(alpha.K, -np.inf)), LabelPair(np.zeros(0), np.zeros(0))
    if snap:
        return solve_power_hungarian(alpha, d, subset)

    if bid_cap is None:
        bid_cap = int(math.ceil(10.0 * n * n * float(A.max()) / epsilon)) + n

    prices = np.zeros(n)
    owner = [-1] * n
    queue = deque(range(n))
    bids = 0
    while queue:
        if bids >= bid_cap:
            raise InfeasibleOrEpsilonTooLarge(
                f"auction exceeded {bid_cap} bids with bidders still unassigned"
            )
        bids += 1
        i = queue.popleft()
        values = A[i] - prices
        j = int(np.argmax(values))  # lowest index wins ties
        if values[j] >= epsilon:
            if owner[j] >= 0:
                queue.append(owner[j])
            owner[j] = i
            prices[j] += epsilon
        # else: bidder leaves the market unassigned

    y_u = np.zeros(n)
    assigned_product = [-1] * n
    for j in range(n):
        if owner[j] >= 0:
            assigned_product[owner[j]] = j
    for i in range(n):
        j = assigned_product[i]
        if j >= 0:
            y_u[i] = A[i, j] - prices[j]
        else:
            y_u[i] = max(0.0, float((A[i] - prices).max()))
    labels = LabelPair(y_u=y_u, y_v=prices.copy())
    return _full_power(alpha, am.subset, y_u), labels


def is_feasible(alpha: ChannelMatrix, d, tol: float = DEFAULT_TOL) -> bool:
    """Whether the target tuple is TIN-achievable, by assignment solvability.

    Zero-target users are removed first; a target above its direct strength or
    a Kuhn-Munkres run that cannot make the diagonal tight is infeasible. The
    verdict agrees with membership in the achievable region.
    """
    dv = _as_gdof(d)
    if dv.size != alpha.K:
        raise ShapeError(f"d has {dv.size} entries for a {alpha.K}-user network")
    if np.any(dv < -tol):
        return False
    support = tuple(int(k) for k in np.nonzero(dv > tol)[0])
    try:
        solve_power_hungarian(alpha, np.maximum(dv, 0.0), subset=support, tol=tol)
    except Infeasible:
        return False
    return True
