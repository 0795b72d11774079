"""Maximum-weight bipartite matching over user subsets with cross-strength
weights, cyclic-partition extraction, and a brute-force oracle.

Matchings live on the complete bipartite graph (transmitters x receivers) of a
subset; diagonal edges carry weight zero, so a perfect matching can represent
any partial cross matching. All weight comparisons use an absolute tolerance,
1e-9 by default.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import NotPerfect, OracleLimitExceeded
from .model import ChannelMatrix

__all__ = [
    "Matching",
    "CyclicPartition",
    "max_weight_matching",
    "max_matching_weight",
    "brute_force_matching",
    "cyclic_partition",
]

DEFAULT_TOL = 1e-9
ORACLE_MAX = 8


@dataclass(frozen=True)
class Matching:
    """A set of (tx, rx) edges, no two sharing a transmitter or receiver, and
    the sum of their cross-strength weights (diagonal edges count as 0)."""

    pairs: frozenset
    weight: float


@dataclass(frozen=True)
class CyclicPartition:
    """Disjoint ordered user cycles covering the matched users; ``is_best`` is
    true when the cycle supports' matching weights add up to the full subset's
    maximum matching weight."""

    cycles: tuple
    is_best: bool


def _check_subset(alpha: ChannelMatrix, subset) -> tuple[int, ...]:
    idx = tuple(sorted(int(i) for i in subset))
    if len(idx) == 0:
        raise IndexError("subset must be non-empty")
    if len(set(idx)) != len(idx):
        raise IndexError(f"subset has repeated indices: {subset}")
    if idx[0] < 0 or idx[-1] >= alpha.K:
        raise IndexError(f"subset {subset} out of range for K={alpha.K}")
    return idx


def _lsa_max(w: np.ndarray) -> float:
    """Maximum-weight perfect assignment value of a square weight matrix."""
    if w.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum())


def max_matching_weight(alpha: ChannelMatrix, subset) -> float:
    """w(M*_S): maximum matching weight of the subset under cross weights.

    Fast weight-only path; zero for singletons by construction.
    """
    idx = _check_subset(alpha, subset)
    w = alpha.alpha_prime()[np.ix_(idx, idx)]
    return _lsa_max(w)


def max_weight_matching(alpha: ChannelMatrix, subset, tol: float = DEFAULT_TOL) -> Matching:
    """Maximum-weight perfect matching on the subset with cross weights.

    Ties between equally-weighted optima are broken toward the
    lexicographically smallest edge set (scanning transmitters in ascending
    order, each taking the smallest receiver that still permits an optimal
    completion), so results are deterministic.
    """
    idx = _check_subset(alpha, subset)
    n = len(idx)
    w = alpha.alpha_prime()[np.ix_(idx, idx)]
    total = _lsa_max(w)

    sigma = [-1] * n
    free_cols = list(range(n))
    fixed = 0.0
    remaining_rows = list(range(n))
    for row in range(n):
        remaining_rows = [r for r in remaining_rows if r != row]
        for pos, col in enumerate(free_cols):
            rest = free_cols[:pos] + free_cols[pos + 1:]
            completion = _lsa_max(w[np.ix_(remaining_rows, rest)])
            if fixed + w[row, col] + completion >= total - tol:
                sigma[row] = col
                fixed += w[row, col]
                free_cols = rest
                break
        assert sigma[row] >= 0

    pairs = frozenset((idx[i], idx[sigma[i]]) for i in range(n))
    weight = float(sum(w[i, sigma[i]] for i in range(n)))
    return Matching(pairs=pairs, weight=weight)


def brute_force_matching(alpha: ChannelMatrix, subset, tol: float = DEFAULT_TOL) -> Matching:
    """Exhaustive oracle: enumerate every perfect matching of the subset.

    Only for |subset| <= 8; weight must agree with max_weight_matching.
    """
    idx = _check_subset(alpha, subset)
    n = len(idx)
    if n > ORACLE_MAX:
        raise OracleLimitExceeded(f"brute force capped at {ORACLE_MAX}, got {n}")
    w = alpha.alpha_prime()[np.ix_(idx, idx)]

    best = max(
        sum(w[i, p[i]] for i in range(n))
        for p in itertools.permutations(range(n))
    )
    for p in itertools.permutations(range(n)):
        weight = sum(w[i, p[i]] for i in range(n))
        if weight >= best - tol:
            pairs = frozenset((idx[i], idx[p[i]]) for i in range(n))
            return Matching(pairs=pairs, weight=float(weight))
    raise AssertionError("unreachable")


def cyclic_partition(alpha: ChannelMatrix, m: Matching, subset,
                     tol: float = DEFAULT_TOL) -> CyclicPartition:
    """Cycle decomposition of a perfect matching on the subset.

    Each matched chain is closed with diagonal edges and the resulting
    permutation j -> match(j) is decomposed into disjoint cycles, each listed
    from its smallest user. ``is_best`` reports whether the cycle supports
    split the subset's maximum matching weight exactly:
    w(M*_S) = sum_i w(M*_{S_i}).
    """
    idx = _check_subset(alpha, subset)
    txs = sorted(p[0] for p in m.pairs)
    rxs = sorted(p[1] for p in m.pairs)
    if txs != list(idx) or rxs != list(idx):
        raise NotPerfect(
            f"matching does not cover subset {idx} exactly once per side"
        )
    succ = {tx: rx for tx, rx in m.pairs}

    cycles = []
    seen = set()
    for start in idx:
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        nxt = succ[start]
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = succ[nxt]
        cycles.append(tuple(cyc))

    total = max_matching_weight(alpha, idx)
    parts = sum(max_matching_weight(alpha, c) for c in cycles)
    return CyclicPartition(cycles=tuple(cycles), is_best=bool(abs(total - parts) <= tol))
