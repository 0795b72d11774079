"""TIN-achievable GDoF polytopes in both of their standard representations,
membership tests, per-user strength conditions, and the permutation-based
converse bound.

A polytope for an active subset S is the halfspace system

    sum_{k in S'} d_k <= c_{S'} = sum_{k in S'} alpha_kk - w(M*_{S'})

over every non-empty S' of S (2^|S| - 1 constraints), where w(M*_{S'}) is the
maximum matching weight of the subset under cross strengths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import OracleLimitExceeded, ShapeError, SubsetTooLarge
from .matching import _lsa_max, max_matching_weight
from .model import ChannelMatrix, GdofTuple

__all__ = [
    "TinaPolytope",
    "ConditionReport",
    "tina_polytope",
    "tina_polytope_cyclic",
    "contains",
    "union_membership",
    "check_conditions",
    "converse_g_bound",
]

DEFAULT_TOL = 1e-9
POLYTOPE_MAX = 20
CYCLIC_ORACLE_MAX = 8
G_BOUND_MAX = 7
C2_MAX_K = 12


@dataclass(frozen=True)
class TinaPolytope:
    """Halfspace description of a TIN-achievable region: one bound per
    non-empty subset of the active user set, in a K-user ambient space."""

    K: int
    subset: tuple
    constraints: dict  # frozenset of users -> bound on their GDoF sum

    def bound(self, users) -> float:
        return self.constraints[frozenset(int(u) for u in users)]


@dataclass(frozen=True)
class ConditionReport:
    """Per-user strength-condition verdicts and the zero-edge matching
    condition. ``gnaj`` is the strict condition (desired strength at least
    max incoming plus max outgoing), ``c1`` the relaxed pairwise one; ``c2``
    is the global zero-edge condition over subsets of size > 2, or None when
    skipped for size. Witnesses give an (i, j) pair per violated user and the
    first failing subset for c2."""

    gnaj: tuple
    c1: tuple
    c2: bool | None
    gnaj_witnesses: dict = field(default_factory=dict)
    c1_witnesses: dict = field(default_factory=dict)
    c2_witness: tuple | None = None
    c2_skipped: bool = False

    def violation_triples(self) -> tuple:
        """(i, j, k) per violated per-user condition, merged over both."""
        out = []
        for k, (i, j) in sorted(self.c1_witnesses.items()):
            out.append((i, j, k))
        for k, (i, j) in sorted(self.gnaj_witnesses.items()):
            if k not in self.c1_witnesses:
                out.append((i, j, k))
        return tuple(out)


def _check_subset(alpha: ChannelMatrix, subset) -> tuple[int, ...]:
    if subset is None:
        return tuple(range(alpha.K))
    idx = tuple(sorted(int(i) for i in subset))
    if len(idx) == 0:
        raise IndexError("subset must be non-empty")
    if len(set(idx)) != len(idx):
        raise IndexError(f"subset has repeated indices: {subset}")
    if idx[0] < 0 or idx[-1] >= alpha.K:
        raise IndexError(f"subset {subset} out of range for K={alpha.K}")
    return idx


def _nonempty_subsets(idx):
    for size in range(1, len(idx) + 1):
        yield from itertools.combinations(idx, size)


def tina_polytope(alpha: ChannelMatrix, subset=None, cap: int = POLYTOPE_MAX) -> TinaPolytope:
    """Matching-form polytope: c_{S'} = sum alpha_kk - w(M*_{S'}) for every
    non-empty S' of the subset, in deterministic (size, lexicographic) order."""
    idx = _check_subset(alpha, subset)
    if len(idx) > cap:
        raise SubsetTooLarge(f"subset size {len(idx)} exceeds cap {cap}")
    diag = np.diag(alpha.alpha)
    constraints = {}
    for sub in _nonempty_subsets(idx):
        bound = float(diag[list(sub)].sum()) - max_matching_weight(alpha, sub)
        constraints[frozenset(sub)] = bound
    return TinaPolytope(K=alpha.K, subset=idx, constraints=constraints)


def tina_polytope_cyclic(alpha: ChannelMatrix, subset=None,
                         cap: int = CYCLIC_ORACLE_MAX) -> TinaPolytope:
    """Cyclic-form polytope, built without any matching solver.

    The raw system has one inequality per ordered cycle (i_0, ..., i_{m-1}):
    sum_k d_{i_k} <= sum_k (alpha_{i_k i_k} - alpha_{i_{k-1} i_k}). The bound
    this system implies for a subset's GDoF sum is the best way to cover the
    subset with disjoint cycles and singletons (singletons contribute their
    individual bound alpha_kk); that cover is found by dynamic programming
    over sub-subsets, with each cycle bound enumerated explicitly.
    """
    idx = _check_subset(alpha, subset)
    n = len(idx)
    if n > cap:
        raise OracleLimitExceeded(f"cyclic oracle capped at {cap}, got {n}")
    a = alpha.alpha

    # tightest single-cycle (or singleton) bound per block of users
    block = {}
    for sub in _nonempty_subsets(idx):
        if len(sub) == 1:
            block[sub] = float(a[sub[0], sub[0]])
            continue
        first, rest = sub[0], sub[1:]
        best = np.inf
        for perm in itertools.permutations(rest):
            seq = (first,) + perm
            val = sum(
                a[seq[t], seq[t]] - a[seq[t - 1], seq[t]]
                for t in range(len(seq))
            )
            best = min(best, val)
        block[sub] = float(best)

    pos = {u: p for p, u in enumerate(idx)}
    members = {sub: sum(1 << pos[u] for u in sub) for sub in block}
    block_by_mask = {members[sub]: b for sub, b in block.items()}

    best_cover = [0.0] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        best = np.inf
        sub = mask
        while sub:
            if sub & low:
                b = block_by_mask.get(sub)
                if b is not None:
                    best = min(best, b + best_cover[mask ^ sub])
            sub = (sub - 1) & mask
        best_cover[mask] = best

    constraints = {}
    for sub in _nonempty_subsets(idx):
        constraints[frozenset(sub)] = best_cover[members[sub]]
    return TinaPolytope(K=alpha.K, subset=idx, constraints=constraints)


def contains(poly: TinaPolytope, d: GdofTuple, tol: float = DEFAULT_TOL) -> bool:
    """Membership: nonnegativity, zero outside the subset, and every subset
    sum within its bound, all to absolute tolerance."""
    if d.K != poly.K:
        raise ShapeError(f"d has {d.K} entries for a {poly.K}-user polytope")
    v = d.d
    if np.any(v < -tol):
        return False
    outside = np.ones(poly.K, dtype=bool)
    outside[list(poly.subset)] = False
    if np.any(np.abs(v[outside]) > tol):
        return False
    for users, bound in poly.constraints.items():
        if v[list(users)].sum() > bound + tol:
            return False
    return True


def union_membership(alpha: ChannelMatrix, d: GdofTuple,
                     tol: float = DEFAULT_TOL) -> tuple[bool, tuple]:
    """Whether d is TIN-achievable for some active subset.

    Positive entries pin the candidate subset to the support of d, so only
    that one polytope needs checking; the witness is the support.
    """
    if d.K != alpha.K:
        raise ShapeError(f"d has {d.K} entries for a {alpha.K}-user network")
    if np.any(d.d < -tol):
        return False, ()
    support = d.support(tol)
    if not support:
        return True, ()
    poly = tina_polytope(alpha, support)
    return contains(poly, d, tol), support


def check_conditions(alpha: ChannelMatrix, tol: float = DEFAULT_TOL,
                     c2_max_k: int = C2_MAX_K) -> ConditionReport:
    """Evaluate the per-user strength conditions and the zero-edge condition.

    Strict per-user condition:  alpha_kk >= max_{i!=k} alpha_ik + max_{j!=k} alpha_kj.
    Relaxed per-user condition: alpha_kk >= max_{i,j!=k} (alpha_ik + alpha_kj - alpha'_ij),
    the i = j case included.
    Zero-edge condition: every subset S with |S| > 2 has some maximum matching
    containing an edge of strength zero; checked by forcing each zero edge and
    asking whether the constrained matching still reaches w(M*_S). Subsets of
    size <= 2 are exempt. Skipped (c2 = None) above ``c2_max_k`` users.
    """
    K = alpha.K
    a = alpha.alpha
    ap = alpha.alpha_prime()

    gnaj, c1 = [], []
    gnaj_w, c1_w = {}, {}
    for k in range(K):
        others = [i for i in range(K) if i != k]
        if not others:
            gnaj.append(True)
            c1.append(True)
            continue
        i_in = max(others, key=lambda i: a[i, k])
        j_out = max(others, key=lambda j: a[k, j])
        ok_gnaj = a[k, k] >= a[i_in, k] + a[k, j_out] - tol
        gnaj.append(bool(ok_gnaj))
        if not ok_gnaj:
            gnaj_w[k] = (i_in, j_out)

        best_val, best_pair = -np.inf, None
        for i in others:
            for j in others:
                val = a[i, k] + a[k, j] - ap[i, j]
                if val > best_val:
                    best_val, best_pair = val, (i, j)
        ok_c1 = a[k, k] >= best_val - tol
        c1.append(bool(ok_c1))
        if not ok_c1:
            c1_w[k] = best_pair

    c2: bool | None
    c2_witness = None
    c2_skipped = False
    if K > c2_max_k:
        c2 = None
        c2_skipped = True
    else:
        c2 = True
        for sub in _nonempty_subsets(tuple(range(K))):
            if len(sub) <= 2:
                continue
            if not _subset_has_zero_edge_optimum(a, ap, sub, tol):
                c2 = False
                c2_witness = sub
                break
    return ConditionReport(
        gnaj=tuple(gnaj), c1=tuple(c1), c2=c2,
        gnaj_witnesses=gnaj_w, c1_witnesses=c1_w,
        c2_witness=c2_witness, c2_skipped=c2_skipped,
    )


def _subset_has_zero_edge_optimum(a, ap, sub, tol) -> bool:
    """Is there a zero-strength edge inside sub x sub that some maximum
    matching of the block can contain?"""
    sub = list(sub)
    w_star = _lsa_max(ap[np.ix_(sub, sub)])
    for i in sub:
        for j in sub:
            if a[i, j] > tol:
                continue
            rows = [r for r in sub if r != i]
            cols = [c for c in sub if c != j]
            forced = _lsa_max(ap[np.ix_(rows, cols)])  # the zero edge adds 0
            if forced >= w_star - tol:
                return True
    return False


def converse_g_bound(alpha: ChannelMatrix, subset, cap: int = G_BOUND_MAX) -> float:
    """Permutation outer bound on the subset's GDoF sum:

        min over orderings pi and positions k of
        sum_j (alpha_{i_j i_j} - alpha_{i_{j-1} i_j}) + alpha_{i_{k-1} i_k}

    with indices cyclic in the ordering.
    """
    idx = _check_subset(alpha, subset)
    m = len(idx)
    if m > cap:
        raise OracleLimitExceeded(f"permutation bound capped at {cap}, got {m}")
    a = alpha.alpha
    best = np.inf
    for perm in itertools.permutations(idx):
        f = sum(a[perm[t], perm[t]] - a[perm[t - 1], perm[t]] for t in range(m))
        g = f + min(a[perm[t - 1], perm[t]] for t in range(m))
        best = min(best, g)
    return float(best)
