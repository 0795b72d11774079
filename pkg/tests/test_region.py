"""Achievable-region builders, optimality conditions, and the outer bound."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_alpha
from tinq import (
    ChannelMatrix,
    GdofTuple,
    NETWORK_A,
    NETWORK_B,
    check_conditions,
    contains,
    converse_g_bound,
    max_matching_weight,
    tina_polytope,
    tina_polytope_cyclic,
    union_membership,
)
from tinq.exceptions import OracleLimitExceeded, SubsetTooLarge


def fs(*ix):
    return frozenset(ix)


def test_fixture_a_bounds():
    c = tina_polytope(NETWORK_A).constraints
    assert c[fs(0)] == pytest.approx(2.0, abs=1e-9)
    assert c[fs(1)] == pytest.approx(1.0, abs=1e-9)
    assert c[fs(2)] == pytest.approx(1.5, abs=1e-9)
    assert c[fs(0, 1)] == pytest.approx(2.3, abs=1e-9)
    assert c[fs(1, 2)] == pytest.approx(1.5, abs=1e-9)
    assert c[fs(0, 2)] == pytest.approx(2.4, abs=1e-9)
    assert c[fs(0, 1, 2)] == pytest.approx(2.5, abs=1e-9)


def test_fixture_b_bounds():
    c = tina_polytope(NETWORK_B).constraints
    assert c[fs(0)] == c[fs(1)] == c[fs(2)] == pytest.approx(1.0, abs=1e-9)
    assert c[fs(0, 1)] == pytest.approx(1.1, abs=1e-9)
    assert c[fs(1, 2)] == pytest.approx(1.3, abs=1e-9)
    assert c[fs(0, 2)] == pytest.approx(1.2, abs=1e-9)
    assert c[fs(0, 1, 2)] == pytest.approx(1.8, abs=1e-9)


def test_zero_cross_region_is_box():
    alpha = ChannelMatrix(np.diag([1.5, 0.7, 2.0]))
    c = tina_polytope(alpha).constraints
    for subset, bound in c.items():
        assert bound == pytest.approx(
            sum(alpha.alpha[i, i] for i in subset), abs=1e-12
        )


def test_cyclic_pair_and_symmetric_example():
    c = tina_polytope_cyclic(NETWORK_A).constraints
    assert c[fs(0, 1)] == pytest.approx(2.3, abs=1e-9)
    assert c[fs(0, 1, 2)] == pytest.approx(2.5, abs=1e-9)
    sym = ChannelMatrix(np.array([[1.0, 0.4], [0.4, 1.0]]))
    assert tina_polytope_cyclic(sym).constraints[fs(0, 1)] == pytest.approx(1.2)


def test_polytope_caps():
    big = ChannelMatrix(np.eye(21))
    with pytest.raises(SubsetTooLarge):
        tina_polytope(big)
    big9 = ChannelMatrix(np.eye(9))
    with pytest.raises(OracleLimitExceeded):
        tina_polytope_cyclic(big9)


def test_contains_examples():
    poly = tina_polytope(NETWORK_A)
    assert contains(poly, GdofTuple(np.array([0.5, 0.6, 0.7])))
    assert not contains(poly, GdofTuple(np.array([2.0, 1.0, 1.5])))
    assert contains(poly, GdofTuple(np.zeros(3)))


def test_union_membership_examples():
    ok, witness = union_membership(NETWORK_A, GdofTuple(np.array([0.5, 0.6, 0.7])))
    assert ok and witness == (0, 1, 2)
    ok, witness = union_membership(NETWORK_A, GdofTuple(np.array([2.0, 0.0, 0.0])))
    assert ok and witness == (0,)
    ok, _ = union_membership(NETWORK_B, GdofTuple(np.array([1.0, 0.9, 0.0])))
    assert not ok


def test_conditions_fixture_b():
    rep = check_conditions(NETWORK_B)
    assert rep.c1 == (True, True, True)
    assert rep.gnaj == (False, False, True)
    assert rep.c2 and not rep.c2_skipped


def test_conditions_diagonal_dominant():
    a = np.full((3, 3), 1.0)
    np.fill_diagonal(a, 10.0)
    rep = check_conditions(ChannelMatrix(a))
    assert all(rep.gnaj) and all(rep.c1)
    # every cross link is positive, so no maximum matching can contain a
    # zero-strength edge
    assert not rep.c2


def test_conditions_cyclic_pattern():
    a = np.array([
        [1.5, 1.0, 0.8],
        [0.8, 1.5, 1.0],
        [1.0, 0.8, 1.5],
    ])
    rep = check_conditions(ChannelMatrix(a))
    # every user sees max-in + max-out = 1 + 1 = 2 > 1.5 for GNAJ, and the
    # worst C1 pair (i = j) gives 1 + 0.8 = 1.8 > 1.5
    assert rep.gnaj == (False, False, False)
    assert rep.c1 == (False, False, False)


def test_c2_fails_without_zero_edges():
    a = np.full((3, 3), 0.5)
    np.fill_diagonal(a, 2.0)
    rep = check_conditions(ChannelMatrix(a))
    assert not rep.c2


def test_c2_skipped_above_cap():
    alpha = ChannelMatrix(np.eye(13))
    rep = check_conditions(alpha)
    assert rep.c2_skipped


def test_converse_fixture_b():
    assert converse_g_bound(NETWORK_B, (0, 1, 2)) == pytest.approx(1.8, abs=1e-9)


def test_converse_two_user_formula():
    rng = np.random.default_rng(5)
    for _ in range(25):
        alpha = random_alpha(rng, 2)
        a = alpha.alpha
        expect = a[0, 0] + a[1, 1] - a[0, 1] - a[1, 0] + min(a[0, 1], a[1, 0])
        assert converse_g_bound(alpha, (0, 1)) == pytest.approx(expect, abs=1e-9)


def test_converse_zero_cross():
    alpha = ChannelMatrix(np.diag([1.0, 2.0, 0.5]))
    assert converse_g_bound(alpha, (0, 1, 2)) == pytest.approx(3.5)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=60)
def test_representation_equivalence(k, seed):
    alpha = random_alpha(np.random.default_rng(seed), k)
    direct = tina_polytope(alpha).constraints
    cyclic = tina_polytope_cyclic(alpha).constraints
    assert direct.keys() == cyclic.keys()
    for subset, bound in direct.items():
        assert bound == pytest.approx(cyclic[subset], abs=1e-9)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=30)
def test_membership_verdicts_agree(k, seed):
    rng = np.random.default_rng(seed)
    alpha = random_alpha(rng, k)
    pd = tina_polytope(alpha)
    pc = tina_polytope_cyclic(alpha)
    diag = np.diag(alpha.alpha)
    for _ in range(200):
        d = GdofTuple(rng.uniform(0.0, 1.2, size=k) * diag)
        assert contains(pd, d) == contains(pc, d)


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=80)
def test_gnaj_implies_c1(k, seed):
    alpha = random_alpha(np.random.default_rng(seed), k, cross_hi=1.2)
    rep = check_conditions(alpha, c2_max_k=0)
    for g, c in zip(rep.gnaj, rep.c1):
        assert c or not g


def c1_instance(rng, k):
    """Rejection-sample a channel where C1 holds for every user."""
    for _ in range(400):
        alpha = random_alpha(rng, k, diag_lo=1.0, diag_hi=2.5, cross_hi=0.9)
        if all(check_conditions(alpha, c2_max_k=0).c1):
            return alpha
    raise AssertionError("could not sample a C1 instance")


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=25)
def test_nested_monotonicity_under_c1(k, seed):
    rng = np.random.default_rng(seed)
    alpha = c1_instance(rng, k)
    inner = tuple(sorted(rng.choice(k, size=max(1, k - 1), replace=False).tolist()))
    p_inner = tina_polytope(alpha, subset=inner)
    p_full = tina_polytope(alpha)
    diag = np.diag(alpha.alpha)
    hits = 0
    for _ in range(300):
        d = np.zeros(k)
        d[list(inner)] = rng.uniform(0.0, 1.0, size=len(inner)) * diag[list(inner)]
        t = GdofTuple(d)
        if contains(p_inner, t):
            hits += 1
            assert contains(p_full, t)
    assert hits > 0


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=40)
def test_subadditivity_of_bounds(k, seed):
    # concatenating the two optimal matchings of disjoint blocks is feasible
    # for the union, so w(M*) is superadditive and the sum bounds
    # c_S = sum(diag) - w(M*_S) are subadditive
    rng = np.random.default_rng(seed)
    alpha = random_alpha(rng, k)
    c = tina_polytope(alpha).constraints
    subsets = list(c)
    for s1 in subsets:
        for s2 in subsets:
            if s1 & s2:
                continue
            assert c[s1 | s2] <= c[s1] + c[s2] + 1e-9


def lemma_one_rhs(a: np.ndarray, subset, k: int) -> float:
    rest = [i for i in subset if i != k]
    best = -np.inf
    for i in rest:
        for j in rest:
            cross = 0.0 if i == j else a[i, j]
            best = max(best, a[i, k] + a[k, j] - cross)
    return best


@given(st.integers(3, 7), st.integers(0, 2**31 - 1))
@settings(max_examples=80)
def test_matching_drop_one_bound(k, seed):
    rng = np.random.default_rng(seed)
    alpha = random_alpha(rng, k)
    size = int(rng.integers(2, k + 1))
    subset = tuple(sorted(rng.choice(k, size=size, replace=False).tolist()))
    drop = int(rng.choice(list(subset)))
    w_full = max_matching_weight(alpha, subset)
    rest = tuple(i for i in subset if i != drop)
    w_rest = max_matching_weight(alpha, rest) if rest else 0.0
    assert w_full - w_rest <= lemma_one_rhs(alpha.alpha, subset, drop) + 1e-9


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=30)
def test_converse_tight_under_c1_c2(k, seed):
    # for |S| > 2 the zero-edge condition collapses the permutation bound to
    # the region bound; for a pair the permutation bound carries an extra
    # min(a_ij, a_ji) term, so it matches only when one direction is silent
    rng = np.random.default_rng(seed)
    for _ in range(200):
        a = rng.uniform(0.0, 0.6, size=(k, k))
        a[rng.uniform(size=(k, k)) < 0.5] = 0.0
        a[np.diag_indices(k)] = rng.uniform(1.0, 2.0, size=k)
        alpha = ChannelMatrix(np.round(a, 6))
        rep = check_conditions(alpha)
        if all(rep.c1) and rep.c2 and not rep.c2_skipped:
            break
    else:
        raise AssertionError("no C1+C2 sample found")
    c = tina_polytope(alpha).constraints
    for subset in c:
        sub = tuple(sorted(subset))
        g = converse_g_bound(alpha, sub)
        bound = c[frozenset(subset)]
        if len(sub) > 2:
            assert g == pytest.approx(bound, abs=1e-9)
        elif len(sub) == 2:
            i, j = sub
            extra = min(alpha.alpha[i, j], alpha.alpha[j, i])
            assert g == pytest.approx(bound + extra, abs=1e-9)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=30)
def test_converse_tight_one_direction_class(k, seed):
    # when at most one direction per pair carries interference, every pair has
    # a silent direction and the permutation bound is tight on all subsets
    rng = np.random.default_rng(seed)
    for _ in range(300):
        a = np.zeros((k, k))
        a[np.diag_indices(k)] = rng.uniform(1.0, 2.0, size=k)
        for i in range(k):
            for j in range(i + 1, k):
                if rng.random() < 0.5:
                    if rng.random() < 0.5:
                        a[i, j] = rng.uniform(0.05, 0.8)
                    else:
                        a[j, i] = rng.uniform(0.05, 0.8)
        alpha = ChannelMatrix(np.round(a, 6))
        rep = check_conditions(alpha)
        if all(rep.c1) and rep.c2 and not rep.c2_skipped:
            break
    else:
        raise AssertionError("no C1+C2 sample found")
    c = tina_polytope(alpha).constraints
    for subset in c:
        if len(subset) < 2:
            continue
        sub = tuple(sorted(subset))
        assert converse_g_bound(alpha, sub) == pytest.approx(
            c[frozenset(subset)], abs=1e-9
        )
