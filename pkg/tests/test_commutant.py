from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soficlab import commutant as c
from soficlab import perm
from soficlab.perm import Permutation


def even_scramble(n, seed):
    """Random permutation of the even points, fixing the odd ones."""
    img = np.arange(1, n + 1)
    evens = img[1::2].copy()
    img[1::2] = evens[np.random.default_rng(seed).permutation(evens.size)]
    return Permutation(img)


def test_commutation_defect_examples():
    n = 8
    s = perm.cyclic_shift(n)
    assert c.commutation_defect(Permutation.identity(n), s) == 0
    assert c.commutation_defect(s, s) == 0
    # disagreements at x = 1, 2, 4; at x = 3 both sides give 4
    assert c.commutation_defect(Permutation([2, 1, 3, 4]), perm.cyclic_shift(4)) == Fraction(3, 4)
    with pytest.raises(ValueError):
        c.commutation_defect(Permutation.identity(3), s)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10**6))
def test_commutation_defect_brute(n, seed):
    p, s = perm.uniform(n, seed), perm.uniform(n, seed + 1)
    want = sum(p(s(x)) != s(p(x)) for x in range(1, n + 1))
    assert c.commutation_defect(p, s) == Fraction(want, n)


def test_greedy_examples():
    assert c.greedy_disjoint_subset(Permutation.identity(6), []) == frozenset()
    p = Permutation([1, 4, 3, 2, 5])
    assert c.greedy_disjoint_subset(p, {2, 4}) == {2}


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 200), st.integers(0, 10**6), st.data())
def test_greedy_guarantees(n, seed, data):
    p = perm.uniform(n, seed)
    moved = [x for x in range(1, n + 1) if p(x) != x]
    b = set(data.draw(st.lists(st.sampled_from(moved), unique=True)) if moved else [])
    chosen = c.greedy_disjoint_subset(p, b)
    assert chosen <= b
    assert not ({p(x) for x in chosen} & chosen)
    assert 3 * len(chosen) >= len(b)
    # maximal under the scan: every rejected point conflicts with the result
    for x in b - chosen:
        assert p(x) in chosen or x in {p(y) for y in chosen}


def test_swap_families():
    assert list(c.even_swap(6, {2, 6})) == [6, 3, 2, 4, 5, 1]
    assert list(c.odd_swap(5, {1, 3})) == [2, 1, 4, 3, 5]
    with pytest.raises(ValueError):
        c.odd_swap(5, {5})
    assert list(c.even_cycle(7)) == [1, 4, 3, 6, 5, 2, 7]


def test_identity_report():
    r = c.commutant_witness(Permutation.identity(10))
    assert r.B_size == r.C_size == 0
    assert r.max_defect == 0 and r.odd_defect2 == r.odd_defect3 == 0
    assert r.A_fraction == 1 and r.invariants_hold()


def test_shift_report():
    r = c.commutant_witness(perm.cyclic_shift(100), seed=1)
    assert r.defect1 == 0
    assert r.invariants_hold()
    assert r.defect3 >= r.AC_fraction


def test_small_degree_rejected():
    with pytest.raises(ValueError):
        c.commutant_witness(Permutation.identity(3))


@settings(max_examples=150, deadline=None)
@given(st.integers(4, 300), st.integers(0, 10**6))
def test_invariants_random(n, seed):
    r = c.commutant_witness(perm.uniform(n, seed), seed)
    assert r.invariants_hold()
    assert 0 <= r.AC_fraction <= r.A_fraction <= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 120), st.integers(0, 10**6))
def test_pointwise_argument(n, seed):
    """Every x in A ∩ C is a disagreement point of p and s³."""
    p = perm.uniform(n, seed)
    s1, s2 = perm.cyclic_shift(n), perm.odd_shift(n)
    a = {x for x in range(1, n + 1) if p(s1(x)) == s1(p(x)) and p(s2(x)) == s2(p(x))}
    b = [x for x in range(2, n + 1, 2) if p(x) != x]
    chosen = c.greedy_disjoint_subset(p, b)
    s3 = c.even_swap(n, chosen)
    for x in a & chosen:
        assert p(s3(x)) != s3(p(x))


@pytest.mark.parametrize("n", [100, 1000, 10_000])
def test_generators_have_small_coxeter_length(n):
    assert perm.coxeter_length(perm.cyclic_shift(n)) == Fraction(2, n)
    assert perm.coxeter_length(perm.odd_shift(n)) <= Fraction(4, n)
    chosen = c.greedy_disjoint_subset(perm.uniform(n, 0), range(2, n + 1, 2))
    s3 = c.even_swap(n, chosen)
    assert perm.coxeter_length(s3) <= Fraction(2 * (len(chosen) + 2 * n), n * (n - 1))


def test_far_from_identity_cannot_commute():
    n = 10_000
    for seed in range(100):
        p = even_scramble(n, seed)
        assert perm.hamming_length(p) > Fraction(45, 100)
        r = c.commutant_witness(p, seed)
        assert r.defect1 + r.defect2 + r.defect3 >= Fraction(1, 10)


def test_random_support_witness():
    n = 10_000
    for seed in range(20):
        r = c.commutant_witness(perm.random_support(n, n // 2, seed), seed)
        assert r.max_defect >= Fraction(1, 10)
