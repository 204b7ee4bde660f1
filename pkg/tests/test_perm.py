import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soficlab import perm
from soficlab.perm import Permutation, compose, inverse


@st.composite
def permutations(draw, max_n=60):
    n = draw(st.integers(1, max_n))
    return Permutation(draw(st.permutations(range(1, n + 1))))


def test_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation([1, 1, 3])
    with pytest.raises(ValueError):
        Permutation([0, 1, 2])
    with pytest.raises(ValueError):
        Permutation([])


def test_image_is_read_only():
    p = perm.cyclic_shift(4)
    with pytest.raises(ValueError):
        p.image[0] = 1


def test_compose_examples():
    assert compose(Permutation.identity(4), Permutation.identity(4)) == Permutation.identity(4)
    s = perm.cyclic_shift(10)
    assert compose(s, inverse(s)).is_identity()
    assert list(compose(perm.cyclic_shift(4), perm.cyclic_shift(4))) == [3, 4, 1, 2]
    with pytest.raises(ValueError):
        compose(perm.cyclic_shift(3), perm.cyclic_shift(4))


def test_compose_order_is_p_after_q():
    p = Permutation([2, 1, 3])
    q = Permutation([1, 3, 2])
    r = compose(p, q)
    assert [r(i) for i in (1, 2, 3)] == [p(q(i)) for i in (1, 2, 3)]


def test_inverse_examples():
    assert inverse(Permutation.identity(7)).is_identity()
    assert inverse(perm.reversal(5)) == perm.reversal(5)
    assert list(inverse(perm.cyclic_shift(10))) == [10, 1, 2, 3, 4, 5, 6, 7, 8, 9]


def test_hamming_examples():
    assert perm.hamming_length(Permutation.identity(9)) == 0
    assert perm.hamming_length(perm.cyclic_shift(10)) == 1
    img = list(range(1, 101))
    img[3], img[70] = img[70], img[3]
    assert perm.hamming_length(Permutation(img)) == Fraction(2, 100)


def test_coxeter_examples():
    assert perm.coxeter_length(Permutation.identity(30)) == 0
    for n in range(2, 40):
        assert perm.coxeter_length(perm.reversal(n)) == 1
    s = perm.cyclic_shift(10)
    assert perm.brute_inversions(s) == 9
    assert perm.inversions(s) == 9
    assert perm.coxeter_length(s) == Fraction(2, 10)


def test_only_identity_has_zero_coxeter_length():
    for n in range(1, 6):
        for img in itertools.permutations(range(1, n + 1)):
            p = Permutation(img)
            assert (perm.coxeter_length(p) == 0) == p.is_identity()


def test_total_displacement_examples():
    assert perm.total_displacement(Permutation.identity(5)) == 0
    for n in (2, 3, 10, 57):
        s = perm.cyclic_shift(n)
        assert perm.displacement_sum(s) == 2 * (n - 1)
        assert perm.total_displacement(s) == Fraction(4, n) == 2 * perm.coxeter_length(s)
    r = perm.reversal(4)
    assert perm.displacement_sum(r) == 8
    assert perm.total_displacement(r) == Fraction(4, 3)


def test_degree_one_lengths_are_zero():
    r = perm.length_report(Permutation([1]))
    assert (r.hamming, r.coxeter, r.displacement) == (0, 0, 0)


def test_segment_displacement_examples():
    assert perm.segment_displacement(Permutation.identity(6)) == 0
    assert perm.segment_displacement(Permutation([2, 1])) == 2
    three_cycle = Permutation([2, 3, 1])
    assert perm.segment_displacement(three_cycle) == 4 == 1 + 1 + 2


def _set_oracle(p):
    total = 0
    for x in range(1, p.n + 1):
        seg = set(range(1, x + 1))
        total += len({p(y) for y in seg} ^ seg)
    return total


def test_segment_displacement_exhaustive_small():
    for n in range(1, 7):
        for img in itertools.permutations(range(1, n + 1)):
            p = Permutation(img)
            assert perm.segment_displacement(p) == _set_oracle(p) == perm.displacement_sum(p)


@settings(max_examples=300, deadline=None)
@given(permutations())
def test_length_chain_exact(p):
    r = perm.length_report(p)
    assert r.coxeter <= 2 * r.hamming
    assert r.coxeter <= r.displacement <= 2 * r.coxeter
    assert r.hamming == Fraction(r.moved_points, p.n)


@settings(max_examples=300, deadline=None)
@given(permutations())
def test_fast_matches_brute(p):
    assert perm.inversions(p) == perm.brute_inversions(p)
    assert perm.segment_displacement(p) == perm.brute_segment_displacement(p) == _set_oracle(p)


@settings(max_examples=200, deadline=None)
@given(permutations())
def test_lengths_invariant_under_inverse(p):
    q = inverse(p)
    assert perm.coxeter_length(p) == perm.coxeter_length(q)
    assert perm.hamming_length(p) == perm.hamming_length(q)
    assert compose(p, q).is_identity() and compose(q, p).is_identity()


def test_batch_counts_match_single():
    rng = np.random.default_rng(5)
    rows = np.stack([rng.permutation(50) + 1 for _ in range(20)])
    inv, moved, disp = perm.batch_counts(rows)
    for r, a, b, c in zip(rows, inv, moved, disp):
        p = Permutation(r)
        assert (a, b, c) == (perm.inversions(p), perm.moved_points(p), perm.displacement_sum(p))


def test_family_examples():
    assert list(perm.build_family("cyclic_shift", 5)) == [2, 3, 4, 5, 1]
    assert list(perm.build_family("odd_shift", 7)) == [3, 2, 5, 4, 7, 6, 1]
    assert list(perm.build_family("paired_swap", 6, params={"points": [2]})) == [1, 3, 2, 4, 5, 6]
    assert list(perm.build_family("reversal", 4)) == [4, 3, 2, 1]
    assert perm.build_family("identity", 3).is_identity()


def test_odd_shift_small_degrees():
    assert perm.odd_shift(1).is_identity()
    assert perm.odd_shift(2).is_identity()
    assert list(perm.odd_shift(3)) == [3, 2, 1]
    assert list(perm.odd_shift(8)) == [3, 2, 5, 4, 7, 6, 1, 8]


def test_family_errors():
    with pytest.raises(ValueError):
        perm.build_family("paired_swap", 6, params={"points": [3]})
    with pytest.raises(ValueError):
        perm.build_family("paired_swap", 6, params={"points": [6]})
    with pytest.raises(ValueError):
        perm.build_family("uniform", 6)
    with pytest.raises(ValueError):
        perm.build_family("nope", 6)


def test_random_families_deterministic():
    assert perm.build_family("uniform", 500, seed=3) == perm.build_family("uniform", 500, seed=3)
    assert perm.build_family("uniform", 500, seed=3) != perm.build_family("uniform", 500, seed=4)
    p = perm.build_family("random_support", 1000, seed=2, params={"k": 500})
    assert p.n == 1000 and perm.moved_points(p) == 500
    q = perm.build_family("random_support", 1000, seed=2, params={"fraction": "1/2"})
    assert q == p


def test_uniform_is_roughly_uniform():
    # each of the 6 permutations of S_3 should appear about 1/6 of the time
    counts = {}
    for seed in range(6000):
        key = tuple(perm.uniform(3, seed))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c - 1000) < 5 * (6000 * (1 / 6) * (5 / 6)) ** 0.5


@settings(max_examples=100, deadline=None)
@given(permutations(max_n=300))
def test_file_formats_round_trip(p):
    assert perm.from_text(perm.to_text(p)) == p
    data = perm.to_bytes(p)
    assert data[:4] == b"PRM1" and len(data) == 12 + 8 * p.n
    assert perm.from_bytes(data) == p
    assert perm.to_bytes(perm.from_bytes(data)) == data


def test_binary_layout_little_endian():
    data = perm.to_bytes(Permutation([2, 1]))
    assert data == b"PRM1" + (2).to_bytes(8, "little") + (2).to_bytes(8, "little") + (1).to_bytes(8, "little")


def test_file_io(tmp_path):
    p = perm.uniform(33, 1)
    perm.write_permutation(p, tmp_path / "p.txt")
    perm.write_permutation(p, tmp_path / "p.bin", binary=True)
    assert perm.read_permutation(tmp_path / "p.txt") == p
    assert perm.read_permutation(tmp_path / "p.bin") == p
    assert (tmp_path / "p.txt").read_text().splitlines()[0] == "33"


def test_malformed_files():
    with pytest.raises(ValueError):
        perm.from_text("3\n1 2\n")
    with pytest.raises(ValueError):
        perm.from_bytes(b"XXXX" + bytes(8))
    with pytest.raises(ValueError):
        perm.from_bytes(b"PRM1" + (2).to_bytes(8, "little") + bytes(8))
