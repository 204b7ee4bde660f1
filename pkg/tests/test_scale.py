from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soficlab import maps, perm, scale
from soficlab.perm import Permutation, compose, inverse


def brute_transfer(p, m):
    """Direct definition: entry [i][j] = #{x in B_j : p(x) in B_i} / #B_j."""
    sizes = scale.bin_sizes(p.n, m)
    blocks, start = [], 1
    for s in sizes:
        blocks.append(set(range(start, start + int(s))))
        start += int(s)
    return [
        [Fraction(sum(1 for x in blocks[j] if p(x) in blocks[i]), len(blocks[j])) for j in range(m)]
        for i in range(m)
    ]


# -- schedules and families ------------------------------------------------


def test_schedule_validation():
    assert scale.ScaleSchedule.parse("2^3..2^5").scales == (8, 16, 32)
    assert scale.ScaleSchedule.parse("3,5,9").scales == (3, 5, 9)
    with pytest.raises(ValueError):
        scale.ScaleSchedule((4, 4))
    with pytest.raises(ValueError):
        scale.ScaleSchedule(())
    with pytest.raises(ValueError):
        scale.ScaleSchedule((0, 3))


def test_profile_identity():
    prof = scale.profile(scale.named_family("identity"), scale.ScaleSchedule((8, 64, 512)))
    assert all(v == 0 for s in scale.STATS for v in prof.series(s))
    assert prof.classification == scale.APPROX_IDENTITY


def test_profile_cyclic_shift():
    sched = scale.ScaleSchedule.powers(2, 6, 14)
    prof = scale.profile(scale.named_family("cyclic_shift"), sched)
    assert prof.series("hamming") == [1] * len(sched)
    assert prof.series("coxeter") == [Fraction(2, n) for n in sched]
    assert prof.trend["coxeter"].exponent == pytest.approx(-1.0, abs=1e-9)
    assert prof.trend["hamming"].exponent == pytest.approx(0.0, abs=1e-12)
    assert prof.classification == scale.APPROX_ELL0


def test_profile_uniform_random():
    prof = scale.profile(scale.named_family("uniform", seed=11), scale.ScaleSchedule((1000, 4000, 16000)))
    for v in prof.series("coxeter"):
        assert abs(float(v) - 0.5) < 0.02
    assert prof.classification == scale.OUTSIDE_ELL0


def test_profile_thresholds_are_policy():
    sched = scale.ScaleSchedule((64, 128, 256))
    fam = scale.named_family("cyclic_shift")
    assert scale.profile(fam, sched).classification == scale.APPROX_ELL0
    strict = scale.Thresholds(exponent_max=-0.5, last_max=0.001)
    assert scale.profile(fam, sched, strict).classification == scale.OUTSIDE_ELL0


def test_profile_error_names_scale():
    fam = scale.named_family("paired_swap", params={"points": [6]})
    with pytest.raises(ValueError, match="scale 5"):
        scale.profile(fam, scale.ScaleSchedule((5, 8)))


def test_profile_of_discretized_map_family():
    fam = scale.named_family("map", params={"spec": "rotation:0.5"})
    prof = scale.profile(fam, scale.ScaleSchedule((100, 1000)))
    assert prof.classification == scale.OUTSIDE_ELL0


# -- transfer matrices -----------------------------------------------------


@pytest.mark.parametrize("n,m", [(12, 3), (13, 4), (10, 10), (7, 1), (25, 6)])
def test_bin_transfer_matches_definition(n, m):
    p = perm.uniform(n, n * m)
    t = scale.bin_transfer(p, m)
    assert t.rows() == brute_transfer(p, m)
    assert all(c == 1 for c in t.column_sums())


def test_bin_sizes_balanced():
    assert list(scale.bin_sizes(10, 3)) == [4, 3, 3]
    with pytest.raises(ValueError):
        scale.bin_sizes(3, 4)


def test_transfer_identity_and_reversal():
    t = scale.bin_transfer(Permutation.identity(40), 8)
    assert np.array_equal(t.as_float(), np.eye(8))
    r = scale.bin_transfer(perm.reversal(40), 8)
    assert np.array_equal(r.as_float(), np.fliplr(np.eye(8)))


def test_transfer_cyclic_shift_off_diagonal_mass():
    n, m = 10_000, 10
    t = scale.bin_transfer(perm.cyclic_shift(n), m)
    for j in range(m):
        assert t.entry(j, j) >= 1 - Fraction(m, n)
        off = sum(t.entry(i, j) for i in range(m) if i != j)
        assert off <= Fraction(m, n)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 200), st.integers(1, 10), st.integers(0, 10**6))
def test_balanced_transfer_doubly_stochastic(k, m, seed):
    n = k * m
    t = scale.bin_transfer(perm.uniform(n, seed), m)
    assert all(c == 1 for c in t.column_sums())
    assert all(r == 1 for r in t.row_sums())


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 300), st.integers(1, 12), st.integers(0, 10**6), st.booleans())
def test_defect_zero_iff_unit_columns(n, m, seed, structured):
    m = min(m, n)
    p = perm.cyclic_shift(n, seed % n) if structured else perm.uniform(n, seed)
    t = scale.bin_transfer(p, m)
    unit_columns = all(any(t.entry(i, j) == 1 for i in range(m)) for j in range(m))
    d = scale.gm_defect(p, m)
    assert 0 <= d <= 1
    assert (d == 0) == unit_columns


def test_gm_defect_examples():
    assert scale.gm_defect(Permutation.identity(100), 10) == 0
    p = maps.discretize_map(maps.Rotation(Fraction(37, 100)), 10**6)
    assert scale.gm_defect(p, 100) <= Fraction(2, 100)


def test_gm_defect_uniform_random_against_multinomial_oracle():
    n, m = 10**5, 10
    d = float(scale.gm_defect(perm.uniform(n, 9), m))
    rng = np.random.default_rng(123)
    size = n // m
    # column j is a multivariate hypergeometric draw; a multinomial is within O(1/n) of it
    draws = rng.multinomial(size, [1 / m] * m, size=(2000,))
    oracle = 1 - draws.max(axis=1).mean() / size
    assert abs(d - oracle) < 0.01
    assert abs(d - 0.9) < 0.02


def test_rotation_defect_is_distance_to_bin_grid():
    # bin j of a rotation by a splits as frac(a m) : 1 - frac(a m) across two bins
    n, m = 10**6, 100
    for a in (Fraction(1, 3), Fraction(41421356, 10**8), Fraction(1, 8)):
        frac = (a * m) % 1
        expected = float(min(frac, 1 - frac))
        d = float(scale.gm_defect(maps.discretize_map(maps.Rotation(a), n), m))
        assert abs(d - expected) <= 2 * m / n


# -- estimation ------------------------------------------------------------


def test_estimate_examples():
    e = scale.estimate_standard_map(Permutation.identity(1000), 10)
    assert e.bins == tuple(range(1, 11)) and e.defect == 0 and e.confidence == 1
    r = scale.estimate_standard_map(perm.reversal(1000), 10)
    assert r.bins == tuple(10 + 1 - j for j in range(1, 11))
    rot = scale.estimate_standard_map(maps.discretize_map(maps.parse_map("rotation:0.25"), 10**6), 100)
    assert rot.bins == tuple((j - 1 + 25) % 100 + 1 for j in range(1, 101))
    assert rot.is_bijection()


def test_estimate_ties_go_to_smallest_bin():
    # n = 4, m = 2: bin 1 = {1,2} sends one point to each bin
    e = scale.estimate_standard_map(Permutation([1, 3, 2, 4]), 2)
    assert e.bins == (1, 1)
    assert e.defect == Fraction(1, 2)


@pytest.mark.parametrize(
    "spec",
    ["rotation:0.25", "rotation:1/3", "rotation:0.41421356237309503", "iet:0.3,0.2,0.5/2,3,1",
     "iet:0.15,0.35,0.5/3,1,2"],
)
def test_round_trip_estimate(spec):
    m = 10
    n = 100 * m * m
    s = maps.parse_map(spec)
    est = scale.estimate_standard_map(maps.discretize_map(s, n), m)
    truth = maps.true_bin_map(s, m)
    assert sum(a == b for a, b in zip(est.bins, truth)) >= m - 2


@pytest.mark.parametrize(
    "f,g",
    [("rotation:0.25", "rotation:0.4"), ("rotation:1/3", "rotation:0.41421356237309503"),
     ("iet:0.3,0.2,0.5/2,3,1", "rotation:0.123"), ("iet:0.15,0.35,0.5/3,1,2", "iet:0.3,0.2,0.5/2,3,1")],
)
def test_composition_defect_subadditive(f, g):
    n, m = 100_000, 20
    p = maps.discretize_map(maps.parse_map(f), n)
    q = maps.discretize_map(maps.parse_map(g), n)
    lhs = scale.gm_defect(compose(p, q), m)
    assert lhs <= scale.gm_defect(p, m) + scale.gm_defect(q, m) + Fraction(2 * m, n)


@pytest.mark.parametrize("alpha", ["0.25", "1/3", "0.41421356237309503", "0.07"])
def test_inverse_consistency(alpha):
    n, m = 10**5, 100
    p = maps.discretize_map(maps.parse_map(f"rotation:{alpha}"), n)
    f = scale.estimate_standard_map(p, m).bins
    g = scale.estimate_standard_map(inverse(p), m).bins
    assert scale.compose_bin_maps(f, g) == tuple(range(1, m + 1))
