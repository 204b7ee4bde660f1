"""Quick exact invariant suites, run by ``soficlab selftest``."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable

from soficlab import bernoulli, commutant, maps, perm, scale, sofic


def _chain_small() -> str:
    count = 0
    for n in range(1, 7):
        for img in itertools.permutations(range(1, n + 1)):
            r = perm.length_report(perm.Permutation(img))
            assert r.chain_holds(), img
            count += 1
    return f"{count} permutations of degree <= 6"


def _oracles() -> str:
    for n in (2, 17, 200, 999):
        for seed in range(5):
            p = perm.uniform(n, seed)
            assert perm.inversions(p) == perm.brute_inversions(p)
            assert perm.segment_displacement(p) == perm.brute_segment_displacement(p) == perm.displacement_sum(p)
    return "merge inversions and segment displacement match brute force"


def _closed_forms() -> str:
    for n in range(2, 200):
        assert perm.coxeter_length(perm.reversal(n)) == 1
        s = perm.cyclic_shift(n)
        assert perm.coxeter_length(s) == Fraction(2, n)
        assert perm.total_displacement(s) == 2 * perm.coxeter_length(s)
    return "reversal and cyclic shift, n = 2..199"


def _second_moment() -> str:
    for n in range(1, 13):
        pat = bernoulli.Pattern((perm.Permutation.identity(n),), (1,))
        ex = bernoulli.exhaustive_moments(pat)
        assert ex.mean == Fraction(1, 2) and ex.variance == Fraction(1, 4 * n)
    for n in range(2, 13):
        pat = bernoulli.Pattern((perm.Permutation.identity(n), perm.cyclic_shift(n)), (1, 1))
        assert bernoulli.exhaustive_moments(pat, good_only=True).mean == Fraction(1, 4)
    return "exact mean and variance for n <= 12"


def _regular_rep() -> str:
    pres = sofic.Presentation(1, ((1,) * 6,), sofic.cyclic_group_table(6))
    report = sofic.sofic_defect(sofic.regular_rep(pres, [1, 4]), 4)
    assert report.max_defect() == 0
    return "Z/6 regular representation has zero defect"


def _commutant() -> str:
    for seed in range(20):
        r = commutant.commutant_witness(perm.uniform(500, seed), seed)
        assert r.invariants_hold()
    return "|C| >= |B|/3 and defect3 >= |A∩C|/n on 20 random permutations"


def _discretize() -> str:
    assert maps.discretize_map(maps.parse_map("rotation:0.25"), 8) == perm.cyclic_shift(8, 2)
    assert list(maps.discretize_map(maps.parse_map("doubling"), 8)) == [1, 3, 5, 7, 2, 4, 6, 8]
    t = scale.bin_transfer(perm.uniform(1000, 1), 10)
    assert all(c == 1 for c in t.column_sums()) and all(r == 1 for r in t.row_sums())
    return "rank rule examples and doubly stochastic transfer"


CHECKS: list[tuple[str, Callable[[], str]]] = [
    ("length-chain", _chain_small),
    ("oracles", _oracles),
    ("closed-forms", _closed_forms),
    ("second-moment", _second_moment),
    ("regular-rep", _regular_rep),
    ("commutant", _commutant),
    ("discretize", _discretize),
]


def run() -> list[dict]:
    results = []
    for name, check in CHECKS:
        try:
            detail = check()
            results.append({"check": name, "passed": True, "detail": detail})
        except AssertionError as exc:
            results.append({"check": name, "passed": False, "detail": f"assertion failed: {exc}"})
    return results
