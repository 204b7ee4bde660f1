"""Finite-scale witness that a permutation far from the identity cannot nearly
commute with the small Coxeter-length permutations s¹, s², s³.

s¹ is the cyclic shift, s² cycles the odd points and fixes the even ones, and
s³ swaps 2i ↔ 2i+1 for 2i in a set C chosen greedily from the non-fixed even
points of p with p(C) ∩ C = ∅. For x ∈ A ∩ C, where A is the set of points at
which p commutes with both s¹ and s², one has p(s³x) = p(x)+1 while
s³(p(x)) = p(x), so the s³ commutation defect is at least |A ∩ C|/n.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from soficlab.perm import Permutation, cyclic_shift, hamming_length, odd_shift, paired_swap


def commutation_defect(p: Permutation, s: Permutation) -> Fraction:
    """Fraction of points x with p(s(x)) != s(p(x))."""
    if p.n != s.n:
        raise ValueError(f"degree mismatch: {p.n} vs {s.n}")
    ps = p.image[s.image - 1]
    sp = s.image[p.image - 1]
    return Fraction(int(np.count_nonzero(ps != sp)), p.n)


def _commute_mask(p: Permutation, s: Permutation) -> np.ndarray:
    return p.image[s.image - 1] == s.image[p.image - 1]


def greedy_disjoint_subset(p: Permutation, candidates: Iterable[int]) -> frozenset[int]:
    """Scan ``candidates`` in increasing order, adding x unless x ∈ p(C) or p(x) ∈ C.

    The result C satisfies p(C) ∩ C = ∅ and |C| ≥ |B|/3: each accepted x can
    block at most p(x) and p⁻¹(x) later on.
    """
    img = p.image
    chosen = np.zeros(p.n + 1, dtype=bool)
    in_image = np.zeros(p.n + 1, dtype=bool)
    out = []
    for x in sorted(set(int(v) for v in candidates)):
        px = int(img[x - 1])
        if in_image[x] or chosen[px] or px == x:
            continue
        chosen[x] = True
        in_image[px] = True
        out.append(x)
    return frozenset(out)


def even_swap(n: int, points: Iterable[int]) -> Permutation:
    """s³ for even ``points``; the successor of n is taken to be 1, as for s¹."""
    return paired_swap(n, points, cyclic=True)


def even_cycle(n: int) -> Permutation:
    """Mirror of s² for odd points: fixes odd points, cycles the even ones."""
    img = np.arange(1, n + 1)
    evens = img[1::2].copy()
    img[1::2] = np.roll(evens, -1)
    return Permutation(img, check=False)


def odd_swap(n: int, points: Iterable[int]) -> Permutation:
    """Swap x ↔ x+1 for odd x < n in ``points``."""
    img = np.arange(1, n + 1)
    for x in sorted(set(points)):
        if x % 2 == 0 or not 1 <= x < n:
            raise ValueError(f"odd_swap needs odd points below {n}, got {x}")
        img[x - 1], img[x] = x + 1, x
    return Permutation(img, check=False)


@dataclass(frozen=True)
class CommutantReport:
    n: int
    seed: int | None
    hamming_of_p: Fraction
    A_fraction: Fraction
    B_size: int
    C_size: int
    AC_fraction: Fraction
    defect1: Fraction
    defect2: Fraction
    defect3: Fraction
    # odd-point mirror: s² replaced by the even cycle, s³ by odd swaps
    odd_A_fraction: Fraction
    odd_B_size: int
    odd_C_size: int
    odd_AC_fraction: Fraction
    odd_defect2: Fraction
    odd_defect3: Fraction

    @property
    def max_defect(self) -> Fraction:
        return max(self.defect1, self.defect2, self.defect3)

    def invariants_hold(self) -> bool:
        return (
            3 * self.C_size >= self.B_size
            and self.defect3 >= self.AC_fraction
            and 3 * self.odd_C_size >= self.odd_B_size
            and self.odd_defect3 >= self.odd_AC_fraction
        )

    def as_dict(self) -> dict:
        return asdict(self)


def commutant_witness(p: Permutation, seed: int | None = None) -> CommutantReport:
    """Build A, B, C and s³ for ``p`` and measure all commutation defects.

    ``seed`` is recorded only; the computation is deterministic in ``p``.
    """
    n = p.n
    if n < 4:
        raise ValueError("commutant witness needs n >= 4")
    pts = np.arange(1, n + 1)
    s1 = cyclic_shift(n)
    s2 = odd_shift(n)
    c1 = _commute_mask(p, s1)
    c2 = _commute_mask(p, s2)
    a_mask = c1 & c2
    moved = p.image != pts

    even = pts % 2 == 0
    b = pts[even & moved]
    c = greedy_disjoint_subset(p, b)
    s3 = even_swap(n, c)
    c_arr = np.array(sorted(c), dtype=np.int64)
    ac = int(a_mask[c_arr - 1].sum()) if c_arr.size else 0

    # odd mirror; n is skipped when odd since n+1 does not exist
    s2o = even_cycle(n)
    a_odd = c1 & _commute_mask(p, s2o)
    b_odd = pts[~even & moved & (pts < n)]
    c_odd = greedy_disjoint_subset(p, b_odd)
    s3o = odd_swap(n, c_odd)
    co_arr = np.array(sorted(c_odd), dtype=np.int64)
    ac_odd = int(a_odd[co_arr - 1].sum()) if co_arr.size else 0

    return CommutantReport(
        n=n,
        seed=seed,
        hamming_of_p=hamming_length(p),
        A_fraction=Fraction(int(a_mask.sum()), n),
        B_size=int(b.size),
        C_size=len(c),
        AC_fraction=Fraction(ac, n),
        defect1=commutation_defect(p, s1),
        defect2=commutation_defect(p, s2),
        defect3=commutation_defect(p, s3),
        odd_A_fraction=Fraction(int(a_odd.sum()), n),
        odd_B_size=int(b_odd.size),
        odd_C_size=len(c_odd),
        odd_AC_fraction=Fraction(ac_odd, n),
        odd_defect2=commutation_defect(p, s2o),
        odd_defect3=commutation_defect(p, s3o),
    )
