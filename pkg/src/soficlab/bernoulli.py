"""Random diagonal projections and their pattern traces.

A diagonal projection of degree n is a 0/1 vector ``d``. For permutations
p_1..p_m and signs s in {0,1}^m the pattern trace is the fraction of points x
with ``d[p_j(x)] == s_j`` for every j. Over uniformly random ``d`` the mean
of this trace is 1/2^m on points where the images p_j(x) are distinct, and the
variance is O(1/n); Chebyshev then yields a single ``d`` meeting all 2^m
targets simultaneously.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from soficlab._rng import stream
from soficlab.perm import Permutation, compose, conjugate, inverse
from soficlab.scale import bin_index, gm_defect
from soficlab.sofic import reduced_words

EXHAUSTIVE_MAX_N = 24
_TRIAL_BLOCK = 32


@dataclass(frozen=True)
class DiagonalProjection:
    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, dtype=np.uint8).ravel()
        if arr.size == 0:
            raise ValueError("empty projection")
        if arr.max() > 1:
            raise ValueError("projection entries must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def n(self) -> int:
        return int(self.bits.size)

    def trace(self) -> Fraction:
        return Fraction(int(self.bits.sum()), self.n)

    def support(self) -> frozenset[int]:
        return frozenset(int(x) + 1 for x in np.flatnonzero(self.bits))

    def complement(self) -> "DiagonalProjection":
        return DiagonalProjection(1 - self.bits)

    def conjugate_by(self, q: Permutation) -> "DiagonalProjection":
        """Indicator of q(supp d)."""
        out = np.empty_like(self.bits)
        out[q.image - 1] = self.bits
        return DiagonalProjection(out)

    def __eq__(self, other):
        if not isinstance(other, DiagonalProjection):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash(self.bits.tobytes())

    def to_text(self) -> str:
        return f"{self.n}\n{''.join('1' if b else '0' for b in self.bits)}\n"

    @classmethod
    def from_text(cls, text: str) -> "DiagonalProjection":
        lines = text.split()
        if len(lines) != 2:
            raise ValueError("projection text needs a degree line and a bit line")
        n, body = int(lines[0]), lines[1]
        if len(body) != n or set(body) - {"0", "1"}:
            raise ValueError(f"expected {n} characters from '01'")
        return cls(np.frombuffer(body.encode("ascii"), dtype=np.uint8) - ord("0"))


@dataclass(frozen=True)
class Pattern:
    perms: tuple[Permutation, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perms", tuple(self.perms))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if not self.perms:
            raise ValueError("pattern needs at least one permutation")
        if len(self.signs) != len(self.perms) or set(self.signs) - {0, 1}:
            raise ValueError("need one 0/1 sign per permutation")
        if len({p.n for p in self.perms}) != 1:
            raise ValueError("pattern permutations must share a degree")

    @property
    def m(self) -> int:
        return len(self.perms)

    @property
    def n(self) -> int:
        return self.perms[0].n

    @property
    def code(self) -> int:
        return sign_code(self.signs)


def sign_code(signs: Sequence[int]) -> int:
    """Index of a sign vector, first sign most significant."""
    code = 0
    for s in signs:
        code = 2 * code + int(s)
    return code


def sign_vectors(m: int) -> list[tuple[int, ...]]:
    return [tuple((c >> (m - 1 - j)) & 1 for j in range(m)) for c in range(2**m)]


def _gathers(perms: Sequence[Permutation]) -> np.ndarray:
    return np.stack([p.image - 1 for p in perms])


def pattern_codes(bits: np.ndarray, perms: Sequence[Permutation]) -> np.ndarray:
    """For bit rows ``bits[t]``, the sign code of each point: shape (..., n)."""
    idx = _gathers(perms)
    codes = np.zeros(bits.shape, dtype=np.int64)
    for row in idx:
        codes = 2 * codes + bits[..., row]
    return codes


def pattern_counts(bits: np.ndarray, perms: Sequence[Permutation]) -> np.ndarray:
    """Point counts per sign code for each row of ``bits``: shape (trials, 2^m)."""
    bits = np.atleast_2d(bits)
    k = 2 ** len(perms)
    codes = pattern_codes(bits, perms)
    offsets = np.arange(bits.shape[0])[:, None] * k
    return np.bincount((codes + offsets).ravel(), minlength=bits.shape[0] * k).reshape(-1, k)


def pattern_trace(a: DiagonalProjection, pat: Pattern) -> Fraction:
    if a.n != pat.n:
        raise ValueError(f"degree mismatch: projection {a.n}, pattern {pat.n}")
    count = int(pattern_counts(a.bits, pat.perms)[0, pat.code])
    return Fraction(count, a.n)


def good_points(perms: Sequence[Permutation]) -> np.ndarray:
    """Sorted 1-based points whose images under all perms are pairwise distinct."""
    if len({p.n for p in perms}) != 1:
        raise ValueError("permutations must share a degree")
    images = np.sort(_gathers(perms), axis=0)
    distinct = (np.diff(images, axis=0) != 0).all(axis=0)
    return np.flatnonzero(distinct) + 1


# -- exhaustive oracle -----------------------------------------------------


@dataclass(frozen=True)
class ExactMoments:
    mean: Fraction
    variance: Fraction
    points: int


def exhaustive_moments(pat: Pattern, good_only: bool = False) -> ExactMoments:
    """Mean and variance of the pattern trace over all 2^n projections, exactly.

    With ``good_only`` the trace is normalised over good points only.
    """
    n = pat.n
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive enumeration is limited to n <= {EXHAUSTIVE_MAX_N}")
    pts = good_points(pat.perms) if good_only else np.arange(1, n + 1)
    if pts.size == 0:
        raise ValueError("no points to average over")
    idx = _gathers(pat.perms)[:, pts - 1]
    want = np.array(pat.signs, dtype=np.int64)[:, None]
    s1 = s2 = 0
    chunk = 1 << 16
    for start in range(0, 2**n, chunk):
        a = np.arange(start, min(start + chunk, 2**n), dtype=np.int64)
        # bit (x-1) of integer a is d_a(x)
        hit = np.ones((a.size, pts.size), dtype=bool)
        for j in range(pat.m):
            hit &= ((a[:, None] >> idx[j][None, :]) & 1) == want[j]
        c = hit.sum(axis=1, dtype=np.int64)
        s1 += int(c.sum())
        s2 += int((c * c).sum())
    total = 2**n
    k = int(pts.size)
    mean = Fraction(s1, total * k)
    second = Fraction(s2, total * k * k)
    return ExactMoments(mean, second - mean * mean, k)


# -- Monte Carlo -----------------------------------------------------------


def variance_bound(m: int, n: int) -> Fraction:
    """m²/(2^m n), from counting pairs (x, y) whose image sets meet."""
    return Fraction(m * m, 2**m * n)


def single_projection_variance(n: int) -> Fraction:
    return Fraction(1, 4 * n)


def random_bits(seed: int, label: int, trial: int, n: int) -> np.ndarray:
    return stream(seed, label, trial).integers(0, 2, size=n, dtype=np.uint8)


@dataclass(frozen=True)
class MomentEstimate:
    m: int
    n: int
    trials: int
    seed: int
    signs: tuple[int, ...]
    mean: float
    variance: float
    stderr: float
    theory_mean: Fraction
    deviation: float | None
    fails_per_constraint: tuple[int, ...]
    sum_counts: int
    sum_squares: int


def empirical_moments(pat: Pattern, trials: int, seed: int, deviation: float | None = None) -> MomentEstimate:
    """Sample mean and unbiased variance of the pattern trace over uniform projections.

    Trial t draws its bits from the stream (seed, 3, t), so the result does not
    depend on how trials are grouped. ``fails_per_constraint[c]`` counts trials
    whose trace for sign code c is at least ``deviation`` from 1/2^m.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n, m = pat.n, pat.m
    k = 2**m
    target = Fraction(1, k)
    fails = np.zeros(k, dtype=np.int64)
    s1 = s2 = 0
    for start in range(0, trials, _TRIAL_BLOCK):
        stop = min(start + _TRIAL_BLOCK, trials)
        bits = np.stack([random_bits(seed, 3, t, n) for t in range(start, stop)])
        counts = pattern_counts(bits, pat.perms)
        c = counts[:, pat.code].astype(np.int64)
        s1 += int(c.sum())
        s2 += int((c * c).sum())
        if deviation is not None:
            fails += (np.abs(counts / n - float(target)) >= deviation).sum(axis=0)
    mean = Fraction(s1, trials * n)
    if trials > 1:
        var = Fraction(s2 * trials - s1 * s1, trials * (trials - 1) * n * n)
    else:
        var = Fraction(0)
    stderr = float(var / trials) ** 0.5
    return MomentEstimate(
        m, n, trials, seed, pat.signs, float(mean), float(var), stderr, target,
        deviation, tuple(int(f) for f in fails), s1, s2,
    )


@dataclass(frozen=True)
class SearchResult:
    projection: DiagonalProjection | None
    trials_used: int
    max_deviation: float | None
    traces: tuple[Fraction, ...] | None
    chebyshev_lambda: int
    sufficient_n: int

    @property
    def found(self) -> bool:
        return self.projection is not None


def sufficient_degree(m: int, epsilon: float, lam: int | None = None) -> int:
    """Smallest n with λ·c_m/n < ε², where c_m = m²/2^m and λ defaults to 2^m + 1.

    Above it, Chebyshev leaves each of the 2^m constraints failing for less
    than a 1/λ share of projections, so some projection meets all of them.
    """
    lam = 2**m + 1 if lam is None else lam
    c_m = Fraction(m * m, 2**m)
    eps2 = Fraction(str(epsilon)) ** 2
    return int(lam * c_m / eps2) + 1


def find_projection(
    perms: Sequence[Permutation],
    epsilon: float,
    max_trials: int,
    seed: int,
    lam: int | None = None,
) -> SearchResult:
    """Rejection-sample uniform projections until every pattern trace is within ε of 1/2^m."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    perms = tuple(perms)
    if len({p.n for p in perms}) != 1:
        raise ValueError("permutations must share a degree")
    m, n = len(perms), perms[0].n
    lam = 2**m + 1 if lam is None else lam
    target = Fraction(1, 2**m)
    need = sufficient_degree(m, epsilon, lam)
    for t in range(max_trials):
        bits = random_bits(seed, 4, t, n)
        counts = pattern_counts(bits, perms)[0]
        traces = tuple(Fraction(int(c), n) for c in counts)
        dev = max(abs(tr - target) for tr in traces)
        if dev < epsilon:
            return SearchResult(DiagonalProjection(bits), t + 1, float(dev), traces, lam, need)
    return SearchResult(None, max_trials, None, None, lam, need)


# -- partitions and alignment ----------------------------------------------


class PartitionMismatch(ValueError):
    def __init__(self, block: int, detail: str):
        super().__init__(f"block {block}: {detail}")
        self.block = block


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(x) for x in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        pts = [x for b in blocks for x in b]
        n = len(pts)
        if sorted(pts) != list(range(1, n + 1)):
            raise ValueError("blocks must be disjoint and cover 1..n")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    @classmethod
    def intervals(cls, sizes: Sequence[int]) -> "Partition":
        out, start = [], 1
        for s in sizes:
            out.append(tuple(range(start, start + s)))
            start += s
        return cls(tuple(out))


def conjugate_partition(a: Partition, b: Partition) -> Permutation:
    """q with q(A_i) = B_i, matching each block's points in increasing order."""
    if len(a.blocks) != len(b.blocks):
        first = min(len(a.blocks), len(b.blocks))
        raise PartitionMismatch(first, f"{len(a.blocks)} blocks vs {len(b.blocks)}")
    for i, (x, y) in enumerate(zip(a.blocks, b.blocks)):
        if len(x) != len(y):
            raise PartitionMismatch(i, f"size {len(x)} vs {len(y)}")
    image = np.empty(a.n, dtype=np.int64)
    for x, y in zip(a.blocks, b.blocks):
        if x:
            image[np.array(x) - 1] = y
    return Permutation(image)


def refinement_signatures(gens: Sequence[Permutation], a: DiagonalProjection, level: int) -> tuple[list, np.ndarray]:
    """Words of length ≤ level and, per point x, the bits d(θ(w)(x)) for those words."""
    n = a.n
    words = list(reduced_words(len(gens), level))
    signed = {}
    for i, g in enumerate(gens, start=1):
        signed[i], signed[-i] = g, inverse(g)
    cache = {(): Permutation.identity(n)}
    cols = []
    for w in words:
        if w not in cache:
            cache[w] = compose(cache[w[:-1]], signed[w[-1]])
        cols.append(a.bits[cache[w].image - 1])
    return words, np.stack(cols, axis=1)


def signature_partition(sig: np.ndarray) -> tuple[Partition, list[tuple[int, ...]]]:
    """Group points by signature; blocks ordered with 1-bits first, lexicographically."""
    keys = [tuple(int(v) for v in row) for row in sig]
    order = sorted(set(keys), key=lambda k: tuple(1 - v for v in k))
    where = {k: i for i, k in enumerate(order)}
    blocks: list[list[int]] = [[] for _ in order]
    for x, k in enumerate(keys, start=1):
        blocks[where[k]].append(x)
    return Partition(tuple(tuple(b) for b in blocks)), order


def layout_defect(p: Permutation, source_sizes: Sequence[int], target_sizes: Sequence[int]) -> Fraction:
    """1 - (1/n)·Σ_j max_i #{x in S_j : p(x) in T_i} for consecutive layouts S and T."""
    src = np.repeat(np.arange(len(source_sizes)), source_sizes)
    dst = np.repeat(np.arange(len(target_sizes)), target_sizes)
    if src.size != p.n or dst.size != p.n:
        raise ValueError("layouts must cover 1..n")
    k = len(target_sizes)
    counts = np.bincount(src * k + dst[p.image - 1], minlength=len(source_sizes) * k)
    best = counts.reshape(len(source_sizes), k).max(axis=1).sum()
    return 1 - Fraction(int(best), p.n)


@dataclass(frozen=True)
class Alignment:
    level: int
    bins: int
    conjugator: Permutation
    generators: tuple[Permutation, ...]
    projection: DiagonalProjection
    source: Partition
    target: Partition
    defect_before: tuple[Fraction, ...]
    defect_after: tuple[Fraction, ...]
    layout_defect_before: tuple[Fraction, ...] | None
    layout_defect_after: tuple[Fraction, ...] | None


def align_to_dyadic(gens: Sequence[Permutation], a: DiagonalProjection, level: int) -> Alignment:
    """Conjugate ``gens`` so the refinement blocks of ``a`` become consecutive intervals.

    Points are grouped by the bits d(θ(w)(x)) over reduced words w of length
    ≤ level; blocks are laid out left to right with 1-bits first. Each
    generator's gm_defect at 2^(level+1) bins is reported before and after.
    For level ≥ 1 the layout defect measures, before and after, whether the
    generator sends every fine interval into a single interval of the
    level-1 layout; after alignment it is exactly 0.
    """
    gens = tuple(gens)
    if not gens:
        raise ValueError("need at least one generator")
    if level < 0:
        raise ValueError("level must be non-negative")
    if any(g.n != a.n for g in gens):
        raise ValueError("generators and projection must share a degree")
    words, sig = refinement_signatures(gens, a, level)
    source, keys = signature_partition(sig)
    target = Partition.intervals(source.sizes())
    q = conjugate_partition(source, target)
    new_gens = tuple(conjugate(g, q) for g in gens)
    m = 2 ** (level + 1)
    if m > a.n:
        raise ValueError(f"degree {a.n} is too small for {m} bins")
    before = tuple(gm_defect(g, m) for g in gens)
    after = tuple(gm_defect(g, m) for g in new_gens)
    lay_before = lay_after = None
    if level >= 1:
        coarse_len = sum(1 for w in words if len(w) < level)
        coarse_sizes: list[int] = []
        prev = None
        for key, size in zip(keys, target.sizes()):
            head = key[:coarse_len]
            if head == prev:
                coarse_sizes[-1] += size
            else:
                coarse_sizes.append(size)
                prev = head
        fine = target.sizes()
        lay_before = tuple(layout_defect(g, fine, coarse_sizes) for g in gens)
        lay_after = tuple(layout_defect(g, fine, coarse_sizes) for g in new_gens)
    return Alignment(
        level, m, q, new_gens, a.conjugate_by(q), source, target,
        before, after, lay_before, lay_after,
    )
