"""Finite scale schedules standing in for the ultraproduct.

A limit along the ultrafilter is replaced by the trend of a statistic over an
increasing list of degrees. Bins are consecutive index blocks, the discrete
picture of intervals of [0,1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from soficlab import maps
from soficlab.perm import FAMILY_KINDS, LengthReport, Permutation, build_family, length_report

APPROX_IDENTITY = "approx-identity"
APPROX_ELL0 = "approx-ell0"
OUTSIDE_ELL0 = "outside-ell0"


@dataclass(frozen=True)
class ScaleSchedule:
    scales: tuple[int, ...]

    def __post_init__(self):
        scales = tuple(int(n) for n in self.scales)
        object.__setattr__(self, "scales", scales)
        if not scales:
            raise ValueError("schedule needs at least one scale")
        if scales[0] < 1:
            raise ValueError("scales must be positive")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError(f"scales must be strictly increasing: {scales}")

    @classmethod
    def powers(cls, base: int, first: int, last: int) -> "ScaleSchedule":
        return cls(tuple(base**k for k in range(first, last + 1)))

    @classmethod
    def parse(cls, text: str) -> "ScaleSchedule":
        """``"8,16,32"`` or a power range ``"2^10..2^20"``."""
        text = text.strip()
        if ".." in text:
            lo, hi = text.split("..")
            b1, e1 = (int(v) for v in lo.split("^"))
            b2, e2 = (int(v) for v in hi.split("^"))
            if b1 != b2:
                raise ValueError("power range needs a common base")
            return cls.powers(b1, e1, e2)
        return cls(tuple(int(v) for v in text.split(",")))

    def __iter__(self):
        return iter(self.scales)

    def __len__(self) -> int:
        return len(self.scales)


@dataclass(frozen=True)
class PermFamily:
    """A rule producing one permutation per degree."""

    name: str
    rule: Callable[[int], Permutation] = field(repr=False, compare=False)
    config: dict = field(default_factory=dict, compare=False)

    def __call__(self, n: int) -> Permutation:
        p = self.rule(n)
        if p.n != n:
            raise ValueError(f"family {self.name} produced degree {p.n} at scale {n}")
        return p


def named_family(kind: str, seed: int | None = None, params: dict | None = None) -> PermFamily:
    """Family from :func:`build_family` or, for ``kind='map'``, a discretised map spec."""
    params = dict(params or {})
    if kind == "map":
        spec = maps.parse_map(params["spec"])
        return PermFamily(f"map:{spec}", lambda n: maps.discretize_map(spec, n), {"kind": kind, "params": params})
    if kind not in FAMILY_KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    if kind in ("uniform", "random_support") and seed is None:
        raise ValueError(f"{kind} needs a seed")
    return PermFamily(
        kind,
        lambda n: build_family(kind, n, seed, params),
        {"kind": kind, "seed": seed, "params": params},
    )


# -- length profiles -------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    """Finite-scale policy for "tends to zero": fitted exponent and last value both small."""

    exponent_max: float = -0.5
    last_max: float = 0.05


@dataclass(frozen=True)
class Trend:
    exponent: float | None
    intercept: float | None
    to_zero: bool


STATS = ("hamming", "coxeter", "displacement")


def fit_trend(scales: Sequence[int], values: Sequence[Fraction], thresholds: Thresholds) -> Trend:
    """Least-squares slope of log(value) against log(n) over the positive values.

    All-zero series trivially tend to zero. With fewer than two positive values
    no slope exists and only the last value is consulted.
    """
    pts = [(math.log(n), math.log(v)) for n, v in zip(scales, values) if v > 0]
    last_small = float(values[-1]) < thresholds.last_max
    if not pts:
        return Trend(None, None, True)
    if len(pts) < 2:
        return Trend(None, pts[0][1], last_small)
    x = np.array([a for a, _ in pts])
    y = np.array([b for _, b in pts])
    if np.ptp(x) == 0:
        return Trend(None, float(y.mean()), last_small)
    slope, intercept = np.polyfit(x, y, 1)
    slope, intercept = float(slope), float(intercept)
    return Trend(slope, intercept, last_small and slope < thresholds.exponent_max)


@dataclass(frozen=True)
class LengthProfile:
    family: str
    scales: tuple[int, ...]
    records: tuple[LengthReport, ...]
    trend: dict[str, Trend]
    classification: str
    thresholds: Thresholds

    def series(self, stat: str) -> list[Fraction]:
        return [getattr(r, stat) for r in self.records]


def classify(trend: dict[str, Trend]) -> str:
    if trend["hamming"].to_zero:
        return APPROX_IDENTITY
    if trend["coxeter"].to_zero:
        return APPROX_ELL0
    return OUTSIDE_ELL0


def profile(family: PermFamily, schedule: ScaleSchedule, thresholds: Thresholds | None = None) -> LengthProfile:
    thresholds = thresholds or Thresholds()
    records = []
    for n in schedule:
        try:
            p = family(n)
        except Exception as exc:
            raise ValueError(f"family {family.name} failed at scale {n}: {exc}") from exc
        records.append(length_report(p))
    trend = {
        stat: fit_trend(schedule.scales, [getattr(r, stat) for r in records], thresholds)
        for stat in STATS
    }
    return LengthProfile(family.name, schedule.scales, tuple(records), trend, classify(trend), thresholds)


# -- bin transfer ----------------------------------------------------------


def bin_sizes(n: int, m: int) -> np.ndarray:
    """Sizes of m consecutive blocks of {1..n}; the first n mod m blocks get one extra point."""
    if not 1 <= m <= n:
        raise ValueError(f"bin count {m} must lie in 1..{n}")
    sizes = np.full(m, n // m, dtype=np.int64)
    sizes[: n % m] += 1
    return sizes


def bin_index(n: int, m: int) -> np.ndarray:
    """0-based bin of each point 1..n."""
    return np.repeat(np.arange(m), bin_sizes(n, m))


@dataclass(frozen=True)
class TransferMatrix:
    """``counts[i, j]`` points of bin j land in bin i; entries are counts / sizes[j]."""

    m: int
    counts: np.ndarray
    sizes: np.ndarray

    def entry(self, i: int, j: int) -> Fraction:
        """Exact entry with 0-based indices."""
        return Fraction(int(self.counts[i, j]), int(self.sizes[j]))

    def rows(self) -> list[list[Fraction]]:
        return [[self.entry(i, j) for j in range(self.m)] for i in range(self.m)]

    def as_float(self) -> np.ndarray:
        return self.counts / self.sizes[None, :]

    def column_sums(self) -> list[Fraction]:
        return [Fraction(int(self.counts[:, j].sum()), int(self.sizes[j])) for j in range(self.m)]

    def row_sums(self) -> list[Fraction]:
        return [sum((self.entry(i, j) for j in range(self.m)), Fraction(0)) for i in range(self.m)]


def bin_transfer(p: Permutation, m: int) -> TransferMatrix:
    n = p.n
    sizes = bin_sizes(n, m)
    where = bin_index(n, m)
    src = where
    dst = where[p.image - 1]
    counts = np.bincount(dst * m + src, minlength=m * m).reshape(m, m)
    return TransferMatrix(m, counts, sizes)


def _defect(t: TransferMatrix) -> Fraction:
    col_max = t.counts.max(axis=0)
    mass = sum((Fraction(int(c), int(s)) for c, s in zip(col_max, t.sizes)), Fraction(0))
    return 1 - mass / t.m


def gm_defect(p: Permutation, m: int) -> Fraction:
    """1 - mean over bins of the largest share of a bin sent to a single bin."""
    return _defect(bin_transfer(p, m))


@dataclass(frozen=True)
class StandardMapEstimate:
    bins: tuple[int, ...]  # 1-based: bins[j-1] = estimated image bin of bin j
    defect: Fraction

    @property
    def confidence(self) -> Fraction:
        return 1 - self.defect

    def is_bijection(self) -> bool:
        return sorted(self.bins) == list(range(1, len(self.bins) + 1))


def estimate_standard_map(p: Permutation, m: int) -> StandardMapEstimate:
    t = bin_transfer(p, m)
    # argmax returns the first maximum, i.e. the smallest target bin on ties
    bins = tuple(int(i) + 1 for i in t.counts.argmax(axis=0))
    return StandardMapEstimate(bins, _defect(t))


def compose_bin_maps(f: Sequence[int], g: Sequence[int]) -> tuple[int, ...]:
    """``f ∘ g`` for 1-based bin maps."""
    return tuple(f[j - 1] for j in g)
