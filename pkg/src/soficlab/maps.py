"""Measure-preserving maps of [0,1) and their discretisation into permutations.

Every map here is piecewise affine with positive slope, which lets
:func:`true_transfer` compute the exact bin-to-bin mass of the continuous map
with rational interval arithmetic. That gives an oracle for the transfer
matrix of a discretised permutation which shares no code with the
discretiser itself.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from soficlab.perm import Permutation

# (start, end, slope, offset): x ↦ slope*x + offset on [start, end)
Piece = tuple[Fraction, Fraction, Fraction, Fraction]


@dataclass(frozen=True)
class Rotation:
    alpha: Fraction

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError(f"rotation angle must lie in [0,1), got {self.alpha}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.mod(x + float(self.alpha), 1.0)

    def pieces(self) -> list[Piece]:
        a = self.alpha
        out = [(Fraction(0), 1 - a, Fraction(1), a)]
        if a:
            out.append((1 - a, Fraction(1), Fraction(1), a - 1))
        return out

    def __str__(self) -> str:
        return f"rotation:{self.alpha}"


@dataclass(frozen=True)
class Doubling:
    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.mod(2.0 * x, 1.0)

    def pieces(self) -> list[Piece]:
        half = Fraction(1, 2)
        return [(Fraction(0), half, Fraction(2), Fraction(0)), (half, Fraction(1), Fraction(2), Fraction(-1))]

    def __str__(self) -> str:
        return "doubling"


@dataclass(frozen=True)
class IntervalExchange:
    """Cut [0,1) into intervals of ``lengths``; interval j lands in slot ``order[j]`` (1-based)."""

    lengths: tuple[Fraction, ...]
    order: tuple[int, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.order) or not self.lengths:
            raise ValueError("interval exchange needs one slot per interval")
        if any(v <= 0 for v in self.lengths):
            raise ValueError("interval lengths must be positive")
        if sum(self.lengths) != 1:
            raise ValueError(f"interval lengths sum to {sum(self.lengths)}, not 1")
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise ValueError(f"{self.order} is not a permutation of 1..{len(self.order)}")

    def _starts(self) -> tuple[list[Fraction], list[Fraction]]:
        src, acc = [], Fraction(0)
        for v in self.lengths:
            src.append(acc)
            acc += v
        dst = []
        for slot in self.order:
            dst.append(sum((v for v, s in zip(self.lengths, self.order) if s < slot), Fraction(0)))
        return src, dst

    def __call__(self, x: np.ndarray) -> np.ndarray:
        src, dst = self._starts()
        src_f = np.array([float(v) for v in src])
        shift = np.array([float(d - s) for s, d in zip(src, dst)])
        j = np.searchsorted(src_f, x, side="right") - 1
        return x + shift[j]

    def pieces(self) -> list[Piece]:
        src, dst = self._starts()
        return [(s, s + v, Fraction(1), d - s) for s, d, v in zip(src, dst, self.lengths)]

    def __str__(self) -> str:
        lengths = ",".join(str(v) for v in self.lengths)
        return f"iet:{lengths}/{','.join(str(v) for v in self.order)}"


@dataclass(frozen=True)
class Composition:
    """``parts[0] ∘ parts[1] ∘ ...``: the last part is applied first."""

    parts: tuple["MapSpec", ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("empty composition")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        for part in reversed(self.parts):
            x = part(x)
        return x

    def __str__(self) -> str:
        return f"compose({','.join(str(p) for p in self.parts)})"


MapSpec = Union[Rotation, Doubling, IntervalExchange, Composition]


# -- parsing ---------------------------------------------------------------


def _split_top(s: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {s!r}")
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise ValueError(f"unbalanced parentheses in {s!r}")
    out.append("".join(cur))
    return out


_HEADS = ("rotation:", "doubling", "iet:", "compose(")


def _split_parts(s: str) -> list[str]:
    """Top-level comma split that keeps the commas inside an ``iet:`` body."""
    parts: list[str] = []
    for tok in _split_top(s):
        if parts and not tok.strip().startswith(_HEADS):
            parts[-1] += "," + tok
        else:
            parts.append(tok)
    return parts


def _number(tok: str) -> Fraction:
    try:
        return Fraction(tok.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad number {tok!r}") from exc


def parse_map(text: str) -> MapSpec:
    """Parse ``rotation:0.25``, ``doubling``, ``iet:0.3,0.2,0.5/2,3,1`` or ``compose(a,b,...)``."""
    s = text.strip()
    m = re.fullmatch(r"compose\((.*)\)", s, flags=re.S)
    if m:
        return Composition(tuple(parse_map(part) for part in _split_parts(m.group(1))))
    if s == "doubling":
        return Doubling()
    if s.startswith("rotation:"):
        return Rotation(_number(s[len("rotation:"):]))
    if s.startswith("iet:"):
        body = s[len("iet:"):]
        if "/" not in body:
            raise ValueError(f"interval exchange needs 'lengths/order', got {body!r}")
        lengths, order = body.rsplit("/", 1)
        try:
            slots = tuple(int(v) for v in order.split(","))
        except ValueError as exc:
            raise ValueError(f"bad interval order {order!r}") from exc
        return IntervalExchange(tuple(_number(v) for v in lengths.split(",")), slots)
    raise ValueError(f"unrecognised map spec {text!r}")


# -- discretisation and exact transfer -------------------------------------


def discretize_map(spec: MapSpec, n: int) -> Permutation:
    """Rank the images of the midpoints (i - 1/2)/n; ties go to the smaller index."""
    if n < 1:
        raise ValueError("n must be at least 1")
    mid = (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)
    targets = spec(mid)
    order = np.argsort(targets, kind="stable")
    image = np.empty(n, dtype=np.int64)
    image[order] = np.arange(1, n + 1)
    return Permutation(image, check=False)


def _pieces_of(spec: MapSpec) -> list[list[Piece]]:
    if isinstance(spec, Composition):
        out = []
        for part in reversed(spec.parts):
            out.extend(_pieces_of(part))
        return out
    return [spec.pieces()]


def push_interval(spec: MapSpec, lo: Fraction, hi: Fraction) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Image of [lo, hi) as segments ``(start, end, slope)``; each segment carries mass (end-start)/slope."""
    segs = [(Fraction(lo), Fraction(hi), Fraction(1))]
    for stage in _pieces_of(spec):
        nxt = []
        for s_lo, s_hi, slope in segs:
            for a, b, k, c in stage:
                lo2, hi2 = max(s_lo, a), min(s_hi, b)
                if lo2 < hi2:
                    nxt.append((k * lo2 + c, k * hi2 + c, slope * k))
        segs = nxt
    return segs


def true_transfer(spec: MapSpec, m: int) -> list[list[Fraction]]:
    """Exact m×m matrix: entry [i][j] is the fraction of bin j sent into bin i."""
    out = [[Fraction(0)] * m for _ in range(m)]
    for j in range(m):
        for start, end, slope in push_interval(spec, Fraction(j, m), Fraction(j + 1, m)):
            first = int(start * m)
            for i in range(first, m):
                lo, hi = max(start, Fraction(i, m)), min(end, Fraction(i + 1, m))
                if lo >= hi:
                    if Fraction(i, m) >= end:
                        break
                    continue
                out[i][j] += (hi - lo) / slope * m
    return out


def true_bin_map(spec: MapSpec, m: int) -> tuple[int, ...]:
    """1-based most-massive target bin of each source bin, ties to the smaller bin."""
    mat = true_transfer(spec, m)
    result = []
    for j in range(m):
        col = [mat[i][j] for i in range(m)]
        best = max(col)
        result.append(col.index(best) + 1)
    return tuple(result)
