"""Group presentations, word evaluation in permutation families, sofic defects.

Words are tuples of signed 1-based generator indices: ``(1, 1, -2)`` is
``a a b⁻¹``. A word is evaluated left to right, so ``θ(uv) = θ(u) ∘ θ(v)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from soficlab._rng import stream
from soficlab.perm import Permutation, compose, cyclic_shift, hamming_length, inverse
from soficlab.scale import PermFamily, ScaleSchedule

Word = tuple[int, ...]


class InvalidTable(ValueError):
    """A multiplication table violates a group axiom; ``axiom`` names which."""

    def __init__(self, axiom: str, detail: str):
        super().__init__(f"{axiom}: {detail}")
        self.axiom = axiom


def free_reduce(word: Sequence[int]) -> Word:
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def invert_word(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def is_reduced(word: Sequence[int]) -> bool:
    return all(a != -b for a, b in zip(word, word[1:]))


def letters(k: int) -> list[int]:
    """Alphabet order used everywhere: 1, -1, 2, -2, ..."""
    return [s * g for g in range(1, k + 1) for s in (1, -1)]


def reduced_words(k: int, radius: int) -> Iterator[Word]:
    """All reduced words of length ≤ radius, by length then lexicographically."""
    level: list[Word] = [()]
    yield ()
    alphabet = letters(k)
    for _ in range(radius):
        nxt = []
        for w in level:
            for a in alphabet:
                if not w or w[-1] != -a:
                    nxt.append(w + (a,))
        yield from nxt
        level = nxt


def format_word(word: Sequence[int]) -> str:
    if not word:
        return "e"
    names = "abcdefghijklmnopqrstuvwxyz"
    parts = []
    for x in word:
        g = names[abs(x) - 1] if abs(x) <= len(names) else f"g{abs(x)}"
        parts.append(g if x > 0 else g + "^-1")
    return " ".join(parts)


# -- finite groups ---------------------------------------------------------


def validate_table(table: Sequence[Sequence[int]]) -> int:
    """Check the group axioms and return the identity element."""
    t = np.asarray(table, dtype=np.int64)
    order = t.shape[0]
    if t.ndim != 2 or t.shape != (order, order) or order == 0:
        raise InvalidTable("closure", f"table must be square and non-empty, got shape {t.shape}")
    if t.min() < 0 or t.max() >= order:
        raise InvalidTable("closure", f"entries must lie in 0..{order - 1}")
    idx = np.arange(order)
    identity = None
    for e in range(order):
        if (t[e] == idx).all() and (t[:, e] == idx).all():
            identity = e
            break
    if identity is None:
        raise InvalidTable("identity", "no two-sided identity element")
    # associativity: (xy)z == x(yz) for all triples
    lhs = t[t[:, :, None], idx[None, None, :]]
    rhs = t[idx[:, None, None], t[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    if bad.size:
        x, y, z = (int(v) for v in bad[0])
        raise InvalidTable("associativity", f"({x}*{y})*{z} != {x}*({y}*{z})")
    for x in range(order):
        if not ((t[x] == identity) & (t[:, x] == identity)).any():
            raise InvalidTable("inverses", f"element {x} has no two-sided inverse")
    return identity


def cyclic_group_table(k: int) -> list[list[int]]:
    return [[(i + j) % k for j in range(k)] for i in range(k)]


@dataclass(frozen=True)
class Presentation:
    generator_count: int
    relators: tuple[Word, ...] = ()
    table: tuple[tuple[int, ...], ...] | None = None
    generator_elements: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.generator_count < 1:
            raise ValueError("need at least one generator")
        rels = tuple(tuple(int(x) for x in r) for r in self.relators)
        object.__setattr__(self, "relators", rels)
        for r in rels:
            if any(x == 0 or abs(x) > self.generator_count for x in r):
                raise ValueError(f"relator {r} uses a generator outside 1..{self.generator_count}")
            if not is_reduced(r):
                raise ValueError(f"relator {r} is not freely reduced")
        if self.table is not None:
            table = tuple(tuple(int(x) for x in row) for row in self.table)
            object.__setattr__(self, "table", table)
            validate_table(table)
            elems = self.generator_elements
            if elems is None:
                elems = tuple(range(1, self.generator_count + 1))
            elems = tuple(int(x) for x in elems)
            if len(elems) != self.generator_count or any(not 0 <= x < len(table) for x in elems):
                raise ValueError("generator_elements must name one table element per generator")
            object.__setattr__(self, "generator_elements", elems)

    @property
    def identity(self) -> int:
        return validate_table(self.table)

    def word_problem(self) -> str:
        if self.table is not None:
            return "table"
        if not self.relators:
            return "free"
        return "relators-only"

    def element_of(self, word: Sequence[int]) -> int:
        """Group element of ``word`` via the multiplication table."""
        t = self.table
        e = self.identity
        inv = {x: next(y for y in range(len(t)) if t[x][y] == e) for x in range(len(t))}
        g = e
        for letter in word:
            h = self.generator_elements[abs(letter) - 1]
            g = t[g][h if letter > 0 else inv[h]]
        return g

    def represents_identity(self, word: Sequence[int]) -> bool | None:
        """True/False when decidable, None when the presentation cannot decide."""
        if self.table is not None:
            return self.element_of(word) == self.identity
        reduced = free_reduce(word)
        if not self.relators or not reduced:
            return not reduced
        if reduced in set(self.relator_words()):
            return True
        return None

    def relator_words(self) -> list[Word]:
        """Relators, their cyclic rotations and inverses, freely reduced, deduplicated."""
        seen: dict[Word, None] = {}
        for r in self.relators:
            for i in range(len(r)):
                rot = free_reduce(r[i:] + r[:i])
                seen.setdefault(rot, None)
                seen.setdefault(invert_word(rot), None)
        return list(seen)

    def to_json(self) -> dict:
        out: dict = {"generators": self.generator_count, "relators": [list(r) for r in self.relators]}
        if self.table is not None:
            out["table"] = [list(row) for row in self.table]
            out["generator_elements"] = list(self.generator_elements)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Presentation":
        return cls(
            int(data["generators"]),
            tuple(tuple(r) for r in data.get("relators", [])),
            data.get("table"),
            tuple(data["generator_elements"]) if data.get("generator_elements") is not None else None,
        )

    @classmethod
    def load(cls, path) -> "Presentation":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


# -- candidates and defects ------------------------------------------------


@dataclass(frozen=True)
class SoficRepCandidate:
    presentation: Presentation
    assignment: tuple[PermFamily, ...]
    schedule: ScaleSchedule
    config: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.assignment) != self.presentation.generator_count:
            raise ValueError(
                f"{len(self.assignment)} families for {self.presentation.generator_count} generators"
            )


def evaluate_word(word: Sequence[int], assignment: Sequence[PermFamily | Permutation], scale: int) -> Permutation:
    """Left-to-right product of generator images (and inverses) at degree ``scale``."""
    images = []
    for g in assignment:
        images.append(g if isinstance(g, Permutation) else g(scale))
    result = Permutation.identity(scale)
    for letter in word:
        if letter == 0 or abs(letter) > len(images):
            raise ValueError(f"generator index {letter} outside ±1..{len(images)}")
        p = images[abs(letter) - 1]
        if p.n != scale:
            raise ValueError(f"generator {abs(letter)} has degree {p.n}, expected {scale}")
        result = compose(result, p if letter > 0 else inverse(p))
    return result


@dataclass(frozen=True)
class DefectRecord:
    scale: int
    word: Word
    kind: str  # "relator": ℓ_H(θ(w)) for w = e; "freeness": 1 - ℓ_H(θ(w)) for w ≠ e
    value: Fraction


@dataclass(frozen=True)
class DefectReport:
    records: tuple[DefectRecord, ...]
    word_problem: str
    radius: int
    scales: tuple[int, ...]
    undecided: int

    @property
    def partial(self) -> bool:
        return self.word_problem == "relators-only"

    def relator_defects(self) -> list[DefectRecord]:
        return [r for r in self.records if r.kind == "relator"]

    def freeness_defects(self) -> list[DefectRecord]:
        return [r for r in self.records if r.kind == "freeness"]

    def max_defect(self, kind: str | None = None, scale: int | None = None) -> Fraction:
        vals = [
            r.value
            for r in self.records
            if (kind is None or r.kind == kind) and (scale is None or r.scale == scale)
        ]
        return max(vals, default=Fraction(0))

    def summary(self) -> list[dict]:
        return [
            {
                "scale": n,
                "max_relator_defect": self.max_defect("relator", n),
                "max_freeness_defect": self.max_defect("freeness", n),
            }
            for n in self.scales
        ]


def _word_images(gens: list[Permutation], words: list[Word]) -> dict[Word, Permutation]:
    """Evaluate words by extending cached prefixes one letter at a time."""
    n = gens[0].n
    signed = {}
    for i, g in enumerate(gens, start=1):
        signed[i] = g
        signed[-i] = inverse(g)
    cache: dict[Word, Permutation] = {(): Permutation.identity(n)}
    for w in sorted(words, key=len):
        for k in range(1, len(w) + 1):
            prefix = w[:k]
            if prefix not in cache:
                cache[prefix] = compose(cache[w[: k - 1]], signed[w[k - 1]])
    return cache


def sofic_defect(candidate: SoficRepCandidate, radius: int) -> DefectReport:
    if radius < 1:
        raise ValueError("radius must be at least 1")
    pres = candidate.presentation
    enumerated = list(reduced_words(pres.generator_count, radius))
    identity_extra = [w for w in pres.relator_words() if w not in set(enumerated)]
    words = enumerated + identity_extra
    verdicts = {w: pres.represents_identity(w) for w in words}
    undecided = sum(v is None for v in verdicts.values())
    records = []
    for n in candidate.schedule:
        gens = [fam(n) for fam in candidate.assignment]
        images = _word_images(gens, words)
        for w in words:
            verdict = verdicts[w]
            if verdict is None:
                continue
            h = hamming_length(images[w])
            if verdict:
                records.append(DefectRecord(n, w, "relator", h))
            else:
                records.append(DefectRecord(n, w, "freeness", 1 - h))
    return DefectReport(tuple(records), pres.word_problem(), radius, candidate.schedule.scales, undecided)


# -- standard fixtures -----------------------------------------------------


def left_regular(table: Sequence[Sequence[int]], element: int, copies: int) -> Permutation:
    """``h ↦ element·h`` on ``copies`` disjoint copies of the group."""
    t = np.asarray(table, dtype=np.int64)
    order = t.shape[0]
    block = t[element]  # block[h] = element * h
    offsets = np.repeat(np.arange(copies) * order, order)
    return Permutation(np.tile(block, copies) + offsets + 1, check=False)


def regular_rep(presentation: Presentation, copies: int | Sequence[int]) -> SoficRepCandidate:
    """Left regular representation, ``copies`` blocks per scale (n = copies·|G|)."""
    if presentation.table is None:
        raise ValueError("regular_rep needs a multiplication table")
    table = presentation.table
    order = len(table)
    copy_list = [copies] if isinstance(copies, int) else list(copies)

    def family(element: int, g: int) -> PermFamily:
        def rule(n: int) -> Permutation:
            if n % order:
                raise ValueError(f"degree {n} is not a multiple of the group order {order}")
            return left_regular(table, element, n // order)

        return PermFamily(f"regular[{g}]", rule)

    fams = tuple(family(e, g) for g, e in enumerate(presentation.generator_elements, start=1))
    schedule = ScaleSchedule(tuple(c * order for c in copy_list))
    return SoficRepCandidate(presentation, fams, schedule, {"builder": "regular", "copies": copy_list})


def cyclic_rep(n: int | Sequence[int]) -> SoficRepCandidate:
    """The integers acting by the cyclic shift."""
    scales = [n] if isinstance(n, int) else list(n)
    fam = PermFamily("cyclic_shift", cyclic_shift)
    return SoficRepCandidate(Presentation(1), (fam,), ScaleSchedule(tuple(scales)), {"builder": "cyclic"})


def random_rep(seed: int, scales: Sequence[int], generators: int = 2) -> SoficRepCandidate:
    """Free group on ``generators`` letters sent to independent uniform permutations."""

    def family(g: int) -> PermFamily:
        return PermFamily(
            f"uniform[{g}]",
            lambda n: Permutation(stream(seed, 2, g, n).permutation(n) + 1, check=False),
        )

    fams = tuple(family(g) for g in range(1, generators + 1))
    return SoficRepCandidate(
        Presentation(generators), fams, ScaleSchedule(tuple(scales)), {"builder": "random", "seed": seed}
    )
