"""Permutations of {1..n} in one-line notation and their normalised lengths.

All lengths are returned as :class:`fractions.Fraction` so that the inequality
chain between Hamming, Coxeter and displacement lengths can be checked with no
rounding at all.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from soficlab import _kernels
from soficlab._rng import stream


class Permutation:
    """Immutable bijection of {1..n}; ``p(i)`` is the image of ``i`` (1-based)."""

    __slots__ = ("_image",)

    def __init__(self, image: Iterable[int], check: bool = True):
        arr = np.array(image, dtype=np.int64).ravel()
        if check:
            n = arr.shape[0]
            if n < 1:
                raise ValueError("permutation degree must be at least 1")
            if arr.min() < 1 or arr.max() > n:
                raise ValueError(f"images must lie in 1..{n}")
            seen = np.zeros(n + 1, dtype=bool)
            seen[arr] = True
            if not seen[1:].all():
                raise ValueError("image is not a bijection of 1..n")
        arr.setflags(write=False)
        self._image = arr

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(1, n + 1), check=n >= 1)

    @property
    def n(self) -> int:
        return int(self._image.shape[0])

    @property
    def image(self) -> np.ndarray:
        """Read-only int64 array with ``image[i-1] == p(i)``."""
        return self._image

    def __call__(self, i: int) -> int:
        if not 1 <= i <= self.n:
            raise IndexError(f"point {i} outside 1..{self.n}")
        return int(self._image[i - 1])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return (int(v) for v in self._image)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._image, other._image))

    def __hash__(self) -> int:
        return hash(self._image.tobytes())

    def __repr__(self) -> str:
        if self.n <= 12:
            return f"Permutation({tuple(self)})"
        head = ", ".join(str(v) for v in self._image[:6])
        return f"Permutation(n={self.n}, [{head}, ...])"

    def __matmul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        return inverse(self)

    def is_identity(self) -> bool:
        return bool((self._image == np.arange(1, self.n + 1)).all())


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Return ``p ∘ q``, i.e. ``i ↦ p(q(i))``."""
    if p.n != q.n:
        raise ValueError(f"degree mismatch: {p.n} vs {q.n}")
    return Permutation(p.image[q.image - 1], check=False)


def inverse(p: Permutation) -> Permutation:
    inv = np.empty(p.n, dtype=np.int64)
    inv[p.image - 1] = np.arange(1, p.n + 1)
    return Permutation(inv, check=False)


def conjugate(p: Permutation, q: Permutation) -> Permutation:
    """Return ``q ∘ p ∘ q⁻¹``."""
    return compose(compose(q, p), inverse(q))


# -- lengths ---------------------------------------------------------------


def _pair_normaliser(n: int) -> int:
    return n * (n - 1) // 2


def moved_points(p: Permutation) -> int:
    return int(np.count_nonzero(p.image != np.arange(1, p.n + 1)))


def hamming_length(p: Permutation) -> Fraction:
    return Fraction(moved_points(p), p.n)


def inversions(p: Permutation) -> int:
    """Number of pairs i < j with p(i) > p(j), in O(n log n)."""
    if p.n < 2:
        return 0
    return int(_kernels.count_inversions(np.asarray(p.image)))


def coxeter_length(p: Permutation) -> Fraction:
    """Inversion count normalised by n(n-1)/2; defined as 0 when n = 1."""
    if p.n < 2:
        return Fraction(0)
    return Fraction(inversions(p), _pair_normaliser(p.n))


def displacement_sum(p: Permutation) -> int:
    return int(np.abs(p.image - np.arange(1, p.n + 1)).sum())


def total_displacement(p: Permutation) -> Fraction:
    """``2/(n(n-1)) * sum |p(i) - i|``; defined as 0 when n = 1."""
    if p.n < 2:
        return Fraction(0)
    return Fraction(displacement_sum(p), _pair_normaliser(p.n))


def segment_displacement(p: Permutation) -> int:
    """Sum over x of |p({1..x}) Δ {1..x}|, computed in O(n).

    Tracks c_x = #{y <= x : p(y) > x}; each symmetric difference has size 2 c_x.
    """
    idx = np.arange(1, p.n + 1)
    inv = inverse(p).image
    step = (p.image > idx).astype(np.int64) - (inv < idx).astype(np.int64)
    return int(2 * np.cumsum(step).sum())


@dataclass(frozen=True)
class LengthReport:
    n: int
    hamming: Fraction
    coxeter: Fraction
    displacement: Fraction
    inversions: int
    moved_points: int

    def chain_holds(self) -> bool:
        """ℓ_C ≤ 2ℓ_H and ℓ_C ≤ T ≤ 2ℓ_C, exactly."""
        return (
            self.coxeter <= 2 * self.hamming
            and self.coxeter <= self.displacement <= 2 * self.coxeter
        )


def length_report(p: Permutation) -> LengthReport:
    inv = inversions(p)
    moved = moved_points(p)
    if p.n < 2:
        cox = disp = Fraction(0)
    else:
        pairs = _pair_normaliser(p.n)
        cox = Fraction(inv, pairs)
        disp = Fraction(displacement_sum(p), pairs)
    return LengthReport(p.n, Fraction(moved, p.n), cox, disp, inv, moved)


def batch_counts(images: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(inversions, moved points, displacement sums) for each row of a 2-D image array."""
    images = np.ascontiguousarray(images, dtype=np.int64)
    idx = np.arange(1, images.shape[1] + 1)
    inv = _kernels.count_inversions_rows(images)
    moved = np.count_nonzero(images != idx, axis=1)
    disp = np.abs(images - idx).sum(axis=1)
    return inv, moved, disp


# -- brute-force oracles ---------------------------------------------------


def brute_inversions(p: Permutation) -> int:
    """O(n²) pairwise comparison, independent of the merge kernel."""
    a = np.asarray(p.image)
    upper = np.triu(np.ones((p.n, p.n), dtype=bool), k=1)
    return int(np.count_nonzero((a[:, None] > a[None, :]) & upper))


def brute_segment_displacement(p: Permutation) -> int:
    """Materialises p(I_x) and I_x as membership rows and counts their XOR."""
    n = p.n
    pos = inverse(p).image  # pos[v-1] = preimage of v
    xs = np.arange(1, n + 1)
    in_image = pos[None, :] <= xs[:, None]
    in_segment = xs[None, :] <= xs[:, None]
    return int(np.count_nonzero(in_image ^ in_segment))


# -- named families --------------------------------------------------------

FAMILY_KINDS = (
    "identity",
    "reversal",
    "cyclic_shift",
    "odd_shift",
    "paired_swap",
    "uniform",
    "random_support",
)


def cyclic_shift(n: int, by: int = 1) -> Permutation:
    return Permutation((np.arange(n) + by) % n + 1, check=False)


def reversal(n: int) -> Permutation:
    return Permutation(np.arange(n, 0, -1), check=False)


def odd_shift(n: int) -> Permutation:
    """Fix even points; send each odd point to the next odd one, the largest odd to 1."""
    img = np.arange(1, n + 1)
    odds = img[0::2].copy()
    img[0::2] = np.roll(odds, -1)
    return Permutation(img, check=False)


def paired_swap(n: int, points: Iterable[int], cyclic: bool = False) -> Permutation:
    """Swap x ↔ x+1 for every even x in ``points``.

    With ``cyclic`` the successor of n is 1, so ``n`` itself may be paired.
    """
    img = np.arange(1, n + 1)
    for x in sorted(set(int(v) for v in points)):
        if x % 2:
            raise ValueError(f"paired_swap points must be even, got {x}")
        if not 1 <= x <= n:
            raise ValueError(f"paired_swap point {x} outside 1..{n}")
        y = x + 1
        if y > n:
            if not cyclic:
                raise ValueError(f"paired_swap point {x} has no partner {y} in 1..{n}")
            y = 1
        img[x - 1], img[y - 1] = y, x
    return Permutation(img)


def uniform(n: int, seed: int) -> Permutation:
    return Permutation(stream(seed, 0, n).permutation(n) + 1, check=False)


def random_support(n: int, k: int, seed: int) -> Permutation:
    """Random permutation moving exactly ``k`` points (k = 1 is impossible)."""
    if k == 1 or not 0 <= k <= n:
        raise ValueError(f"cannot move exactly {k} of {n} points")
    rng = stream(seed, 1, n)
    support = rng.choice(n, size=k, replace=False) + 1
    img = np.arange(1, n + 1)
    # a single cycle through a random ordering of the support: no fixed points in it
    img[support - 1] = np.roll(support, -1)
    return Permutation(img, check=False)


def build_family(kind: str, n: int, seed: int | None = None, params: dict | None = None) -> Permutation:
    """Construct the named permutation of degree ``n``.

    ``params`` is kind-specific: ``by`` for cyclic_shift, ``points`` for
    paired_swap, and ``k`` or ``fraction`` for random_support.
    """
    params = dict(params or {})
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind == "identity":
        return Permutation.identity(n)
    if kind == "reversal":
        return reversal(n)
    if kind == "cyclic_shift":
        return cyclic_shift(n, int(params.get("by", 1)))
    if kind == "odd_shift":
        return odd_shift(n)
    if kind == "paired_swap":
        if "points" not in params:
            raise ValueError("paired_swap needs params['points']")
        return paired_swap(n, params["points"])
    if kind in ("uniform", "random_support"):
        if seed is None:
            raise ValueError(f"{kind} needs a seed")
        if kind == "uniform":
            return uniform(n, seed)
        if "k" in params:
            k = int(params["k"])
        elif "fraction" in params:
            k = int(Fraction(str(params["fraction"])) * n)
        else:
            raise ValueError("random_support needs params['k'] or params['fraction']")
        return random_support(n, k, seed)
    raise ValueError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")


# -- file formats ----------------------------------------------------------

_MAGIC = b"PRM1"


def to_text(p: Permutation) -> str:
    return f"{p.n}\n{' '.join(str(v) for v in p.image)}\n"


def from_text(text: str) -> Permutation:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty permutation text")
    n = int(tokens[0])
    if len(tokens) - 1 != n:
        raise ValueError(f"expected {n} images, found {len(tokens) - 1}")
    return Permutation([int(t) for t in tokens[1:]])


def to_bytes(p: Permutation) -> bytes:
    return _MAGIC + struct.pack("<Q", p.n) + p.image.astype("<u8").tobytes()


def from_bytes(data: bytes) -> Permutation:
    if data[:4] != _MAGIC:
        raise ValueError("missing PRM1 magic")
    (n,) = struct.unpack("<Q", data[4:12])
    body = data[12:]
    if len(body) != 8 * n:
        raise ValueError(f"expected {8 * n} payload bytes, found {len(body)}")
    return Permutation(np.frombuffer(body, dtype="<u8").astype(np.int64))


def read_permutation(path) -> Permutation:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == _MAGIC:
        return from_bytes(data)
    return from_text(data.decode("ascii"))


def write_permutation(p: Permutation, path, binary: bool = False) -> None:
    if binary:
        with open(path, "wb") as fh:
            fh.write(to_bytes(p))
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(to_text(p))


def as_permutation(obj: Permutation | Sequence[int]) -> Permutation:
    return obj if isinstance(obj, Permutation) else Permutation(obj)
