"""Reduced words in the free group F_k and finite step measures.

Letters are stored as small integer codes: generator ``i`` is ``2*i`` and its
inverse is ``2*i + 1``, so inversion is ``code ^ 1``.  The string form uses
``a, b, c, ...`` for generators and uppercase for inverses (``"aabA"``).
Code order doubles as the alphabet order for shortlex comparisons
(a < A < b < B < ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

MAX_RANK = 26


class Letter(NamedTuple):
    gen: int
    sign: int

    @property
    def code(self) -> int:
        return 2 * self.gen + (0 if self.sign > 0 else 1)

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        return cls(code >> 1, -1 if code & 1 else 1)

    def __str__(self) -> str:
        ch = chr(ord("a") + self.gen)
        return ch if self.sign > 0 else ch.upper()


def _as_code(x) -> int:
    if isinstance(x, Letter):
        return x.code
    return int(x)


def reduce_codes(codes: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for c in codes:
        if stack and stack[-1] == c ^ 1:
            stack.pop()
        else:
            stack.append(c)
    return tuple(stack)


@dataclass(frozen=True, order=False)
class Word:
    """A reduced word.  Construction always freely reduces its input."""

    codes: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "codes", reduce_codes(_as_code(c) for c in self.codes))

    # constructors -------------------------------------------------------
    @classmethod
    def identity(cls) -> "Word":
        return cls(())

    @classmethod
    def parse(cls, text: str) -> "Word":
        codes = []
        for ch in text.strip():
            if ch in "1 ·.*":
                continue
            if not ch.isalpha() or not ch.isascii():
                raise ValueError(f"invalid letter {ch!r} in word {text!r}")
            gen = ord(ch.lower()) - ord("a")
            codes.append(2 * gen + (1 if ch.isupper() else 0))
        return cls(tuple(codes))

    @classmethod
    def from_array(cls, arr) -> "Word":
        return cls(tuple(int(c) for c in arr))

    @classmethod
    def power(cls, base: "Word | str", exponent: int) -> "Word":
        base = cls.parse(base) if isinstance(base, str) else base
        if exponent < 0:
            base, exponent = base.inverse(), -exponent
        return cls(base.codes * exponent)

    # views ----------------------------------------------------------------
    @property
    def letters(self) -> tuple[Letter, ...]:
        return tuple(Letter.from_code(c) for c in self.codes)

    def runs(self) -> list[tuple[int, int]]:
        """Run-length view: list of (code, run length)."""
        out: list[tuple[int, int]] = []
        for c in self.codes:
            if out and out[-1][0] == c:
                out[-1] = (c, out[-1][1] + 1)
            else:
                out.append((c, 1))
        return out

    def array(self) -> np.ndarray:
        return np.asarray(self.codes, dtype=np.int8)

    def max_generator(self) -> int:
        return max((c >> 1 for c in self.codes), default=-1)

    # algebra ----------------------------------------------------------------
    def inverse(self) -> "Word":
        return Word(tuple(c ^ 1 for c in reversed(self.codes)))

    def __mul__(self, other: "Word") -> "Word":
        return mul(self, other)

    def __invert__(self) -> "Word":
        return self.inverse()

    def __len__(self) -> int:
        return len(self.codes)

    def __str__(self) -> str:
        return "".join(str(Letter.from_code(c)) for c in self.codes) or "1"

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def shortlex_key(self) -> tuple[int, tuple[int, ...]]:
        return (len(self.codes), self.codes)


def reduce(raw: Sequence[Letter | int]) -> Word:
    return Word(tuple(_as_code(x) for x in raw))


def mul(u: Word, v: Word) -> Word:
    # cancel at the seam only; both inputs are already reduced
    a, b = u.codes, v.codes
    i = 0
    m = min(len(a), len(b))
    while i < m and a[len(a) - 1 - i] == b[i] ^ 1:
        i += 1
    out = Word.__new__(Word)
    object.__setattr__(out, "codes", a[: len(a) - i] + b[i:])
    return out


def inv(u: Word) -> Word:
    return u.inverse()


def word_distance(u: Word, v: Word) -> int:
    """d_G(u, v) = |u^-1 v| in the Cayley tree."""
    a, b = u.codes, v.codes
    i = 0
    m = min(len(a), len(b))
    while i < m and a[i] == b[i]:
        i += 1
    return len(a) + len(b) - 2 * i


def as_word(x: "Word | str") -> Word:
    return Word.parse(x) if isinstance(x, str) else x


def random_reduced_word(length: int, rank: int, rng: np.random.Generator) -> Word:
    """Uniformly random reduced word of exact length."""
    return Word.from_array(random_reduced_array(length, rank, rng))


def random_reduced_array(length: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    from ._kernels import reduced_from_draws

    if length == 0:
        return np.zeros(0, dtype=np.int8)
    out = np.empty(length, dtype=np.int8)
    first = np.int8(rng.integers(0, 2 * rank))
    # each later letter: uniform over the 2k-1 codes other than the inverse of its predecessor
    draws = rng.integers(0, 2 * rank - 1, size=length - 1).astype(np.int8)
    reduced_from_draws(first, draws, out)
    return out


def ball(radius: int, rank: int) -> list[Word]:
    """All reduced words of length <= radius, in shortlex order."""
    layer = [Word.identity()]
    out = list(layer)
    for _ in range(radius):
        nxt = []
        for w in layer:
            last = w.codes[-1] if w.codes else -1
            for c in range(2 * rank):
                if last >= 0 and c == last ^ 1:
                    continue
                nxt.append(Word.__new__(Word))
                object.__setattr__(nxt[-1], "codes", w.codes + (c,))
        nxt.sort(key=Word.shortlex_key)
        out.extend(nxt)
        layer = nxt
    return out


@dataclass(frozen=True)
class StepMeasure:
    """Finitely supported probability measure on F_k.

    Symmetry (mu(g) == mu(g^-1)) is enforced unless ``require_symmetric`` is
    False; the deterministic test walks (point masses) need that escape hatch.
    """

    support: tuple[Word, ...]
    probs: tuple[float, ...]
    rank: int = 2
    require_symmetric: bool = True
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise ValueError("support and probabilities must be nonempty and of equal length")
        if not 1 <= self.rank <= MAX_RANK:
            raise ValueError(f"rank must be in [1, {MAX_RANK}]")
        if len(set(self.support)) != len(self.support):
            raise ValueError("duplicate support element")
        for w in self.support:
            if w.max_generator() >= self.rank:
                raise ValueError(f"support element {w} uses a generator outside rank {self.rank}")
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(p <= 0):
            raise ValueError("probabilities must be strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if self.require_symmetric:
            weight = dict(zip(self.support, self.probs))
            for w, pw in weight.items():
                q = weight.get(w.inverse())
                if q is None or abs(q - pw) > 1e-12:
                    raise ValueError(f"measure is not symmetric: {w} has no matching inverse weight")
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @classmethod
    def from_mapping(cls, weights: Mapping[str | Word, float], rank: int | None = None,
                     require_symmetric: bool = True) -> "StepMeasure":
        items = [(as_word(k), float(v)) for k, v in weights.items()]
        if rank is None:
            rank = max(2, 1 + max(w.max_generator() for w, _ in items))
        return cls(tuple(w for w, _ in items), tuple(p for _, p in items), rank, require_symmetric)

    @classmethod
    def uniform(cls, rank: int = 2) -> "StepMeasure":
        support = tuple(Word((c,)) for c in range(2 * rank))
        return cls(support, tuple([1.0 / (2 * rank)] * (2 * rank)), rank)

    @classmethod
    def point_mass(cls, word: Word | str, rank: int = 2) -> "StepMeasure":
        return cls((as_word(word),), (1.0,), rank, require_symmetric=False)

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    @property
    def min_prob(self) -> float:
        return float(min(self.probs))

    @property
    def max_step_length(self) -> int:
        return max(len(w) for w in self.support)

    def prob(self, w: Word) -> float:
        for s, p in zip(self.support, self.probs):
            if s == w:
                return p
        return 0.0

    def reflected(self) -> "StepMeasure":
        return StepMeasure(tuple(w.inverse() for w in self.support), self.probs, self.rank,
                           self.require_symmetric)

    def step_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Support as a padded int8 matrix plus lengths, for the kernels."""
        width = max(1, self.max_step_length)
        table = np.zeros((len(self.support), width), dtype=np.int8)
        lens = np.zeros(len(self.support), dtype=np.int64)
        for i, w in enumerate(self.support):
            table[i, : len(w)] = w.codes
            lens[i] = len(w)
        return table, lens

    def index_of(self, u: float) -> int:
        return int(np.searchsorted(self._cdf, u, side="right"))

    def to_json(self) -> dict:
        return {str(w): p for w, p in zip(self.support, self.probs)}


def sample_step(measure: StepMeasure, rng: np.random.Generator) -> Word:
    return measure.support[measure.index_of(rng.random())]
