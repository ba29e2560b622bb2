"""Alphabets, words and substitutions.

Words are tuples of alphabet indices.  Long iterates are handled as numpy
``uint8``/``int32`` arrays; :meth:`Substitution.apply_array` is the fast path.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Word = tuple  # tuple[int, ...]


class ParseError(ValueError):
    """Raised for malformed substitution descriptions."""


class PreconditionError(ValueError):
    """Raised when an operation is called outside its domain (e.g. non-primitive input)."""


@dataclass(frozen=True)
class Alphabet:
    letters: tuple

    def __post_init__(self):
        if len(self.letters) < 1:
            raise ParseError("alphabet must contain at least one letter")
        if len(set(self.letters)) != len(self.letters):
            raise ParseError(f"duplicate letters in alphabet {self.letters!r}")

    def __len__(self):
        return len(self.letters)

    def index(self, letter) -> int:
        try:
            return self.letters.index(letter)
        except ValueError:
            raise ParseError(f"unknown symbol {letter!r}") from None


@dataclass(frozen=True)
class Substitution:
    """A substitution on the alphabet ``alphabet``; ``images[a]`` is the image of letter index ``a``."""

    alphabet: Alphabet
    images: tuple
    _table: np.ndarray | None = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(self.images) != len(self.alphabet):
            raise ParseError("one image per letter required")
        size = len(self.alphabet)
        for a, img in enumerate(self.images):
            if len(img) == 0:
                raise ParseError(f"empty image for letter {self.alphabet.letters[a]!r}")
            if any(not (0 <= s < size) for s in img):
                raise ParseError(f"image of {self.alphabet.letters[a]!r} uses a symbol outside the alphabet")
        if self.is_constant_length:
            object.__setattr__(self, "_table", np.array(self.images, dtype=np.int64))

    @classmethod
    def from_images(cls, letters: Sequence, images: Sequence[Sequence[int]]) -> "Substitution":
        return cls(Alphabet(tuple(letters)), tuple(tuple(int(s) for s in img) for img in images))

    @classmethod
    def from_strings(cls, rules: dict) -> "Substitution":
        """``{"0": "01", "1": "00"}`` with single-character letters, in insertion order."""
        letters = tuple(rules)
        alph = Alphabet(letters)
        return cls(alph, tuple(tuple(alph.index(ch) for ch in rules[a]) for a in letters))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def is_constant_length(self) -> bool:
        return len({len(img) for img in self.images}) == 1

    @property
    def length(self) -> int:
        """The common image length |θ|."""
        if not self.is_constant_length:
            raise PreconditionError("substitution is not of constant length")
        return len(self.images[0])

    @property
    def table(self) -> np.ndarray:
        """``table[a, j] = θ(a)_j`` as an ``(|A|, |θ|)`` array."""
        if self._table is None:
            raise PreconditionError("substitution is not of constant length")
        return self._table

    @property
    def is_one_to_one(self) -> bool:
        return len(set(self.images)) == len(self.images)

    def apply(self, word: Iterable[int]) -> Word:
        out = []
        size = self.size
        for s in word:
            if not (0 <= s < size):
                raise ValueError(f"symbol {s!r} outside alphabet")
            out.extend(self.images[s])
        return tuple(out)

    def apply_array(self, word: np.ndarray) -> np.ndarray:
        word = np.asarray(word)
        if self._table is not None:
            return self._table[word].ravel()
        return np.concatenate([np.asarray(self.images[s]) for s in word]) if len(word) else word

    def iterate(self, word: Iterable[int], times: int) -> Word:
        w = tuple(word)
        for _ in range(times):
            w = self.apply(w)
        return w

    def power(self, k: int) -> "Substitution":
        """The substitution θᵏ (materialised)."""
        if k < 1:
            raise ValueError("power must be >= 1")
        imgs = []
        for a in range(self.size):
            imgs.append(self.iterate((a,), k))
        return Substitution(self.alphabet, tuple(imgs))

    def format_word(self, word: Iterable[int], sep: str = "") -> str:
        return sep.join(str(self.alphabet.letters[s]) for s in word)

    def rules(self) -> dict:
        return {str(self.alphabet.letters[a]): [str(self.alphabet.letters[s]) for s in img]
                for a, img in enumerate(self.images)}

    def to_text(self) -> str:
        if all(len(str(x)) == 1 for x in self.alphabet.letters):
            return " ; ".join(f"{self.alphabet.letters[a]} -> {self.format_word(img)}"
                              for a, img in enumerate(self.images))
        return json.dumps({"alphabet": [str(x) for x in self.alphabet.letters], "rules": self.rules()})

    def __str__(self):
        return self.to_text()


# ---------------------------------------------------------------------------
# parsing

_CLAUSE = re.compile(r"^\s*(\S+)\s*->\s*(.*?)\s*$")


def parse_substitution(text: str, require_constant: bool = True) -> Substitution:
    """Parse ``"0 -> 01 ; 1 -> 00"`` or a JSON document ``{"alphabet": [...], "rules": {...}}``."""
    if isinstance(text, dict):
        return _from_document(text, require_constant)
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON document: {exc}") from None
        return _from_document(doc, require_constant)

    clauses = []
    for line in text.splitlines():
        if line.strip().startswith("#"):
            continue
        clauses.extend(c for c in line.split(";") if c.strip())
    if not clauses:
        raise ParseError("no rules given")

    lhs, rhs = [], []
    for clause in clauses:
        m = _CLAUSE.match(clause)
        if not m:
            raise ParseError(f"cannot parse clause {clause.strip()!r}; expected '<letter> -> <word>'")
        letter, word = m.group(1), m.group(2)
        if len(letter) != 1:
            raise ParseError(f"letters must be single symbols, got {letter!r}")
        if letter in lhs:
            raise ParseError(f"duplicate left-hand side {letter!r}")
        word = re.sub(r"\s+", "", word)
        if not word:
            raise ParseError(f"empty image for letter {letter!r}")
        lhs.append(letter)
        rhs.append(word)
    return _build(lhs, [list(w) for w in rhs], require_constant)


def _from_document(doc, require_constant: bool) -> Substitution:
    if not isinstance(doc, dict) or "rules" not in doc:
        raise ParseError("structured input needs a 'rules' object")
    rules = doc["rules"]
    if not isinstance(rules, dict):
        raise ParseError("'rules' must map letters to words")
    alphabet = doc.get("alphabet", list(rules))
    alphabet = [str(a) for a in alphabet]
    if len(set(alphabet)) != len(alphabet):
        raise ParseError("duplicate letters in 'alphabet'")
    missing = [a for a in alphabet if a not in rules]
    extra = [a for a in rules if a not in alphabet]
    if missing or extra:
        raise ParseError(f"rules and alphabet disagree (missing={missing}, extra={extra})")
    words = []
    for a in alphabet:
        w = rules[a]
        if isinstance(w, str):
            w = list(re.sub(r"\s+", "", w))
        words.append([str(s) for s in w])
    return _build(alphabet, words, require_constant)


def _build(lhs: list, rhs: list, require_constant: bool) -> Substitution:
    alph = Alphabet(tuple(lhs))
    images = []
    for letter, word in zip(lhs, rhs):
        if not word:
            raise ParseError(f"empty image for letter {letter!r}")
        try:
            images.append(tuple(alph.index(s) for s in word))
        except ParseError as exc:
            raise ParseError(f"{exc} in image of {letter!r}") from None
    theta = Substitution(alph, tuple(images))
    if require_constant and not theta.is_constant_length:
        lengths = {str(l): len(w) for l, w in zip(lhs, rhs)}
        raise ParseError(f"substitution is not of constant length: {lengths}")
    return theta


# ---------------------------------------------------------------------------
# columns of powers

def base_digits(j: int, base: int, k: int) -> list:
    """Digits ``[j_0, ..., j_{k-1}]`` of ``j`` in base ``base`` (least significant first)."""
    digits = []
    for _ in range(k):
        j, d = divmod(j, base)
        digits.append(d)
    return digits


def power_column(theta: Substitution, a: int, k: int, j: int) -> int:
    """θᵏ(a)_j without materialising θᵏ(a).

    With ``j = j_{k-1} L^{k-1} + ... + j_0`` the value is
    ``τ_{j_0}(τ_{j_1}(... τ_{j_{k-1}}(a)))`` where ``τ_m(b) = θ(b)_m``.
    """
    L = theta.length
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (0 <= j < L ** k):
        raise IndexError(f"position {j} out of range [0, {L ** k})")
    table = theta.table
    letter = a
    for d in reversed(base_digits(j, L, k)):
        letter = int(table[letter, d])
    return letter


# ---------------------------------------------------------------------------
# languages and factor complexity

def two_letter_language(theta: Substitution) -> set:
    """All words of length 2 in X_θ (θ primitive), by closure from the images."""
    found = set()
    todo = []

    def add_factors(word):
        for i in range(len(word) - 1):
            w = (word[i], word[i + 1])
            if w not in found:
                found.add(w)
                todo.append(w)

    for img in theta.images:
        add_factors(img)
    if theta.size == 1:
        add_factors((0, 0))
    while todo:
        x, y = todo.pop()
        add_factors(theta.images[x] + theta.images[y])
    return found


def _covering_words(theta: Substitution, n: int) -> list:
    """Words of X_θ such that every factor of length <= n occurs inside one of them."""
    pairs = sorted(two_letter_language(theta))
    words = [np.array(w, dtype=np.int64) for w in pairs]
    if n <= 2 or max(len(img) for img in theta.images) == 1:
        return words
    # With t the first level where every θ^t(letter) has length >= n - 1, a factor
    # of length n inside θ^t(xy) either lies inside one block θ^t(a) or crosses
    # the middle boundary, and then sits within n - 1 symbols on each side of it.
    keep = n - 1
    blocks = [np.array([a], dtype=np.int64) for a in range(theta.size)]
    while min(len(b) for b in blocks) < keep:
        blocks = [theta.apply_array(b) for b in blocks]
    return blocks + [np.concatenate([blocks[x][-keep:], blocks[y][:keep]]) for x, y in pairs]


def language(theta: Substitution, n: int) -> frozenset:
    """The set of words of length ``n`` occurring in X_θ."""
    if n < 1:
        raise ValueError("word length must be >= 1")
    found = set()
    for w in _covering_words(theta, n):
        t = w.tolist()
        for i in range(len(t) - n + 1):
            found.add(tuple(t[i:i + n]))
    return frozenset(found)


def _distinct_factor_counts(words: list, n_max: int, alphabet_size: int) -> np.ndarray:
    """``counts[n]`` = number of distinct length-``n`` windows inside the given words, n = 0..n_max.

    Builds one suffix array over the words joined by unique separators
    (prefix doubling) and reads per-length counts off the LCP array.
    """
    parts = []
    sep = alphabet_size
    for w in words:
        parts.append(np.asarray(w, dtype=np.int64))
        parts.append(np.array([sep], dtype=np.int64))
        sep += 1
    s = np.concatenate(parts)
    M = len(s)
    is_sep = s >= alphabet_size
    # letters before next separator
    sep_pos = np.flatnonzero(is_sep)
    nxt = sep_pos[np.searchsorted(sep_pos, np.arange(M))]
    valid = nxt - np.arange(M)

    rank = np.unique(s, return_inverse=True)[1].astype(np.int64)
    levels = [rank]
    k = 1
    while rank.max() < M - 1:
        second = np.full(M, -1, dtype=np.int64)
        second[:M - k] = rank[k:]
        order = np.lexsort((second, rank))
        r_o, s_o = rank[order], second[order]
        step = np.empty(M, dtype=np.int64)
        step[0] = 0
        step[1:] = np.cumsum((r_o[1:] != r_o[:-1]) | (s_o[1:] != s_o[:-1]))
        rank = np.empty(M, dtype=np.int64)
        rank[order] = step
        levels.append(rank)
        k *= 2
    sa = np.argsort(rank)

    # LCP of SA neighbours by binary lifting over the doubling levels
    a, b = sa[1:].copy(), sa[:-1].copy()
    lcp = np.zeros(M - 1, dtype=np.int64)
    for t in range(len(levels) - 1, -1, -1):
        width = 1 << t
        pa, pb = a + lcp, b + lcp
        ok = (pa < M) & (pb < M)
        eq = np.zeros(M - 1, dtype=bool)
        eq[ok] = levels[t][pa[ok]] == levels[t][pb[ok]]
        lcp[eq] += width
    lcp_prev = np.concatenate([[0], lcp])  # for suffix sa[i], LCP with sa[i-1]
    lcp_prev = np.minimum(lcp_prev, valid[sa])

    diff = np.zeros(n_max + 2, dtype=np.int64)
    lo = np.minimum(lcp_prev + 1, n_max + 1)
    hi = np.minimum(valid[sa] + 1, n_max + 1)
    keep = lo < hi
    np.add.at(diff, lo[keep], 1)
    np.add.at(diff, hi[keep], -1)
    return np.cumsum(diff)[: n_max + 1]


def factor_complexity(theta: Substitution, n_max: int) -> tuple:
    """``(p(1), ..., p(n_max))`` with ``p(n) = #L^n(X_θ)``."""
    if n_max < 1:
        return ()
    counts = _distinct_factor_counts(_covering_words(theta, n_max), n_max, theta.size)
    return tuple(int(c) for c in counts[1:])


# ---------------------------------------------------------------------------
# periodic points

@dataclass(frozen=True)
class Seed:
    """A legal seed ``b|a`` of a θ-periodic point with period ``p``."""

    left: int
    right: int
    period: int


def periodic_seed(theta: Substitution) -> Seed:
    """Smallest ``p`` admitting a seed ``b|a``; ties broken by smallest ``(a, b)``."""
    size = theta.size
    first = [img[0] for img in theta.images]
    last = [img[-1] for img in theta.images]
    legal = two_letter_language(theta)
    bound = math.factorial(size) * size
    f_p, g_p = list(range(size)), list(range(size))
    for p in range(1, bound + 1):
        f_p = [first[x] for x in f_p]
        g_p = [last[x] for x in g_p]
        for a in range(size):
            if f_p[a] != a:
                continue
            for b in range(size):
                if g_p[b] == b and (b, a) in legal:
                    return Seed(left=b, right=a, period=p)
    raise PreconditionError("no periodic seed found; is the substitution primitive?")


def _grow(theta: Substitution, letter: int, period: int, n: int, from_left: bool) -> np.ndarray:
    if max(len(img) for img in theta.images) == 1:
        return np.full(n, letter, dtype=np.int64)
    w = np.array([letter], dtype=np.int64)
    while len(w) < n:
        for _ in range(period):
            w = theta.apply_array(w[:n] if from_left else w[-n:])
    return w[:n] if from_left else w[len(w) - n:]


def right_half(theta: Substitution, n: int, seed: Seed | None = None) -> np.ndarray:
    """``x_{[0, n)}`` of the canonical θ-periodic point."""
    seed = seed or periodic_seed(theta)
    return _grow(theta, seed.right, seed.period, n, True)


def periodic_point_prefix(theta: Substitution, n: int, seed: Seed | None = None) -> np.ndarray:
    """The window ``x_{[-n, n)}`` of the canonical θ-periodic point; ``x_0`` sits at index ``n``."""
    seed = seed or periodic_seed(theta)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    left = _grow(theta, seed.left, seed.period, n, False)
    right = _grow(theta, seed.right, seed.period, n, True)
    return np.concatenate([left, right])


# ---------------------------------------------------------------------------
# finiteness

@dataclass(frozen=True)
class FinitenessVerdict:
    finite: bool
    cutoff: int
    complexity_profile: tuple
    period: int | None = None
    witness_length: int | None = None

    @property
    def label(self) -> str:
        return "CertifiedFinite" if self.finite else "PresumedInfinite"


def default_finiteness_cutoff(theta: Substitution) -> int:
    L = max(len(img) for img in theta.images)
    return 4 * theta.size ** 2 * L ** 2


def least_period(word: np.ndarray) -> int:
    """Least ``q`` with ``word[i] == word[i+q]`` for all valid ``i``."""
    n = len(word)
    for q in range(1, n):
        if np.array_equal(word[q:], word[:-q]):
            return q
    return n


def is_finite_subshift(theta: Substitution, cutoff: int | None = None) -> FinitenessVerdict:
    """Morse–Hedlund test: certify a periodic X_θ if ``p(n) <= n`` for some ``n <= cutoff``."""
    N = cutoff or default_finiteness_cutoff(theta)
    profile = factor_complexity(theta, N + 1)
    for n in range(1, N + 1):
        if profile[n - 1] <= n:
            q = profile[n]  # p is constant from here on, and equals the least period
            prefix = right_half(theta, 4 * q + 2 * N)
            if least_period(prefix) != q:
                raise AssertionError(f"periodicity witness failed: p({n})={profile[n-1]}, prefix period != {q}")
            return FinitenessVerdict(True, N, profile[:N], period=q, witness_length=n)
    return FinitenessVerdict(False, N, profile[:N])
