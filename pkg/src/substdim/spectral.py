"""Structural analysis of constant-length substitutions.

Column maps, coincidences, agreement counts c/C of powers, height and the
pure-base / one-to-one reductions.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import (
    PreconditionError,
    Substitution,
    base_digits,
    periodic_seed,
    right_half,
)


class FiniteSubshiftError(PreconditionError):
    """The operation only makes sense for infinite X_θ."""


class GammaUndecided(RuntimeError):
    """The σⁿ-minimal partition count did not stabilise within the horizon."""

    def __init__(self, n: int, horizon: int, history: list):
        super().__init__(f"gamma({n}) undecided within horizon {horizon} (component counts {history})")
        self.n = n
        self.horizon = horizon
        self.history = history


class ConsistencyError(AssertionError):
    """An internal cross-check failed on this input; the instance is reported, not guessed around."""


def incidence_matrix(theta: Substitution) -> np.ndarray:
    """``M[a, b]`` = number of occurrences of ``a`` in θ(b)."""
    m = np.zeros((theta.size, theta.size), dtype=np.int64)
    for b, img in enumerate(theta.images):
        for a in img:
            m[a, b] += 1
    return m


def is_primitive(theta: Substitution) -> tuple:
    """``(True, t)`` with the least ``t`` such that ``M^t > 0``, else ``(False, None)``.

    Only ``t <= (|A|-1)^2 + 1`` needs checking (Wielandt).
    """
    size = theta.size
    base = incidence_matrix(theta) > 0
    power = base.copy()
    for t in range(1, (size - 1) ** 2 + 2):
        if power.all():
            return True, t
        power = (power.astype(np.int64) @ base.astype(np.int64)) > 0
    return False, None


def column_maps(theta: Substitution) -> list:
    """``τ_j`` for ``j < |θ|`` as tuples, ``τ_j[a] = θ(a)_j``."""
    table = theta.table
    return [tuple(int(v) for v in table[:, j]) for j in range(theta.length)]


def compose_columns(theta: Substitution, digits_outer_first: list) -> tuple:
    """Apply ``τ_{d_1}`` first, then ``τ_{d_2}``, ...; returns the composed letter map."""
    taus = column_maps(theta)
    current = tuple(range(theta.size))
    for d in digits_outer_first:
        current = tuple(taus[d][x] for x in current)
    return current


# ---------------------------------------------------------------------------
# coincidences

@dataclass(frozen=True)
class CoincidenceCertificate:
    """θᵏ(a)_j is the same letter ``value`` for every ``a``."""

    order: int
    position: int
    value: int
    digits: tuple  # column indices in application order (most significant digit of j first)

    def replay(self, theta: Substitution) -> bool:
        L = theta.length
        if list(reversed(base_digits(self.position, L, self.order))) != list(self.digits):
            return False
        image = compose_columns(theta, list(self.digits))
        return set(image) == {self.value}


@dataclass(frozen=True)
class ExhaustionProof:
    """The subsets reachable from the full alphabet under column maps; none is a singleton."""

    reachable: tuple  # tuple of sorted letter tuples

    def replay(self, theta: Substitution) -> bool:
        taus = column_maps(theta)
        closed = set(self.reachable)
        if tuple(range(theta.size)) not in closed:
            return False
        for s in closed:
            if len(s) <= 1:
                return False
            for tau in taus:
                if tuple(sorted({tau[x] for x in s})) not in closed:
                    return False
        return True


def find_coincidence(theta: Substitution):
    """Breadth-first search over letter subsets; the first singleton gives a minimal-order coincidence."""
    taus = column_maps(theta)
    start = tuple(range(theta.size))
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if len(s) == 1:
            digits = []
            node = s
            while parent[node] is not None:
                node, d = parent[node]
                digits.append(d)
            digits.reverse()
            k = len(digits)
            L = theta.length
            position = sum(d * L ** (k - 1 - i) for i, d in enumerate(digits))
            if k == 0:
                # one-letter alphabet: trivially coincident at order 1, position 0
                return CoincidenceCertificate(1, 0, s[0], (0,))
            return CoincidenceCertificate(k, position, s[0], tuple(digits))
        for j, tau in enumerate(taus):
            t = tuple(sorted({tau[x] for x in s}))
            if t not in parent:
                parent[t] = (s, j)
                queue.append(t)
    return ExhaustionProof(tuple(sorted(parent, key=lambda x: (len(x), x))))


# ---------------------------------------------------------------------------
# agreement counts

@dataclass(frozen=True)
class AgreementStats:
    k: int
    length: int  # |θ|^k
    pairwise: dict  # {(a, b): c_ab(θ^k)} for a < b
    c: int
    C: int


def _pair_states(size: int) -> dict:
    return {(a, b): i for i, (a, b) in enumerate((a, b) for a in range(size) for b in range(a + 1, size))}


def agreement_profile(theta: Substitution, k_max: int) -> Iterator[AgreementStats]:
    """Yield :class:`AgreementStats` for θ¹, ..., θ^{k_max}.

    Uses ``c_ab(θᵏ) = Σ_j c_{τ_j a, τ_j b}(θ^{k-1})`` with ``c_xx(θ^{k-1}) = |θ|^{k-1}``,
    so the cost is O(k |A|² |θ|) exact integer operations.
    """
    if theta.size < 2:
        raise PreconditionError("agreement counts need at least two letters")
    L = theta.length
    states = _pair_states(theta.size)
    taus = column_maps(theta)
    # targets[s] = list over j of state index (or -1 for equal letters)
    targets = []
    for (a, b) in states:
        row = []
        for tau in taus:
            x, y = tau[a], tau[b]
            row.append(-1 if x == y else states[(min(x, y), max(x, y))])
        targets.append(row)
    agree = [0] * len(states)  # k = 0: distinct letters never agree
    full = 1  # |θ|^{k-1}
    for k in range(1, k_max + 1):
        agree = [sum(full if t < 0 else agree[t] for t in row) for row in targets]
        full *= L
        pairwise = {pair: agree[i] for pair, i in states.items()}
        yield AgreementStats(k, full, pairwise, min(agree), max(agree))


def agreement_stats(theta: Substitution, k: int) -> AgreementStats:
    if k < 1:
        raise ValueError("power k must be >= 1")
    stats = None
    for stats in agreement_profile(theta, k):
        pass
    return stats


# ---------------------------------------------------------------------------
# height and γ(n)

@dataclass(frozen=True)
class HeightInfo:
    h: int
    return_time_gcd: int
    gamma_h: int | None


def _block_words(u: bytes, start: int, step: int, width: int, count: int) -> set:
    return {u[start + t * step: start + t * step + width] for t in range(count)}


def _components(sets: list) -> list:
    """Connected components of the 'sets intersect' graph, as sorted index lists."""
    n = len(sets)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if sets[i] & sets[j]:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def default_gamma_horizon(theta: Substitution, n: int) -> int:
    return 64 * n * theta.length


def gamma(theta: Substitution, n: int, horizon: int | None = None) -> int:
    """Number of pieces of the cyclic σⁿ-minimal partition of X_θ, estimated on the periodic point.

    Residues ``i mod n`` are grouped by the language of the n-decimated block
    sequences ``(x_{[i+tn, i+tn+n)})_t``.  Distinct σⁿ-minimal sets have
    disjoint languages from some block-word length on, so residues are linked
    when their sampled block-word sets intersect.  The count must stay constant
    over the upper half of the usable word lengths; otherwise the sample is
    doubled up to ``horizon`` blocks per residue.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 1
    horizon = horizon or default_gamma_horizon(theta, n)
    seed = periodic_seed(theta)
    history = []
    blocks = max(16, horizon // 8)
    max_words = 64
    while True:
        u = right_half(theta, n * (blocks + max_words + 1), seed)
        ub = bytes(int(v) for v in u) if theta.size <= 256 else None
        counts = []
        for m in range(1, max_words + 1):
            sets = [_block_words(ub, i, n, m * n, blocks) for i in range(n)]
            if max(len(s) for s in sets) * 4 > blocks:
                break
            counts.append(len(_components(sets)))
        history.append((blocks, counts))
        if len(counts) >= 2:
            upper = counts[len(counts) // 2:]
            if len(set(upper)) == 1:
                return upper[0]
        if blocks >= horizon:
            raise GammaUndecided(n, horizon, history)
        blocks = min(horizon, blocks * 2)


def _divisors(n: int) -> list:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _letter_residues(images: tuple, L: int, start: int, d: int) -> set:
    """Pairs ``(letter, position mod d)`` occurring in the fixed point ``u = Θ(u)`` with ``u_0 = start``."""
    seen = {(start, 0)}
    todo = [(start, 0)]
    while todo:
        b, r = todo.pop()
        for i, x in enumerate(images[b]):
            nxt = (x, (L * r + i) % d)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


def return_time_gcd(theta: Substitution) -> int:
    """gcd of ``{t >= 1 : u_t = u_0}`` for the one-sided periodic point ``u``.

    Exact: ``u`` is fixed by Θ = θᵖ, so the residues of occurrence positions
    modulo ``d`` form a finite closure; ``d`` divides every return time iff
    ``u_0`` only occurs at residue 0.  The answer divides the first return time.
    """
    seed = periodic_seed(theta)
    big = theta.power(seed.period) if seed.period > 1 else theta
    a = seed.right
    u = right_half(theta, 2, seed)
    n = 2
    while True:
        times = np.flatnonzero(u[1:] == a)
        if len(times):
            first = int(times[0]) + 1
            break
        n *= 2
        u = right_half(theta, n, seed)
    for d in sorted(_divisors(first), reverse=True):
        if all(r == 0 for x, r in _letter_residues(big.images, big.length, a, d) if x == a):
            return d
    return 1


def height(theta: Substitution, verify: bool = True, horizon: int | None = None) -> HeightInfo:
    """Largest ``n`` coprime to |θ| dividing the return-time gcd of the periodic point.

    ``verify`` checks γ(h) = h with :func:`gamma`.
    """
    ok, _ = is_primitive(theta)
    if not ok:
        raise PreconditionError("height needs a primitive substitution")
    L = theta.length
    g = return_time_gcd(theta)
    h = g
    while math.gcd(h, L) > 1:
        h //= math.gcd(h, L)
    gamma_h = None
    if verify:
        gamma_h = gamma(theta, h, horizon)
        if gamma_h != h:
            raise ConsistencyError(f"height {h} from return times but gamma({h}) = {gamma_h}")
    return HeightInfo(h, g, gamma_h)


# ---------------------------------------------------------------------------
# pure base

@dataclass(frozen=True)
class PureBase:
    eta: Substitution
    block_decoding: tuple  # block letter index -> word over the original alphabet
    height: int
    power: int  # η is built from θ^power (1 unless θ does not preserve the base piece)

    def decode(self, word) -> tuple:
        out = []
        for b in word:
            out.extend(self.block_decoding[b])
        return tuple(out)


def aligned_factors(theta: Substitution, width: int, modulus: int) -> set:
    """Words of length ``width`` occurring at positions ≡ 0 (mod ``modulus``) of the one-sided periodic point.

    Exact: with ``u = Θ(u)`` for Θ = θᵖ, the pairs (2-letter factor, position mod
    ``modulus``) form a finite closure, and every aligned window lies inside
    ``Θᵗ`` of one such pair once ``|Θ|ᵗ >= width - 1``.
    """
    seed = periodic_seed(theta)
    big = theta.power(seed.period) if seed.period > 1 else theta
    lam = big.length
    u = right_half(theta, 2, seed)
    start = ((int(u[0]), int(u[1])), 0)
    seen = {start}
    todo = [start]
    while todo:
        (x, y), r = todo.pop()
        img = big.images[x] + big.images[y]
        for i in range(len(img) - 1):
            nxt = ((img[i], img[i + 1]), (lam * r + i) % modulus)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    t, span = 0, 1
    while span < width - 1:
        t += 1
        span *= lam
    found = set()
    for (x, y), r in seen:
        w = big.iterate((x, y), t)
        for i in range(len(w) - width + 1):
            if (span * r + i) % modulus == 0:
                found.add(w[i:i + width])
    return found


def _block_substitution(theta: Substitution, h: int, blocks: list):
    index = {b: i for i, b in enumerate(blocks)}
    images = []
    for b in blocks:
        img = theta.apply(b)
        coded = []
        for i in range(0, len(img), h):
            blk = img[i:i + h]
            if blk not in index:
                return None
            coded.append(index[blk])
        images.append(tuple(coded))
    return images


def pure_base(theta: Substitution, info: HeightInfo | None = None, horizon: int | None = None) -> PureBase:
    """The pure base η on the alphabet of h-blocks at positions ≡ 0 (mod h) of the periodic point.

    η(b) is θ(b) cut into |θ| consecutive h-blocks.  When θ moves the base
    piece to another σ^h-minimal piece (the blocks of θ(b) leave the block
    alphabet), θᵖ with the periodic-point period p is used instead.
    """
    info = info or height(theta, horizon=horizon)
    h = info.h
    if h == 1:
        return PureBase(theta, tuple((a,) for a in range(theta.size)), 1, 1)
    blocks = sorted(aligned_factors(theta, h, h))
    power = 1
    images = _block_substitution(theta, h, blocks)
    if images is None:
        power = periodic_seed(theta).period
        images = _block_substitution(theta.power(power), h, blocks)
        if images is None:
            raise ConsistencyError("aligned h-blocks are not closed under θ^p")
    wide = any(len(str(x)) > 1 for x in theta.alphabet.letters)
    letters = tuple("[" + theta.format_word(b, sep=" " if wide else "") + "]" for b in blocks)
    eta = Substitution.from_images(letters, images)
    ok, _ = is_primitive(eta)
    if not ok:
        raise ConsistencyError(f"pure base of height-{h} substitution is not primitive")
    eta_h = height(eta, verify=False).h
    if eta_h != 1:
        raise ConsistencyError(f"pure base has height {eta_h}, expected 1")
    return PureBase(eta, tuple(blocks), h, power)


# ---------------------------------------------------------------------------
# one-to-one reduction

def injective_reduction(theta: Substitution) -> tuple:
    """Merge letters whose images agree over the quotient alphabet, to a fixpoint.

    Returns ``(θ', merge)`` where ``merge[a]`` is the class index of letter ``a``;
    classes are ordered and named by their smallest member.
    """
    size = theta.size
    cls = list(range(size))
    while True:
        keyed = {}
        new = []
        for a in range(size):
            key = (tuple(cls[s] for s in theta.images[a]),)
            if key not in keyed:
                keyed[key] = len(keyed)
            new.append(keyed[key])
        # canonical: classes numbered by smallest member
        order = {}
        for a in range(size):
            order.setdefault(new[a], len(order))
        new = [order[c] for c in new]
        if new == cls:
            break
        cls = new
    n_cls = max(cls) + 1
    if n_cls == 1:
        raise FiniteSubshiftError("one-to-one reduction collapses to a single letter: X_θ is finite")
    reps = [cls.index(c) for c in range(n_cls)]
    letters = tuple(theta.alphabet.letters[r] for r in reps)
    images = tuple(tuple(cls[s] for s in theta.images[r]) for r in reps)
    return Substitution.from_images(letters, images), tuple(cls)
