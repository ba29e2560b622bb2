"""Finite-window estimates on the Besicovitch quotient of a substitution subshift.

Everything here is a diagnostic: separation counts, density estimates and the
log-log slope approximate the amorphic complexity but certify nothing.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Substitution, is_finite_subshift, periodic_point_prefix
from .spectral import agreement_stats


class DegenerateFit(ValueError):
    """Fewer than three usable grid points remain for the log-log fit."""


# ---------------------------------------------------------------------------
# distance estimators

@dataclass(frozen=True)
class DisagreementEstimate:
    value: float
    window: int
    delta: float
    limsup_proxy: float


def _check_pair(x: np.ndarray, y: np.ndarray) -> int:
    if x.shape != y.shape or len(x) % 2:
        raise ValueError(f"windows of mismatched or odd length: {len(x)} vs {len(y)}")
    return len(x) // 2


def neighbourhood_radius(delta: float, beta: float = 2.0) -> int:
    """Largest r with beta**-r >= delta: d_beta >= delta iff a disagreement lies within distance r."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    r = math.floor(math.log(1.0 / delta, beta) + 1e-12)
    return max(r, 0)


def _suffix_max(flags: np.ndarray, min_len: int = 64) -> float:
    """Max over dyadic prefixes [0, m) of the mean over their last half [m/2, m)."""
    best = float(flags.mean()) if len(flags) else 0.0
    csum = np.concatenate([[0], np.cumsum(flags, dtype=np.int64)])
    m = len(flags)
    while m >= min_len:
        half = m // 2
        best = max(best, (csum[m] - csum[half]) / (m - half))
        m = half
    return float(best)


def d_delta_estimate(x: np.ndarray, y: np.ndarray, delta: float = 1.0, beta: float = 2.0) -> DisagreementEstimate:
    """Density of k in [0, n) with d_beta(σ^k x, σ^k y) >= delta.

    Windows hold ``x_{[-n, n)}`` with ``x_0`` at index n.  For delta < 1 a position
    counts when its radius-r neighbourhood disagrees; positions whose
    neighbourhood leaves the window are dropped from numerator and denominator.
    """
    n = _check_pair(x, y)
    r = neighbourhood_radius(delta, beta)
    diff = (x != y).astype(np.int64)
    if r == 0:
        flags = diff[n:]
    else:
        if n - r <= 0:
            raise ValueError(f"window radius {n} too small for neighbourhood radius {r}")
        csum = np.concatenate([[0], np.cumsum(diff)])
        centres = np.arange(n, 2 * n - r)
        flags = (csum[centres + r + 1] - csum[centres - r]) > 0
    return DisagreementEstimate(float(flags.mean()), n, delta, _suffix_max(flags))


def d_B_estimate(x: np.ndarray, y: np.ndarray, beta: float = 2.0) -> float:
    """Birkhoff average over k in [0, n) of the two-sided Cantor distance d_beta(σ^k x, σ^k y).

    Disagreements outside the window are unknown and treated as absent.
    """
    n = _check_pair(x, y)
    where = np.flatnonzero(x != y)
    if where.size == 0:
        return 0.0
    k = np.arange(n, 2 * n)
    idx = np.searchsorted(where, k)
    right = np.where(idx < where.size, where[np.minimum(idx, where.size - 1)] - k, np.iinfo(np.int64).max)
    left = np.where(idx > 0, k - where[np.maximum(idx - 1, 0)], np.iinfo(np.int64).max)
    dist = np.minimum(left, right).astype(np.float64)
    return float(np.mean(beta ** -dist))


def pairwise_d1(forward: np.ndarray, alphabet_size: int, chunk: int = 8192) -> np.ndarray:
    """Matrix of Hamming densities between the rows of ``forward`` (shape (m, n)).

    Agreements are counted with one-hot float32 products per letter, chunked
    over columns so every partial sum stays exact in float32.
    """
    m, n = forward.shape
    agree = np.zeros((m, m), dtype=np.float64)
    for start in range(0, n, chunk):
        block = forward[:, start:start + chunk]
        for a in range(alphabet_size):
            hot = (block == a).astype(np.float32)
            agree += hot @ hot.T
    return 1.0 - agree / n


# ---------------------------------------------------------------------------
# sampling

def van_der_corput(i: int, base: int = 2) -> float:
    q, denom = 0.0, 1.0
    while i:
        i, digit = divmod(i, base)
        denom *= base
        q += digit / denom
    return q


@dataclass
class OrbitSample:
    points: np.ndarray  # (count, 2n) windows x_{[-n, n)}
    radius: int
    offsets: tuple
    exhausted: bool = False  # fewer distinct points than requested
    theta: Substitution | None = None
    base: np.ndarray | None = field(default=None, repr=False)  # x_{[-2n, 2n)} of the periodic point

    @property
    def forward(self) -> np.ndarray:
        return self.points[:, self.radius:]

    def __len__(self):
        return len(self.points)

    def window(self, offset: int, radius: int | None = None) -> np.ndarray:
        """Window of radius ``radius`` (default the sample radius) centred at ``offset``."""
        radius = self.radius if radius is None else radius
        centre = len(self.base) // 2 + offset
        if centre - radius < 0 or centre + radius > len(self.base):
            raise IndexError(f"offset {offset} with radius {radius} leaves the stored orbit segment")
        return self.base[centre - radius:centre + radius]


def offset_base(length: int) -> int:
    """Smallest prime not dividing ``length``.

    Offsets that share high powers of a prime factor of |θ| are Besicovitch
    close (their orbits agree on most θ-blocks), so the radical-inverse base
    must avoid those primes.
    """
    p = 2
    while length % p == 0 or any(p % q == 0 for q in range(2, p)):
        p += 1
    return p


def sample_orbit(theta: Substitution, count: int, radius: int) -> OrbitSample:
    """``count`` distinct shifts of the θ-periodic point with van der Corput offsets in [0, radius).

    For a finite subshift fewer distinct windows may exist; then all of them
    are returned and ``exhausted`` is set.
    """
    if count < 1 or radius < 1:
        raise ValueError("count and radius must be positive")
    base = periodic_point_prefix(theta, 2 * radius).astype(np.int8 if theta.size < 128 else np.int64)
    centre = 2 * radius
    seen, points, offsets = set(), [], []
    i = 0
    limit = max(4 * count, count + 64)
    b = offset_base(theta.length)
    while len(points) < count and i < limit:
        t = int(van_der_corput(i, b) * radius)
        i += 1
        w = base[centre + t - radius:centre + t + radius]
        key = w.tobytes()
        if key in seen:
            continue
        seen.add(key)
        points.append(w)
        offsets.append(t)
    return OrbitSample(np.stack(points), radius, tuple(offsets), len(points) < count, theta, base)


# ---------------------------------------------------------------------------
# separation numbers and the dimension fit

@dataclass(frozen=True)
class SeparationTable:
    delta: float
    nu_grid: tuple
    counts: tuple
    method: str = "greedy-maximal"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["nu", "count"])
        for nu, c in zip(self.nu_grid, self.counts):
            writer.writerow([repr(float(nu)), c])
        return buf.getvalue()


def default_nu_grid(nu_max: float = 0.5, nu_min: float = 2.0 ** -9) -> tuple:
    """Geometric grid from ``nu_max`` down to ``nu_min`` with ratio 2^(-1/2)."""
    if not 0 < nu_min < nu_max <= 1:
        raise ValueError("need 0 < nu_min < nu_max <= 1")
    steps = int(math.floor(2 * math.log2(nu_max / nu_min) + 1e-9))
    return tuple(nu_max * 2.0 ** (-i / 2) for i in range(steps + 1))


def sample_distances(sample: OrbitSample, delta: float = 1.0) -> np.ndarray:
    if delta == 1.0:
        return pairwise_d1(sample.forward, sample.theta.size if sample.theta else int(sample.points.max()) + 1)
    m = len(sample)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            out[i, j] = out[j, i] = d_delta_estimate(sample.points[i], sample.points[j], delta).value
    return out


def sep_table(sample: OrbitSample, delta: float = 1.0, nu_grid=None, distances: np.ndarray | None = None) -> SeparationTable:
    """Greedy maximal (δ, ν)-separated subsets of the sample for each ν.

    The scan runs in sample order.  Points kept at a larger ν stay kept at
    the next smaller ν, which makes the counts non-decreasing down the grid.
    """
    nu_grid = tuple(default_nu_grid() if nu_grid is None else nu_grid)
    if any(b >= a for a, b in zip(nu_grid, nu_grid[1:])) or not all(0 < v <= 1 for v in nu_grid):
        raise ValueError("nu_grid must be strictly decreasing inside (0, 1]")
    dist = sample_distances(sample, delta) if distances is None else distances
    m = dist.shape[0]
    kept: list = []
    counts = []
    for nu in nu_grid:
        in_set = np.zeros(m, dtype=bool)
        in_set[kept] = True
        for i in range(m):
            if in_set[i]:
                continue
            if not kept or dist[i, kept].min() >= nu:
                kept.append(i)
                in_set[i] = True
        counts.append(len(kept))
    return SeparationTable(delta, nu_grid, tuple(counts))


@dataclass(frozen=True)
class DimensionFit:
    slope: float
    intercept: float
    r_squared: float
    nu_range: tuple
    table: SeparationTable
    diagnostics: dict

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "nu_range": list(self.nu_range),
            "counts": list(self.table.counts),
            "nu_grid": list(self.table.nu_grid),
            "count_method": self.table.method,
            **self.diagnostics,
        }


@dataclass(frozen=True)
class EmpiricalConfig:
    window: int = 1 << 16
    samples: int = 512
    nu_max: float = 0.5
    nu_min: float = 2.0 ** -9
    stability: float = 0.01
    stability_pairs: int = 64
    max_doublings: int = 3
    saturation: float = 0.5  # drop ν where the count exceeds this fraction of the sample


def check_stability(theta: Substitution, sample: OrbitSample, pairs: int, threshold: float) -> float:
    """Largest change of D_1 on the first ``pairs`` consecutive sample pairs when the radius is halved."""
    worst = 0.0
    half = sample.radius // 2
    for i in range(min(pairs, len(sample) - 1)):
        a, b = sample.offsets[i], sample.offsets[i + 1]
        full = d_delta_estimate(sample.window(a), sample.window(b)).value
        short = d_delta_estimate(sample.window(a, half), sample.window(b, half)).value
        worst = max(worst, abs(full - short))
    return worst


def fit_loglog(table: SeparationTable, sample_size: int, saturation: float) -> tuple:
    """Least squares of log count against -log ν over the usable interior of the grid."""
    nu = np.asarray(table.nu_grid)[1:-1]
    counts = np.asarray(table.counts)[1:-1]
    usable = (counts > 1) & (counts <= saturation * sample_size)
    if usable.sum() < 3:
        raise DegenerateFit(f"only {int(usable.sum())} usable grid points")
    xs, ys = -np.log(nu[usable]), np.log(counts[usable])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return max(float(slope), 0.0), float(intercept), r2, (float(nu[usable].max()), float(nu[usable].min()))


def empirical_ac(theta: Substitution, config: EmpiricalConfig | None = None) -> DimensionFit:
    """Box-dimension estimate of the sampled Besicovitch quotient at δ = 1.

    A finite subshift returns slope 0 directly: its counts saturate at the
    number of distinct orbit points.
    """
    config = config or EmpiricalConfig()
    window = config.window
    for doubling in range(config.max_doublings + 1):
        sample = sample_orbit(theta, config.samples, window)
        drift = check_stability(theta, sample, config.stability_pairs, config.stability)
        if drift < config.stability:
            break
        window *= 2
    else:
        raise DegenerateFit(f"D_1 still moves by {drift:.4f} after {config.max_doublings} window doublings")
    grid = default_nu_grid(config.nu_max, config.nu_min)
    table = sep_table(sample, 1.0, grid)
    diag = {"window": window, "samples": len(sample), "exhausted": sample.exhausted,
            "stability_drift": drift, "saturation": config.saturation}
    if sample.exhausted or max(table.counts) <= 2:
        return DimensionFit(0.0, math.log(max(table.counts)), 1.0, (grid[0], grid[-1]), table,
                            {**diag, "note": "counts saturate at the number of distinct orbit points"})
    slope, intercept, r2, rng = fit_loglog(table, len(sample), config.saturation)
    return DimensionFit(slope, intercept, r2, rng, table, diag)


def distances_csv(sample: OrbitSample, pairs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pair_i", "pair_j", "d1", "dB"])
    for i, j in pairs:
        x, y = sample.points[i], sample.points[j]
        writer.writerow([i, j, repr(d_delta_estimate(x, y).value), repr(d_B_estimate(x, y))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# IFS structure

def image_disagreement(theta: Substitution, x: np.ndarray, y: np.ndarray) -> float:
    """Hamming density between θ(x) and θ(y) for equal-length forward words."""
    tab = theta.table
    return float(np.mean(tab[x] != tab[y]))


def _parse_distance(theta: Substitution, word: np.ndarray, cut: int) -> float:
    """Density of symbols to change so ``word`` reads as θ-blocks starting at ``cut``."""
    L = theta.length
    nblocks = (len(word) - cut) // L
    blocks = word[cut:cut + nblocks * L].reshape(nblocks, L)
    mism = (blocks[:, None, :] != theta.table[None, :, :]).sum(axis=2)
    return float(mism.min(axis=1).sum()) / (nblocks * L)


def ifs_checks(theta: Substitution, sample: OrbitSample, pairs: int = 256, piece_points: int = 32,
               seed: int = 0) -> dict:
    """Contraction sandwich, strong-separation gap and attractor membership on the sample."""
    L = theta.length
    n = sample.radius
    fw = sample.forward
    report: dict = {}
    finite = is_finite_subshift(theta).finite
    stats = agreement_stats(theta, 1) if theta.size > 1 else None
    c, C = (stats.c, stats.C) if stats else (L, L)
    report["degenerate"] = bool(finite or c == L)

    lo, hi = (L - C) / L, (L - c) / L
    tol = 4.0 / n
    rng = np.random.default_rng(seed)
    m = len(sample)
    worst = 0.0
    checked = 0
    ratios = []
    for _ in range(pairs if m > 1 else 0):
        i, j = rng.choice(m, 2, replace=False)
        d = float(np.mean(fw[i] != fw[j]))
        dt = image_disagreement(theta, fw[i], fw[j])
        worst = max(worst, lo * d - dt, dt - hi * d)
        checked += 1
        if d > 0:
            ratios.append(dt / d)
    report["contraction"] = {"lower_rate": lo, "upper_rate": hi, "pairs": checked,
                             "max_violation": worst, "tolerance": tol, "ok": worst <= tol,
                             "ratio_range": [min(ratios), max(ratios)] if ratios else None}

    k = min(piece_points, m)
    imgs = theta.table[fw[:k]].reshape(k, -1)
    span = L * (n - 1)
    pieces = [imgs[:, i:i + span] for i in range(L)]
    gap = math.inf
    for i in range(L):
        for j in range(i + 1, L):
            for a in range(k):
                d = np.mean(pieces[i][a][None, :] != pieces[j], axis=1)
                gap = min(gap, float(d.min()))
    report["ssc"] = {"pieces": L, "points_per_piece": k, "gap": gap, "ok": gap > tol}

    hits = []
    for idx in range(m):
        word = fw[idx]
        hits.append(sum(1 for cut in range(L) if _parse_distance(theta, word, cut) <= tol))
    report["attractor"] = {"tolerance": tol, "points": m,
                           "ok": all(h == 1 for h in hits),
                           "multiple_hits": sum(1 for h in hits if h > 1),
                           "no_hits": sum(1 for h in hits if h == 0)}
    return report
