"""Amorphic complexity values and bounds, and the finite / discrete / partly continuous classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import FinitenessVerdict, PreconditionError, Substitution, is_finite_subshift, least_period, right_half
from .spectral import (
    AgreementStats,
    CoincidenceCertificate,
    ConsistencyError,
    ExhaustionProof,
    FiniteSubshiftError,
    agreement_profile,
    agreement_stats,
    find_coincidence,
    height,
    injective_reduction,
    is_primitive,
    pure_base,
)

FINITE = "Finite"
DISCRETE = "DiscreteInfinite"
PARTLY_CONTINUOUS = "PartlyContinuous"

BUDGET_LOG2 = 48  # refine powers while |Θ| <= 2^48


@dataclass(frozen=True)
class AcBounds:
    lower: float
    upper: float
    exact: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")


def ac_bound(size: int, agree: int) -> float:
    """``log|Θ| / (log|Θ| - log(|Θ| - agree))`` for exact integers ``|Θ|`` and ``agree``."""
    if not 0 <= agree < size:
        raise ValueError(f"agreement count {agree} outside [0, {size})")
    if agree == 0:
        return math.inf
    log_size = math.log(size)
    return log_size / (log_size - math.log(size - agree))


def rate_le(d1: int, k1: int, d2: int, k2: int) -> bool:
    """``log(d1)/k1 <= log(d2)/k2`` decided on integers (``d1**k2 <= d2**k1``)."""
    return d1 ** k2 <= d2 ** k1


def binary_formula(theta: Substitution) -> AcBounds:
    """Closed formula ``log|θ| / (log|θ| - log|θ|_*)`` for binary θ with a coincidence of order 1."""
    if theta.size != 2:
        raise PreconditionError("binary formula needs a two-letter alphabet")
    L = theta.length
    differ = sum(1 for x, y in zip(theta.images[0], theta.images[1]) if x != y)
    if differ == 0:
        raise FiniteSubshiftError("θ(0) = θ(1): the subshift is finite")
    if differ == L:
        raise PreconditionError("θ(0) and θ(1) differ everywhere: no coincidence, formula inapplicable")
    value = ac_bound(L, L - differ)
    prov = {"source": "binary formula", "length": L, "differing_positions": differ}
    return AcBounds(value, value, value, {"lower": prov, "upper": prov})


def general_bounds(stats: AgreementStats) -> AcBounds:
    """Bounds from c and C of a one-to-one power Θ with a coincidence."""
    T = stats.length
    if stats.c == 0:
        raise PreconditionError(f"c(Θ) = 0 at power {stats.k}: Θ is not a contraction")
    if stats.C >= T:
        raise PreconditionError(f"C(Θ) = |Θ| at power {stats.k}: Θ is not one-to-one")
    lower = ac_bound(T, stats.C)
    upper = ac_bound(T, stats.c)
    exact = lower if stats.c == stats.C else None
    if exact is not None:
        upper = lower
    return AcBounds(lower, upper, exact, {
        "lower": {"source": "general estimate", "power": stats.k, "length": T, "C": stats.C},
        "upper": {"source": "general estimate", "power": stats.k, "length": T, "c": stats.c},
    })


def default_budget(length: int) -> int:
    """Largest power k with length**k <= 2**48."""
    if length < 2:
        return 1
    k = 1
    while length ** (k + 1) <= 1 << BUDGET_LOG2:
        k += 1
    return k


def refine_bounds(theta: Substitution, k0: int, budget: int | None = None) -> AcBounds:
    """Best bounds over Θ = θ^{m k0} for every multiple ``m k0 <= budget``.

    The best lower bound comes from the largest rate ``log(|Θ|-C)/log|Θ|``, the
    best upper bound from the smallest ``log(|Θ|-c)/log|Θ|``; both are compared
    on integers.  ``history`` in the provenance keeps every evaluated power.
    """
    budget = default_budget(theta.length) if budget is None else budget
    if budget < k0:
        raise ValueError(f"budget {budget} smaller than coincidence order {k0}")
    best_low = best_up = None  # (disagreements, power, stats)
    history = []
    for stats in agreement_profile(theta, budget):
        if stats.k % k0:
            continue
        step = general_bounds(stats)
        history.append({"power": stats.k, "c": stats.c, "C": stats.C,
                        "lower": step.lower, "upper": step.upper})
        d_low, d_up = stats.length - stats.C, stats.length - stats.c
        if best_low is None or not rate_le(d_low, stats.k, best_low[0], best_low[1]):
            best_low = (d_low, stats.k, stats)
        if best_up is None or not rate_le(best_up[0], best_up[1], d_up, stats.k):
            best_up = (d_up, stats.k, stats)
    lo_stats, up_stats = best_low[2], best_up[2]
    lower = ac_bound(lo_stats.length, lo_stats.C)
    upper = ac_bound(up_stats.length, up_stats.c)
    same = best_low[0] ** best_up[1] == best_up[0] ** best_low[1]
    exact = lower if same else None
    if same:
        upper = lower
    return AcBounds(lower, upper, exact, {
        "lower": {"source": "general estimate", "power": lo_stats.k, "length": lo_stats.length, "C": lo_stats.C},
        "upper": {"source": "general estimate", "power": up_stats.k, "length": up_stats.length, "c": up_stats.c},
        "coincidence_order": k0,
        "budget": budget,
        "history": history,
    })


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class ClassifyConfig:
    finiteness_cutoff: int | None = None
    budget: int | None = None
    gamma_horizon: int | None = None


@dataclass
class ClassificationReport:
    verdict: str
    bounds: AcBounds
    certificates: dict
    trace: dict


def _finite_report(verdict: FinitenessVerdict, trace: dict) -> ClassificationReport:
    cert = {"periodicity": {"period": verdict.period, "witness_length": verdict.witness_length,
                            "complexity": list(verdict.complexity_profile[:verdict.witness_length + 1])}}
    return ClassificationReport(FINITE, AcBounds(0.0, 0.0, 0.0, {"source": "finite subshift"}), cert, trace)


def classify(theta: Substitution, config: ClassifyConfig | None = None) -> ClassificationReport:
    """Place X_θ in the trichotomy and attach certificates and ac bounds."""
    config = config or ClassifyConfig()
    if not theta.is_constant_length:
        raise PreconditionError("substitution is not of constant length")
    primitive, exponent = is_primitive(theta)
    if not primitive:
        raise PreconditionError("substitution is not primitive")
    trace = {"primitivity_exponent": exponent}

    fin = is_finite_subshift(theta, config.finiteness_cutoff)
    trace["finiteness"] = {"label": fin.label, "cutoff": fin.cutoff}
    if fin.finite:
        return _finite_report(fin, trace)
    trace["assumptions"] = [f"X is infinite (no periodicity witness up to word length {fin.cutoff})"]

    if theta.size == 2:
        trace["route"] = "binary"
        coin = find_coincidence(theta)
        if isinstance(coin, ExhaustionProof) or coin.order != 1:
            if not isinstance(coin, ExhaustionProof):
                raise ConsistencyError("binary substitution with a coincidence of order > 1")
            return ClassificationReport(
                PARTLY_CONTINUOUS, AcBounds(math.inf, math.inf, math.inf, {"source": "no coincidence"}),
                {"no_coincidence": coin, "substitution": theta}, trace)
        formula = binary_formula(theta)
        bounds = refine_bounds(theta, 1, config.budget)
        if bounds.exact is None or abs(bounds.exact - formula.exact) > 1e-12:
            raise ConsistencyError(f"binary formula {formula.exact} disagrees with general bounds {bounds}")
        trace["binary_formula"] = formula.exact
        trace["chosen_power"] = bounds.provenance["lower"]["power"]
        return ClassificationReport(DISCRETE, bounds, {"coincidence": coin, "substitution": theta}, trace)

    trace["route"] = "general"
    info = height(theta, horizon=config.gamma_horizon)
    trace["height"] = {"h": info.h, "return_time_gcd": info.return_time_gcd, "gamma_h": info.gamma_h}
    base = pure_base(theta, info)
    trace["pure_base"] = {"size": base.eta.size, "length": base.eta.length, "power": base.power,
                          "substitution": base.eta}
    try:
        reduced, merge = injective_reduction(base.eta)
    except FiniteSubshiftError:
        q = least_period(right_half(theta, 8 * fin.cutoff))
        trace["reduction"] = "collapsed to one letter"
        return ClassificationReport(
            FINITE, AcBounds(0.0, 0.0, 0.0, {"source": "finite subshift"}),
            {"periodicity": {"period": q, "witness_length": None, "complexity": []}}, trace)
    trace["reduction"] = {"size": reduced.size, "merge": list(merge), "substitution": reduced}
    coin = find_coincidence(reduced)
    if isinstance(coin, ExhaustionProof):
        return ClassificationReport(
            PARTLY_CONTINUOUS, AcBounds(math.inf, math.inf, math.inf, {"source": "no coincidence"}),
            {"no_coincidence": coin, "substitution": reduced}, trace)
    bounds = refine_bounds(reduced, coin.order, config.budget)
    trace["chosen_power"] = {"lower": bounds.provenance["lower"]["power"],
                             "upper": bounds.provenance["upper"]["power"]}
    if not (1.0 - 1e-12 <= bounds.lower <= bounds.upper < math.inf):
        raise ConsistencyError(f"bounds {bounds.lower}, {bounds.upper} violate 1 <= lower <= upper < inf")
    return ClassificationReport(DISCRETE, bounds, {"coincidence": coin, "substitution": reduced}, trace)
