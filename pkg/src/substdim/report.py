"""Report documents: building, deterministic JSON encoding and certificate replay."""
from __future__ import annotations

import json
import math
from dataclasses import asdict

import numpy as np

from . import __version__
from .bounds import DISCRETE, FINITE, PARTLY_CONTINUOUS, ClassificationReport, ac_bound
from .core import Substitution, factor_complexity, least_period, parse_substitution, right_half
from .spectral import CoincidenceCertificate, ExhaustionProof, agreement_stats

SCHEMA = "substdim.report/1"


def substitution_doc(theta: Substitution) -> dict:
    return {
        "alphabet": [str(a) for a in theta.alphabet.letters],
        "rules": {str(a): [str(theta.alphabet.letters[s]) for s in img]
                  for a, img in zip(theta.alphabet.letters, theta.images)},
        "text": theta.to_text(),
    }


def _letters(theta: Substitution, idx) -> list:
    return [str(theta.alphabet.letters[i]) for i in idx]


def _plain(obj):
    """Recursively turn report values into JSON-ready objects; floats stay floats, ∞ becomes "inf"."""
    if isinstance(obj, Substitution):
        return substitution_doc(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def to_float(value) -> float | None:
    if value is None:
        return None
    if value == "inf":
        return math.inf
    return float(value)


def certificate_docs(report: ClassificationReport) -> list:
    docs = []
    certs = report.certificates
    if "periodicity" in certs:
        docs.append({"type": "periodicity", **certs["periodicity"]})
    if "coincidence" in certs:
        cert: CoincidenceCertificate = certs["coincidence"]
        sub = certs["substitution"]
        docs.append({"type": "coincidence", "substitution": sub, "order": cert.order,
                     "position": cert.position, "value": str(sub.alphabet.letters[cert.value]),
                     "digits": list(cert.digits)})
    if "no_coincidence" in certs:
        proof: ExhaustionProof = certs["no_coincidence"]
        sub = certs["substitution"]
        docs.append({"type": "exhaustion", "substitution": sub,
                     "reachable": [_letters(sub, s) for s in proof.reachable]})
    if report.verdict == DISCRETE:
        docs.append({"type": "bounds", "substitution": certs["substitution"],
                     "lower": report.bounds.provenance["lower"], "upper": report.bounds.provenance["upper"]})
    return docs


def build_document(theta: Substitution, report: ClassificationReport, config: dict,
                   empirical: dict | None = None, include_trace: bool = True) -> dict:
    b = report.bounds
    doc = {
        "schema": SCHEMA,
        "tool": {"name": "substdim", "version": __version__},
        "config": config,
        "substitution": theta,
        "verdict": report.verdict,
        "ac": {"lower": b.lower, "upper": b.upper, "exact": b.exact},
        "certificates": certificate_docs(report),
    }
    if include_trace:
        trace = dict(report.trace)
        hist = b.provenance.get("history") if isinstance(b.provenance, dict) else None
        if hist is not None:
            trace["refinement"] = hist
        doc["trace"] = trace
    if empirical is not None:
        doc["empirical"] = empirical
    return _plain(doc)


def dumps(doc) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def error_document(exc: BaseException, code: int, source: str | None = None) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if source is not None:
        err["input"] = source
    history = getattr(exc, "history", None)
    if history is not None:
        err["history"] = _plain(history)
    return {"schema": SCHEMA, "tool": {"name": "substdim", "version": __version__}, "error": err}


# ---------------------------------------------------------------------------
# replay

def _index(theta: Substitution, letters) -> tuple:
    return tuple(theta.alphabet.index(a) for a in letters)


def replay_certificate(cert: dict, original: Substitution) -> tuple:
    """Re-check one certificate from its own data; returns (ok, message)."""
    kind = cert.get("type")
    if kind == "coincidence":
        sub = parse_substitution(cert["substitution"])
        c = CoincidenceCertificate(cert["order"], cert["position"], sub.alphabet.index(cert["value"]),
                                   tuple(cert["digits"]))
        ok = c.replay(sub)
        return ok, "column composition is constant" if ok else "composition is not constant"
    if kind == "exhaustion":
        sub = parse_substitution(cert["substitution"])
        proof = ExhaustionProof(tuple(_index(sub, s) for s in cert["reachable"]))
        ok = proof.replay(sub)
        return ok, "reachable subsets closed, no singleton" if ok else "subset family not closed or has a singleton"
    if kind == "periodicity":
        q = cert["period"]
        n = cert.get("witness_length")
        if n is not None:
            prof = list(factor_complexity(original, n + 1))
            if prof != list(cert["complexity"]) or prof[n - 1] > n:
                return False, f"complexity profile mismatch or p({n}) > {n}"
        word = right_half(original, max(64, 8 * q))
        if least_period(word) != q:
            return False, f"right half does not have least period {q}"
        return True, f"p(n) <= n witnessed, least period {q}"
    if kind == "bounds":
        sub = parse_substitution(cert["substitution"])
        for side, key in (("lower", "C"), ("upper", "c")):
            prov = cert[side]
            stats = agreement_stats(sub, prov["power"])
            if stats.length != prov["length"] or getattr(stats, key) != prov[key]:
                return False, f"{side}: recomputed {key}={getattr(stats, key)} differs from {prov[key]}"
        return True, "c and C recomputed by the agreement DP"
    return False, f"unknown certificate type {kind!r}"


def verify_document(doc: dict) -> list:
    """Replay every certificate and the bound arithmetic; returns a list of (check, ok, message)."""
    results = []
    if doc.get("schema") != SCHEMA:
        return [("schema", False, f"unsupported schema {doc.get('schema')!r}")]
    original = parse_substitution(doc["substitution"])
    for i, cert in enumerate(doc.get("certificates", [])):
        try:
            ok, msg = replay_certificate(cert, original)
        except Exception as exc:  # a malformed certificate is a failed check, not a crash
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        results.append((f"certificate[{i}]:{cert.get('type')}", ok, msg))

    ac = doc["ac"]
    lower, upper, exact = to_float(ac["lower"]), to_float(ac["upper"]), to_float(ac["exact"])
    verdict = doc["verdict"]
    kinds = {c.get("type") for c in doc.get("certificates", [])}
    if verdict == FINITE:
        ok = lower == upper == exact == 0.0 and "periodicity" in kinds
    elif verdict == PARTLY_CONTINUOUS:
        ok = lower == upper == exact == math.inf and "exhaustion" in kinds
    elif verdict == DISCRETE:
        bounds = next(c for c in doc["certificates"] if c["type"] == "bounds")
        lo = ac_bound(bounds["lower"]["length"], bounds["lower"]["C"])
        up = ac_bound(bounds["upper"]["length"], bounds["upper"]["c"])
        same = (bounds["lower"]["length"] - bounds["lower"]["C"]) ** bounds["upper"]["power"] == \
            (bounds["upper"]["length"] - bounds["upper"]["c"]) ** bounds["lower"]["power"]
        ok = ("coincidence" in kinds and lo == lower and (up == upper or same and upper == lower)
              and (exact == lower if same else exact is None) and 1.0 - 1e-12 <= lower <= upper < math.inf)
    else:
        ok = False
    results.append(("bound arithmetic", ok, f"verdict {verdict} consistent with ac values" if ok
                    else f"verdict {verdict} inconsistent with ac values"))
    return results
