"""Command-line front end: ``substdim analyze|bounds|empirical|language|batch|verify``."""
from __future__ import annotations

import csv
import io
import json
import os
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import __version__
from .bounds import DISCRETE, ClassifyConfig, classify
from .core import ParseError, PreconditionError, factor_complexity, language, parse_substitution
from .empirical import DegenerateFit, EmpiricalConfig, empirical_ac, ifs_checks, sample_orbit
from .report import build_document, dumps, error_document, verify_document
from .spectral import GammaUndecided

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_PRECONDITION, EXIT_UNDECIDED = 0, 1, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(exc, GammaUndecided):
        return EXIT_UNDECIDED
    return EXIT_FAILED


def read_source(source: str) -> str:
    """An existing file path is read; anything else is taken as an inline rule string."""
    path = Path(source)
    try:
        if path.is_file():
            return path.read_text()
    except OSError:
        pass
    return source


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def fail(exc: BaseException, out: str | None, source: str | None = None):
    code = exit_code_for(exc)
    emit(dumps(error_document(exc, code, source)), out)
    sys.exit(code)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("SUBSTDIM_THREADS", "1")))
    except ValueError:
        return 1


def _positive(ctx, param, value):
    if value is not None and value <= 0:
        raise click.BadParameter("must be positive")
    return value


def analysis_options(f):
    f = click.option("--budget", type=int, default=None, callback=_positive,
                     help="Largest power of the reduced substitution used for bound refinement.")(f)
    f = click.option("--finiteness-cutoff", type=int, default=None, callback=_positive,
                     help="Word length up to which the periodicity test runs (default 4|A|²|θ|²).")(f)
    return f


def empirical_options(f):
    f = click.option("--window", type=int, default=1 << 16, show_default=True, callback=_positive)(f)
    f = click.option("--samples", type=int, default=512, show_default=True, callback=_positive)(f)
    f = click.option("--nu-min", type=float, default=2.0 ** -9, show_default=True, callback=_positive)(f)
    f = click.option("--nu-max", type=float, default=0.5, show_default=True, callback=_positive)(f)
    return f


def common_options(f):
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv", "text"]), default="json",
                     show_default=True)(f)
    f = click.option("--seed", type=int, default=0, show_default=True,
                     help="Seed for the randomized pair choice in the IFS diagnostics.")(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output here.")(f)
    return f


def classify_config(budget, finiteness_cutoff) -> ClassifyConfig:
    return ClassifyConfig(finiteness_cutoff=finiteness_cutoff, budget=budget)


def run_empirical(theta, window, samples, nu_min, nu_max, seed) -> dict:
    cfg = EmpiricalConfig(window=window, samples=samples, nu_min=nu_min, nu_max=nu_max)
    section: dict = {}
    try:
        section["fit"] = empirical_ac(theta, cfg).summary()
    except DegenerateFit as exc:
        section["fit"] = {"error": str(exc)}
    small = sample_orbit(theta, min(samples, 64), min(window, 1 << 12))
    section["ifs"] = ifs_checks(theta, small, seed=seed)
    return section


def analyze_document(text: str, budget=None, finiteness_cutoff=None, empirical=None, trace=True) -> dict:
    theta = parse_substitution(text)
    report = classify(theta, classify_config(budget, finiteness_cutoff))
    config = {"budget": budget, "finiteness_cutoff": finiteness_cutoff}
    emp = None
    if empirical is not None:
        config["empirical"] = empirical
        emp = run_empirical(theta, **empirical)
    return build_document(theta, report, config, emp, include_trace=trace)


def _fmt_ac(v):
    return v if isinstance(v, str) else repr(v) if v is not None else ""


def text_summary(doc: dict) -> str:
    ac = doc["ac"]
    lines = [f"substitution: {doc['substitution']['text']}",
             f"verdict: {doc['verdict']}",
             f"ac: lower={_fmt_ac(ac['lower'])} upper={_fmt_ac(ac['upper'])} exact={_fmt_ac(ac['exact'])}"]
    for cert in doc["certificates"]:
        lines.append(f"certificate: {cert['type']}")
    if "empirical" in doc and "slope" in doc["empirical"]["fit"]:
        lines.append(f"empirical slope: {doc['empirical']['fit']['slope']!r}")
    return "\n".join(lines) + "\n"


def csv_rows(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(doc)
    if fmt == "text":
        return text_summary(doc)
    ac = doc["ac"]
    return csv_rows(["substitution", "verdict", "lower", "upper", "exact"],
                    [[doc["substitution"]["text"], doc["verdict"], _fmt_ac(ac["lower"]),
                      _fmt_ac(ac["upper"]), _fmt_ac(ac["exact"])]])


@click.group()
@click.version_option(__version__, prog_name="substdim")
def main():
    """Amorphic complexity of constant-length substitution subshifts."""


@main.command()
@click.argument("source")
@analysis_options
@empirical_options
@click.option("--empirical/--no-empirical", "with_empirical", default=False,
              help="Add the sampled separation-number fit and IFS diagnostics.")
@common_options
def analyze(source, budget, finiteness_cutoff, window, samples, nu_min, nu_max, with_empirical, fmt, seed, out):
    """Classify SOURCE (rule string or file) and report ac bounds with certificates."""
    emp = dict(window=window, samples=samples, nu_min=nu_min, nu_max=nu_max, seed=seed) if with_empirical else None
    try:
        doc = analyze_document(read_source(source), budget, finiteness_cutoff, emp)
    except Exception as exc:
        fail(exc, out, source)
    emit(render(doc, fmt), out)


@main.command()
@click.argument("source")
@analysis_options
@common_options
def bounds(source, budget, finiteness_cutoff, fmt, seed, out):
    """Verdict, ac bounds and certificates only (no pipeline trace)."""
    try:
        doc = analyze_document(read_source(source), budget, finiteness_cutoff, trace=False)
    except Exception as exc:
        fail(exc, out, source)
    emit(render(doc, fmt), out)


@main.command()
@click.argument("source")
@empirical_options
@common_options
def empirical(source, window, samples, nu_min, nu_max, fmt, seed, out):
    """Separation-number table and log-log fit on a sample of the subshift."""
    try:
        theta = parse_substitution(read_source(source))
        fit = empirical_ac(theta, EmpiricalConfig(window=window, samples=samples, nu_min=nu_min, nu_max=nu_max))
    except Exception as exc:
        fail(exc, out, source)
    if fmt == "csv":
        emit(fit.table.to_csv(), out)
    elif fmt == "text":
        emit(f"slope: {fit.slope!r}\nr_squared: {fit.r_squared!r}\n"
             f"nu_range: {fit.nu_range[0]!r} .. {fit.nu_range[1]!r}\n", out)
    else:
        emit(dumps({"substitution": theta, "fit": fit.summary(),
                    "config": {"window": window, "samples": samples, "nu_min": nu_min, "nu_max": nu_max},
                    "tool": {"name": "substdim", "version": __version__}}), out)


@main.command(name="language")
@click.argument("source")
@click.option("-n", "--length", "n", type=int, default=3, show_default=True, callback=_positive)
@common_options
def language_cmd(source, n, fmt, seed, out):
    """Factors of length N and the complexity p(1..N)."""
    try:
        theta = parse_substitution(read_source(source))
        words = sorted(theta.format_word(w) for w in language(theta, n))
        prof = factor_complexity(theta, n)
    except Exception as exc:
        fail(exc, out, source)
    if fmt == "csv":
        emit(csv_rows(["n", "factor"], [[n, w] for w in words]), out)
    elif fmt == "text":
        emit(f"p = {list(prof)}\n" + "\n".join(words) + "\n", out)
    else:
        emit(dumps({"substitution": theta, "n": n, "factors": words, "complexity": list(prof)}), out)


def read_batch(text: str) -> list:
    stripped = text.strip()
    if not stripped:
        return []
    if stripped.startswith("["):
        try:
            records = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON batch: {exc}") from None
        return [r if isinstance(r, str) else json.dumps(r, sort_keys=True) for r in records]
    return [line.strip() for line in text.splitlines() if line.strip() and not line.strip().startswith("#")]


def _batch_record(item):
    index, text, budget, cutoff = item
    try:
        doc = analyze_document(text, budget, cutoff, trace=False)
        return {"index": index, "input": text, "report": doc}
    except Exception as exc:
        return {"index": index, "input": text, "error": error_document(exc, exit_code_for(exc))["error"]}


def batch_summary(records: list) -> dict:
    verdicts = Counter(r["report"]["verdict"] for r in records if "report" in r)
    exact = Counter(repr(round(r["report"]["ac"]["exact"], 12)) for r in records
                    if "report" in r and r["report"]["verdict"] == DISCRETE and r["report"]["ac"]["exact"] is not None)
    errors = Counter(r["error"]["type"] for r in records if "error" in r)
    return {"records": len(records), "verdicts": dict(sorted(verdicts.items())),
            "exact_ac_histogram": dict(sorted(exact.items(), key=lambda kv: float(kv[0]))),
            "errors": dict(sorted(errors.items()))}


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@analysis_options
@common_options
def batch(path, budget, finiteness_cutoff, fmt, seed, out):
    """Classify every record of PATH (one rule string per line, or a JSON array)."""
    try:
        records = read_batch(Path(path).read_text())
    except Exception as exc:
        fail(exc, out, path)
    items = [(i, t, budget, finiteness_cutoff) for i, t in enumerate(records)]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(_batch_record, items))
    summary = batch_summary(results)
    if fmt == "csv":
        rows = []
        for r in results:
            if "report" in r:
                ac = r["report"]["ac"]
                rows.append([r["index"], r["input"], r["report"]["verdict"], _fmt_ac(ac["lower"]),
                             _fmt_ac(ac["upper"]), _fmt_ac(ac["exact"]), ""])
            else:
                rows.append([r["index"], r["input"], "", "", "", "", r["error"]["type"]])
        emit(csv_rows(["index", "input", "verdict", "lower", "upper", "exact", "error"], rows), out)
    elif fmt == "text":
        lines = [f"{r['index']}\t{r['input']}\t" + (r["report"]["verdict"] if "report" in r else "error: " + r["error"]["type"])
                 for r in results]
        lines.append(json.dumps(summary, sort_keys=True))
        emit("\n".join(lines) + "\n", out)
    else:
        emit(dumps({"tool": {"name": "substdim", "version": __version__},
                    "config": {"budget": budget, "finiteness_cutoff": finiteness_cutoff},
                    "records": results, "summary": summary}), out)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True)
def verify(path, fmt):
    """Replay every certificate in a report (or batch) document."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        click.echo(f"not a JSON document: {exc}", err=True)
        sys.exit(EXIT_PARSE)
    docs = [r["report"] for r in doc["records"] if "report" in r] if "records" in doc else [doc]
    results = []
    for i, d in enumerate(docs):
        try:
            checks = verify_document(d)
        except Exception as exc:
            checks = [("document", False, f"{type(exc).__name__}: {exc}")]
        results.extend((i, *c) for c in checks)
    ok = all(r[2] for r in results)
    if fmt == "json":
        click.echo(dumps({"ok": ok, "checks": [{"document": i, "check": c, "ok": k, "message": m}
                                               for i, c, k, m in results]}), nl=False)
    else:
        for i, c, k, m in results:
            click.echo(f"{'PASS' if k else 'FAIL'} doc {i} {c}: {m}")
        click.echo("all certificates replay" if ok else "verification failed")
    sys.exit(EXIT_OK if ok else EXIT_FAILED)


if __name__ == "__main__":
    main()
