"""Batch commands: check, sample, oracle, compare, plot.

Exit codes: 0 success or certified, 1 not certified or a failed comparison,
2 usage or configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import diagnostics, oracle, records, svg
from .clan import build_clan, certify
from .cleaner import clean, project
from .config import ConfigError, RunSpec, load_config
from .finite_volume import stationary_run
from .randomness import RandomStream

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class SupportMismatch(RuntimeError):
    pass


# --------------------------------------------------------------------------
# sampling workers (module level so they pickle)

_MODEL_CACHE: dict = {}


def _context(spec_dict: dict):
    key = json.dumps(spec_dict, sort_keys=True)
    ctx = _MODEL_CACHE.get(key)
    if ctx is None:
        spec = RunSpec(**spec_dict)
        ctx = (spec, spec.build_model(), spec.build_window(), spec.build_limits(), spec.build_domain())
        _MODEL_CACHE[key] = ctx
    return ctx


def _oracle_mode(spec: RunSpec, m) -> str:
    mode = spec.run.get("oracle")
    if mode is None:
        mode = "exact" if m.discrete and m.finite_family else "stationary"
    return mode


def _work(job):
    """Return ``(sample lines, ledger lines)`` for indices ``[start, stop)``."""
    spec_dict, source, start, stop = job
    spec, m, w, limits, domain = _context(spec_dict)
    root = RandomStream(spec.run["seed"])
    lines, ledger = [], []
    law = None
    if source == "oracle" and _oracle_mode(spec, m) == "exact":
        law = oracle.enumerate_exact(m, w, spec.run["cap"])
    for i in range(start, stop):
        s = root.derive(i)
        if source == "perfect":
            clan = build_clan(m, w, s, limits, force=True)
            cfg = None
            if not clan.truncated or spec.run["biased"]:
                cfg = project(clean(clan, m, s, biased=True), w, m)
            lines.append(records.sample_line(i, m, spec.window, cfg, clan.depth, len(clan),
                                             clan.truncated))
            e = diagnostics.LedgerEntry(i, clan.depth, clan.n_generations(m), clan.uniforms,
                                        len(clan), clan.max_basis_size, clan.truncated, clan.reason)
            ledger.append(records.dumps(e.__dict__) + "\n")
        elif law is not None:
            cfg = oracle.exact_sample(law, s)
            lines.append(records.sample_line(i, m, spec.window, cfg, 0.0, 0, False))
        else:
            cfg, depth, ncyl = stationary_run(m, w, s, domain, spec.limits["max_depth"])
            lines.append(records.sample_line(i, m, spec.window, cfg, depth, ncyl, False))
    return lines, ledger


def run_samples(spec: RunSpec, source: str, jobs: int = 1):
    """All sample and ledger lines in index order, serial or across processes."""
    n = spec.run["n"]
    spec_dict = spec.to_dict()
    if n == 0:
        return [], []
    jobs = max(1, min(jobs, n))
    chunk = max(1, math.ceil(n / (4 * jobs)))
    tasks = [(spec_dict, source, a, min(a + chunk, n)) for a in range(0, n, chunk)]
    if jobs == 1:
        results = map(_work, tasks)
    else:
        ex = ProcessPoolExecutor(max_workers=jobs)
        results = ex.map(_work, tasks)
    lines, ledger = [], []
    for ln, lg in results:
        lines.extend(ln)
        ledger.extend(lg)
    if jobs > 1:
        ex.shutdown()
    return lines, ledger


# --------------------------------------------------------------------------
# commands


def _spec_from_args(args) -> RunSpec:
    if not args.config:
        raise UsageError("--config is required")
    spec = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        spec.run["seed"] = args.seed
    if getattr(args, "n", None) is not None:
        spec.run["n"] = args.n
    if getattr(args, "force", False):
        spec.run["force"] = True
    if getattr(args, "jobs", None) is not None:
        spec.run["jobs"] = args.jobs
    from .config import validate
    validate(spec)
    return spec


def _write(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _header_config(spec: RunSpec) -> dict:
    """Configuration recorded in output headers; ``jobs`` is left out so that
    serial and parallel runs write identical files."""
    d = spec.to_dict()
    d["run"].pop("jobs", None)
    return d


def ledger_path(out: str) -> Path:
    p = Path(out)
    stem = p.name[:-len(".jsonl")] if p.name.endswith(".jsonl") else p.name
    return p.with_name(stem + ".ledger.jsonl")


def cmd_check(args) -> int:
    spec = _spec_from_args(args)
    rep = diagnostics.alpha(spec.build_model())
    print(rep.text())
    if args.out:
        _write(args.out, records.dumps(rep.to_dict()) + "\n")
    return EXIT_OK if rep.subcritical else EXIT_NOT_CERTIFIED


def cmd_sample(args) -> int:
    spec = _spec_from_args(args)
    m = spec.build_model()
    if not spec.run["force"] and not certify(m):
        print(f"not certified subcritical (alpha = {m.alpha:.6g}); use --force to sample anyway",
              file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    lines, ledger = run_samples(spec, "perfect", spec.run["jobs"])
    _write(args.out, records.header_line("perfect", _header_config(spec)) + "".join(lines))
    led = diagnostics.BiasLedger.from_jsonl("".join(ledger))
    summary = None
    if len(led):
        a = m.alpha if m.alpha > 0 else None
        summary = diagnostics.bias_ledger_summary(
            led, k=spec.limits.get("size_cutoff"), alpha_value=a).to_dict()
    lpath = args.ledger or (ledger_path(args.out) if args.out and args.out != "-" else None)
    if lpath is not None:
        _write(lpath, records.ledger_text("".join(ledger), summary))
    n_trunc = sum(json.loads(ln)["truncated"] for ln in lines)
    print(f"wrote {len(lines)} samples ({n_trunc} truncated)", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = _spec_from_args(args)
    m = spec.build_model()
    if args.law:
        law = oracle.enumerate_exact(m, spec.build_window(), spec.run["cap"])
        _write(args.out, law.to_records(m))
        return EXIT_OK
    mode = _oracle_mode(spec, m)
    lines, _ = run_samples(spec, "oracle", spec.run["jobs"])
    _write(args.out, records.header_line(f"oracle-{mode}", _header_config(spec)) + "".join(lines))
    return EXIT_OK


def _labels(sf: records.SampleFile, m, finite: bool):
    cfgs = sf.configurations(m)
    return [c.key() for c in cfgs] if finite else [len(c) for c in cfgs]


def compare_files(a: records.SampleFile, b: records.SampleFile | None, level: float | None = None) -> dict:
    """Verdict record for a sample file against its exact law (``b`` None) or
    against a second sample file."""
    ca = a.config
    spec = RunSpec(**ca)
    m = spec.build_model()
    level = level if level is not None else spec.run.get("level", 0.01)
    finite = m.discrete and m.finite_family
    if b is not None:
        cb = b.config
        if ca["model"] != cb["model"] or ca.get("window") != cb.get("window"):
            raise SupportMismatch("sample files come from different models or windows")
        la, lb = _labels(a, m, finite), _labels(b, m, finite)
        if not la or not lb:
            raise ValueError("both files need complete samples")
        cs = oracle.chisq_two_sample(la, lb)
        pa, pb = Counter(la), Counter(lb)
        tv = 0.5 * sum(abs(pa[k] / len(la) - pb[k] / len(lb)) for k in set(pa) | set(pb))
        na = [len(c) for c in a.configurations(m)]
        nb = [len(c) for c in b.configurations(m)]
        mean_a, mean_b = sum(na) / len(na), sum(nb) / len(nb)
        var_a = sum((x - mean_a) ** 2 for x in na) / max(len(na) - 1, 1)
        var_b = sum((x - mean_b) ** 2 for x in nb) / max(len(nb) - 1, 1)
        se = math.sqrt(var_a / len(na) + var_b / len(nb))
        z = (mean_a - mean_b) / se if se > 0 else 0.0
        return {"mode": "two-sample", "statistic": "configuration" if finite else "window count",
                "n": [len(la), len(lb)], "tv": tv, "chi2": cs.statistic, "dof": cs.dof,
                "p": cs.p_value, "mean_count": [mean_a, mean_b], "z": z,
                "level": level, "pass": cs.p_value > level}
    if not finite:
        raise UsageError("no exact law for this model; give a baseline sample file")
    law = oracle.enumerate_exact(m, spec.build_window(), spec.run.get("cap", 6))
    counts = Counter(_labels(a, m, True))
    if set(counts) - set(law.keys):
        raise SupportMismatch("samples fall outside the support of the exact law")
    rep = oracle.compare_counts(counts, law, level)
    return {"mode": "exact", "n": rep.n, "tv": rep.tv, "chi2": rep.chisq.statistic,
            "dof": rep.chisq.dof, "p": rep.chisq.p_value, "level": level, "pass": rep.passed}


def cmd_compare(args) -> int:
    a = records.read_samples(args.samples)
    b = records.read_samples(args.baseline) if args.baseline else None
    rep = compare_files(a, b, args.level)
    text = records.dumps(rep) + "\n"
    _write(args.out, text)
    return EXIT_OK if rep["pass"] else EXIT_NOT_CERTIFIED


def cmd_plot(args) -> int:
    text = Path(args.samples).read_text(encoding="utf-8")
    if not text.strip():
        _write(args.out, svg.empty_svg("empty sample file"))
        return EXIT_OK
    sf = records.parse_samples(text)
    recs = [r for r in sf.records if r["index"] == args.index]
    if not recs:
        _write(args.out, svg.empty_svg(f"{sf.config['model']['kind']}: no sample {args.index}"))
        return EXIT_OK
    _write(args.out, svg.render(sf.config, recs[0]))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clansim", description="Perfect sampling by clans of ancestors.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sampling=True):
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="PATH")
        if sampling:
            sp.add_argument("--seed", type=int)
            sp.add_argument("--n", type=int)
            sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("check", help="report the subcriticality certificate")
    common(sp, sampling=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("sample", help="draw perfect samples")
    common(sp)
    sp.add_argument("--force", action="store_true", help="sample even if not certified")
    sp.add_argument("--ledger", metavar="PATH")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("oracle", help="draw from an independent oracle")
    common(sp)
    sp.add_argument("--law", action="store_true", help="write the exact law instead of samples")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("compare", help="test samples against the exact law or a second file")
    sp.add_argument("samples")
    sp.add_argument("baseline", nargs="?")
    sp.add_argument("--level", type=float)
    sp.add_argument("--out", metavar="PATH")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("plot", help="SVG of one sample")
    sp.add_argument("samples")
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--out", metavar="PATH")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
