"""Command line entry point: ``nbcovers <command> ...``.

Exit codes: 0 ok, 2 usage, 3 bad input (unreadable file, malformed graph,
invalid config), 4 resource or certification limits.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .errors import CertificationError, GraphError, InputError, NumericalError, ResourceLimitError

EXIT_USAGE, EXIT_INPUT, EXIT_RESOURCE = 2, 3, 4


def _global_flags(p: argparse.ArgumentParser, top: bool):
    # on subparsers the defaults are suppressed so they do not clobber
    # values given before the subcommand
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(None), help="master seed")
    p.add_argument("--workers", type=int, default=d(None), help="worker processes")
    p.add_argument("--out", default=d(None), help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=d(None))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbcovers", description=__doc__.splitlines()[0])
    _global_flags(p, True)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="adjacency and Hashimoto spectra")
    s.add_argument("graph")
    s.add_argument("--kind", choices=("hashimoto", "adjacency", "both"), default="hashimoto")
    _global_flags(s, False)

    s = sub.add_parser("cover", help="sample a random degree-n cover")
    s.add_argument("graph")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trial", type=int, default=0)
    s.add_argument("--emit", choices=("perm", "graph"), default="perm")
    _global_flags(s, False)

    s = sub.add_parser("fund-order", help="fundamental order of a base graph")
    s.add_argument("graph")
    s.add_argument("--length-cap", type=int, default=None)
    _global_flags(s, False)

    s = sub.add_parser("tangles", help="minimal tangles of order < r")
    s.add_argument("graph")
    s.add_argument("--r", required=True)
    s.add_argument("--strict", action="store_true")
    _global_flags(s, False)

    s = sub.add_parser("certify", help="trace and certified trace of H^k")
    s.add_argument("graph", help="the graph whose walks are counted")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--r", required=True)
    s.add_argument("--base", default=None, help="base graph for the tangle threshold (default: graph)")
    _global_flags(s, False)

    s = sub.add_parser("experiment", help="run an experiment config")
    s.add_argument("config")
    _global_flags(s, False)
    return p


def _read(path):
    from .graph import read_graph
    try:
        return read_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _fraction(text):
    from fractions import Fraction
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a rational number: {text!r}") from None


def _table(header, rows, fmt) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cmd_spectrum(a):
    from .spectra import adjacency_spectrum, hashimoto_spectrum
    g = _read(a.graph)
    rows = []
    if a.kind in ("hashimoto", "both"):
        rows += [(src, repr(re), repr(im)) for src, re, im in hashimoto_spectrum(g).rows()]
    if a.kind in ("adjacency", "both"):
        rows += [(src, repr(re), repr(im)) for src, re, im in adjacency_spectrum(g).rows()]
    return _table(("operator", "real", "imag"), rows, a.format or "csv")


def _cmd_cover(a):
    from .covers import random_cover
    from .graph import format_graph
    if a.n < 1:
        raise InputError("--n must be at least 1")
    c = random_cover(_read(a.graph), a.n, a.seed or 0, a.trial)
    return c.assignment.format() if a.emit == "perm" else format_graph(c.graph)


def _cmd_fund_order(a):
    from .tangles import fundamental_order
    return f"{fundamental_order(_read(a.graph), length_cap=a.length_cap)}\n"


def _cmd_tangles(a):
    from .tangles import minimal_tangles
    base = _read(a.graph)
    found, reports = minimal_tangles(base, _fraction(a.r), strict=a.strict, with_reports=True)
    rows = [tuple(rep.row().values()) for rep in reports]
    header = ("type", "lengths", "order", "rho", "strict", "labelings")
    text = _table(header, rows, a.format or "csv")
    return text if a.format == "json" else text + f"# {len(found)} minimal tangles up to isomorphism\n"


def _cmd_certify(a):
    from .traces import certified_trace, hashimoto_trace
    g = _read(a.graph)
    base = _read(a.base) if a.base else g
    tr = hashimoto_trace(g, a.k)
    ct = certified_trace(g, a.k, _fraction(a.r), base)
    return _table(("k", "r", "trace", "certified_trace"), [(a.k, a.r, tr, ct)], a.format or "csv")


def _cmd_experiment(a):
    from .experiments import load_config, run_experiment
    cfg = load_config(a.config, seed=a.seed, workers=a.workers, format=a.format)
    res = run_experiment(cfg)
    if a.out is None and cfg.out:
        a.out = str(Path(a.config).parent / cfg.out)
    return res.render(cfg.format)


COMMANDS = {"spectrum": _cmd_spectrum, "cover": _cmd_cover, "fund-order": _cmd_fund_order,
            "tangles": _cmd_tangles, "certify": _cmd_certify, "experiment": _cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:   # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        text = COMMANDS[a.command](a)
        if a.out:
            with open(a.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (InputError, GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ResourceLimitError, CertificationError, NumericalError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
