"""Command line front end: ``ozmaps corpus gen | defect | verify | decompose | zeta-table``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import bounds as B
from . import decompose as D
from . import genlab as G
from . import suites as S
from .defect import jordan_defect, oz_defect, sa_defect

REPORT_VERSION = 1
CONFIG_KEYS = {"command", "corpus", "seed", "eps", "K", "gamma", "theta", "budget", "samples", "output",
               "format", "workers", "suite", "n_perturbed", "n_exact", "grid", "tail_cutoff"}


class UsageError(Exception):
    pass


def _flatten(parent: str, rep: B.CheckReport, suite: str, label: str, out: list):
    iid = f"{parent}>{rep.inequality_id}" if parent else rep.inequality_id
    out.append({"suite": suite, "label": label, "inequality_id": iid, "lhs": rep.lhs, "rhs": rep.rhs,
                "margin": rep.margin, "pass": rep.passed})
    for d in rep.details:
        _flatten(iid, d, suite, label, out)


def render(command: str, rows: list, fmt: str, extra: dict | None = None) -> str:
    """Serialize ``(suite, label, report)`` rows; output depends only on the rows."""
    failed = sum(not r.passed for _, _, r in rows)
    if fmt == "csv":
        flat = []
        for suite, label, rep in rows:
            _flatten("", rep, suite, label, flat)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["suite", "label", "inequality_id", "lhs", "rhs", "margin", "pass"],
                           lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow({**r, "lhs": repr(float(r["lhs"])), "rhs": repr(float(r["rhs"])),
                        "margin": repr(float(r["margin"]))})
        return buf.getvalue()
    doc = {"report_version": REPORT_VERSION, "command": command,
           "summary": {"total": len(rows), "failed": failed},
           "reports": [{"suite": s, "label": lab, **rep.to_dict()} for s, lab, rep in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _workers(v) -> int:
    if v is not None:
        return max(1, int(v))
    return max(1, int(os.environ.get("OZMAPS_WORKERS", "1")))


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as ex:
        raise UsageError(f"cannot read config {path}: {ex}") from ex
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(cfg) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _corpus(args) -> G.Corpus:
    if args.corpus:
        return G.load_corpus(args.corpus)
    return G.standard_corpus(args.seed, n_perturbed=args.n_perturbed, n_exact=args.n_exact)


def parse_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise UsageError("grid must look like a:b or a:b:n")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2]) if len(parts) == 3 else 19
    except ValueError as ex:
        raise UsageError(f"bad grid {spec!r}") from ex
    if not 0 < lo <= hi or n < 1:
        raise UsageError("grid needs 0 < a <= b and n >= 1")
    return np.geomspace(lo, hi, n)


# ---------------------------------------------------------------------------
# commands

def cmd_corpus_gen(args) -> int:
    c = G.standard_corpus(args.seed, n_perturbed=args.n_perturbed, n_exact=args.n_exact)
    if not args.output:
        raise UsageError("corpus gen needs --output")
    G.save_corpus(c, args.output)
    sys.stderr.write(f"wrote {len(c)} entries to {args.output}\n")
    return 0


def cmd_defect(args) -> int:
    corpus = _corpus(args)

    def one(ie):
        i, e = ie
        oz = oz_defect(e.map, budget=args.budget, seed=args.seed + i)
        sa = sa_defect(e.map, budget=args.budget, seed=args.seed + i)
        jd = jordan_defect(e.map, budget=args.budget, seed=args.seed + i)
        subs = [B.make_report("defect/order-zero", oz.value, S.entry_eps(e), strategy=oz.strategy)]
        sa_rhs = e.sa_eps if e.sa_eps else S.EXACT_EPS
        subs.append(B.make_report("defect/self-adjoint", sa.value, sa_rhs))
        rep = B.combine("defect", subs, jordan=jd.value, tags=",".join(e.tags))
        return ("defect", f"entry{i}", rep)

    rows = S._pmap(one, list(enumerate(corpus.entries)), _workers(args.workers))
    _emit(render("defect", rows, args.format), args.output)
    return 2 if any(not r.passed for _, _, r in rows) else 0


def cmd_verify(args) -> int:
    corpus = _corpus(args)
    cfg = S.SuiteConfig(seed=args.seed, K=args.K, theta=args.theta, gamma=args.gamma, budget=args.budget,
                        samples=args.samples, workers=_workers(args.workers))
    names = S.SUITES if args.suite == "all" else (args.suite,)
    rows = []
    for name in names:
        rows.extend(S.run_suite(name, corpus, cfg))
    _emit(render(f"verify {args.suite}", rows, args.format), args.output)
    return 2 if any(not r.passed for _, _, r in rows) else 0


def cmd_decompose(args) -> int:
    corpus = _corpus(args)
    K = args.K if args.K is not None else S.default_K(0)

    def one(ie):
        i, e = ie
        psi, eps = S.sa_entry(e)
        if args.eps is not None:
            eps = args.eps
        pos = S.is_positive_entry(e)
        try:
            res = D.decompose(psi, eps, K, pos, args.theta, gamma=args.gamma, samples=args.samples,
                              seed=args.seed + i, budget=args.budget)
        except D.BetaExhausted as ex:
            return ("decompose", f"entry{i}", B.make_report("decompose/beta", 1.0, 0.0, error=str(ex)))
        rep = D.verify_decomposition(res, psi, eps, K, pos, budget=args.budget, seed=args.seed + i)
        rep.context.update({"beta": res.beta, "rank_p_gamma": int(round(sum(np.trace(b).real
                                                                             for b in res.p_gamma.blocks)))})
        return ("decompose", f"entry{i}", rep)

    rows = S._pmap(one, list(enumerate(corpus.entries)), _workers(args.workers))
    _emit(render("decompose", rows, args.format, {"K": K}), args.output)
    return 2 if any(not r.passed for _, _, r in rows) else 0


def cmd_zeta_table(args) -> int:
    params = B.ZetaParams(tail_cutoff=args.tail_cutoff)
    grid = parse_grid(args.grid)
    rows = []
    for s in map(float, grid):
        z = B.zeta(s, params)
        rows.append((s, z, z / s ** (1 / 16)))
    if (args.format or "csv") == "json":
        text = json.dumps({"report_version": REPORT_VERSION, "command": "zeta-table",
                           "rows": [{"s": s, "zeta": z, "ratio": r} for s, z, r in rows]}, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "zeta", "ratio"])
        for s, z, r in rows:
            w.writerow([repr(s), repr(z), repr(r)])
        text = buf.getvalue()
    _emit(text, args.output)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--corpus", help="corpus JSON file (default: regenerate the standard corpus)")
    common.add_argument("--n-perturbed", dest="n_perturbed", type=int, default=200)
    common.add_argument("--n-exact", dest="n_exact", type=int, default=24)
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="json (default) or csv")
    common.add_argument("--workers", type=int, default=None, help="thread count (env OZMAPS_WORKERS)")
    common.add_argument("--budget", type=int, default=6)
    common.add_argument("--samples", type=int, default=200)
    common.add_argument("--K", type=float, default=None, help="hereditary constant (default: estimated)")
    common.add_argument("--theta", type=float, default=None)
    common.add_argument("--gamma", type=float, default=D.GAMMA_DEFAULT)
    common.add_argument("--eps", type=float, default=None)

    p = argparse.ArgumentParser(prog="ozmaps", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    corpus = sub.add_parser("corpus", help="corpus operations")
    csub = corpus.add_subparsers(dest="action", required=True)
    csub.add_parser("gen", parents=[common], help="generate and save a corpus").set_defaults(func=cmd_corpus_gen)
    sub.add_parser("defect", parents=[common], help="measure defects of corpus maps").set_defaults(func=cmd_defect)
    v = sub.add_parser("verify", parents=[common], help="run inequality suites")
    v.add_argument("--suite", choices=S.SUITES + ("all",), default="all")
    v.set_defaults(func=cmd_verify)
    sub.add_parser("decompose", parents=[common], help="decompose corpus maps").set_defaults(func=cmd_decompose)
    z = sub.add_parser("zeta-table", parents=[common], help="tabulate the error function")
    z.add_argument("--grid", default="1e-12:1e-3")
    z.add_argument("--tail-cutoff", dest="tail_cutoff", type=int, default=10 ** 6)
    z.set_defaults(func=cmd_zeta_table)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return 0 if ex.code == 0 else 1
    try:
        cfg = _load_config(getattr(args, "config", None))
        # config supplies defaults; explicit flags win
        explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        for k, val in cfg.items():
            if k == "command":
                continue
            if k not in explicit and hasattr(args, k):
                setattr(args, k, val)
        if args.format is None and args.func is not cmd_zeta_table:
            args.format = "json"
        return args.func(args)
    except (UsageError, G.FormatError, B.DomainError) as ex:
        sys.stderr.write(f"ozmaps: error: {ex}\n")
        return 1
    except FileNotFoundError as ex:
        sys.stderr.write(f"ozmaps: error: {ex}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
