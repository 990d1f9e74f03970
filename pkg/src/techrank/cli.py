"""Command line interface: ``techrank {rank,compare,sweep,gen,filter}``.

Exit codes: 0 ok / converged, 1 input error, 2 degenerate graph,
3 iteration cap reached, 4 rankings cannot be correlated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .engine import ROUNDOFF_TIE, Exponents, RunConfig, Status, run_to_convergence, sweep
from .errors import EmptyLayer, InsufficientOverlap, TechRankError, ZeroVariance
from .graph import BipartiteGraph, graph_from_edges, prune
from .ingest import (
    format_edges,
    format_ranking,
    has_weight_column,
    keyword_filter,
    load_baseline,
    load_docs,
    load_edges,
    load_keywords,
    load_ranking,
)
from .metrics import spearman, weights_to_ranking
from .synth import Block, FixedDegree, GenSpec, PlantedBlocks, UniformRandom, generate

logger = logging.getLogger("techrank")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2
EXIT_MAX_ITER = 3
EXIT_OVERLAP = 4

TRACE_HEADER = ("iteration", "delta_c", "delta_t")
SWEEP_HEADER = ("alpha", "beta", "status", "iterations", "top_company", "top_technology")


class InputError(Exception):
    pass


def _fmt_param(x: float) -> str:
    # grid values like 0.1*3 print as 0.3, and -0.0 as 0.0
    return repr(round(float(x), 12) + 0.0)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive), a comma list, or a single number."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise InputError(f"bad grid {text!r}: need start <= stop and step > 0")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(n)]
        else:
            values = [float(p) for p in text.split(",")]
    except ValueError:
        raise InputError(f"bad grid {text!r}; expected start:stop:step or a comma list") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise InputError(f"bad grid {text!r}")
    return values


def parse_block(text: str) -> Block:
    """``c0:c1,t0:t1,p_in,p_out`` with half-open index ranges."""
    try:
        c_range, t_range, p_in, p_out = text.split(",")
        c0, c1 = (int(x) for x in c_range.split(":"))
        t0, t1 = (int(x) for x in t_range.split(":"))
        return Block(c0, c1, t0, t1, float(p_in), float(p_out))
    except ValueError:
        raise InputError(f"bad block {text!r}; expected c0:c1,t0:t1,p_in,p_out") from None


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8", newline="")


def _csv_text(header, rows) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _load_graph(args) -> tuple[BipartiteGraph, int, int]:
    records = load_edges(args.edges, getattr(args, "format", None))
    if not records:
        raise EmptyLayer(f"{args.edges}: no edges")
    g, duplicates = graph_from_edges((r.company_label, r.technology_label) for r in records)
    g, removed = prune(g)
    if removed:
        logger.warning("pruned %d isolated node(s)", len(removed))
    return g, duplicates, len(removed)


def _run_config(args, alpha=None, beta=None) -> RunConfig:
    try:
        return RunConfig(
            Exponents(args.alpha if alpha is None else alpha, args.beta if beta is None else beta),
            tolerance=args.tol,
            rank_stability_window=args.window,
            max_iterations=args.max_iter,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _rankings(g: BipartiteGraph, state):
    companies = weights_to_ranking(zip(g.company_labels, state.w_c.tolist()), rtol=ROUNDOFF_TIE)
    technologies = weights_to_ranking(zip(g.technology_labels, state.w_t.tolist()), rtol=ROUNDOFF_TIE)
    return companies, technologies


def _ranking_json(ranking):
    return [{"entity": e.label, "weight": e.weight, "rank": e.rank} for e in ranking]


def cmd_rank(args) -> int:
    g, duplicates, pruned = _load_graph(args)
    cfg = _run_config(args)
    state, trace, status = run_to_convergence(g, cfg)
    companies, technologies = _rankings(g, state)
    last = trace[-1]
    report = {
        "config": {
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "tolerance": cfg.tolerance,
            "rank_stability_window": cfg.rank_stability_window,
            "max_iterations": cfg.max_iterations,
        },
        "status": str(status),
        "iterations": len(trace),
        "final_delta_c": last.delta_c,
        "final_delta_t": last.delta_t,
        "companies_settled_at": trace.settling_iteration("c", cfg.tolerance),
        "technologies_settled_at": trace.settling_iteration("t", cfg.tolerance),
        "n_companies": g.n_companies,
        "n_technologies": g.n_technologies,
        "n_edges": g.n_edges,
        "duplicate_edges": duplicates,
        "pruned_nodes": pruned,
        "companies": _ranking_json(companies),
        "technologies": _ranking_json(technologies),
    }
    report_text = json.dumps(report, indent=2) + "\n"

    if args.out:
        out = Path(args.out)
        _write(out / "report.json", report_text)
        _write(out / "companies.csv", format_ranking(companies))
        _write(out / "technologies.csv", format_ranking(technologies))
    if args.trace:
        rows = [(r.iteration, repr(r.delta_c), repr(r.delta_t)) for r in trace]
        _write(args.trace, _csv_text(TRACE_HEADER, rows))

    if args.json:
        sys.stdout.write(report_text)
    elif not args.quiet:
        print(
            f"{status} after {len(trace)} iterations "
            f"({g.n_companies} companies, {g.n_technologies} technologies, {g.n_edges} edges)"
        )
        for title, ranking in (("companies", companies), ("technologies", technologies)):
            print(f"top {title}:")
            for e in list(ranking)[: args.top]:
                print(f"  {_fmt_rank(e.rank):>6}  {e.weight:.6g}  {e.label}")
    return EXIT_OK if status is Status.CONVERGED else EXIT_MAX_ITER


def _fmt_rank(rank: float) -> str:
    return str(int(rank)) if rank.is_integer() else f"{rank:g}"


def _load_any_ranking(path):
    if has_weight_column(path):
        return load_ranking(path)
    return load_baseline(path).to_ranking()


def cmd_compare(args) -> int:
    a = _load_any_ranking(args.ranking)
    b = _load_any_ranking(args.baseline)
    try:
        corr = spearman(a, b)
    except InsufficientOverlap as exc:
        _report_failure(args, "InsufficientOverlap", exc)
        return EXIT_OVERLAP
    except ZeroVariance as exc:
        _report_failure(args, "ZeroVariance", exc)
        return EXIT_OVERLAP
    if args.json:
        print(json.dumps({
            "status": "ok",
            "rho": corr.rho,
            "n_common": corr.n_common,
            "only_ranking": corr.only_a,
            "only_baseline": corr.only_b,
        }))
    else:
        print(f"rho={corr.rho:.3f} n_common={corr.n_common} "
              f"excluded_ranking={corr.only_a} excluded_baseline={corr.only_b}")
    return EXIT_OK


def _report_failure(args, status: str, exc: Exception):
    if args.json:
        print(json.dumps({"status": status, "rho": None, "message": str(exc)}))
    else:
        print(f"error: {status}: {exc}", file=sys.stderr)


def cmd_sweep(args) -> int:
    g, _, _ = _load_graph(args)
    alphas = parse_grid(args.alpha_grid)
    betas = parse_grid(args.beta_grid)
    cfg = _run_config(args, alpha=0.0, beta=0.0)
    result = sweep(g, alphas, betas, cfg, workers=args.workers)
    rows = []
    for cell in result:
        if cell.state is None:
            rows.append((_fmt_param(cell.alpha), _fmt_param(cell.beta), str(cell.status), "", "", ""))
            logger.warning("alpha=%s beta=%s failed: %s", cell.alpha, cell.beta, cell.error)
            continue
        companies, technologies = _rankings(g, cell.state)
        rows.append((
            _fmt_param(cell.alpha),
            _fmt_param(cell.beta),
            str(cell.status),
            cell.iterations,
            ";".join(companies.top()),
            ";".join(technologies.top()),
        ))
    text = _csv_text(SWEEP_HEADER, rows)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if all(cell.status is Status.FAILED for cell in result):
        return EXIT_INPUT
    return EXIT_OK


def cmd_gen(args) -> int:
    chosen = [x is not None for x in (args.p, args.degree, args.block)]
    if sum(chosen) != 1:
        raise InputError("give exactly one of --p, --degree or --block")
    if args.p is not None:
        model = UniformRandom(args.p)
    elif args.degree is not None:
        model = FixedDegree(args.degree)
    else:
        model = PlantedBlocks(tuple(parse_block(b) for b in args.block))
    try:
        spec = GenSpec(args.companies, args.technologies, model, args.seed)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    g = generate(spec)
    if g.n_edges == 0:
        logger.warning("generated graph has no edges")
    text = format_edges(g)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_filter(args) -> int:
    docs = load_docs(args.docs)
    keywords = load_keywords(args.keywords)
    if not keywords:
        raise InputError(f"{args.keywords}: no keywords")
    selected = sorted(keyword_filter(docs, keywords, args.min_hits, args.case_sensitive))
    if args.json:
        print(json.dumps(selected))
    else:
        for label in selected:
            print(label)
    if not args.quiet:
        print(f"{len(selected)} of {len(docs)} companies selected", file=sys.stderr)
    return EXIT_OK


def _add_run_flags(p):
    p.add_argument("--tol", type=float, default=1e-9, help="max-abs weight change to stop (default 1e-9)")
    p.add_argument("--window", type=int, default=10,
                   help="iterations the rank order must hold before stopping (default 10)")
    p.add_argument("--max-iter", type=int, default=10_000, help="iteration cap (default 10000)")
    p.add_argument("--format", choices=("csv", "jsonl"), help="edge file format (default: by suffix)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output on stdout")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress summaries and warnings")

    parser = argparse.ArgumentParser(prog="techrank", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[common], help="rank companies and technologies")
    p.add_argument("edges", help="edge list (CSV or JSONL)")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    _add_run_flags(p)
    p.add_argument("--out", help="directory for report.json, companies.csv, technologies.csv")
    p.add_argument("--trace", help="write the per-iteration convergence trace CSV here")
    p.add_argument("--top", type=int, default=10, help="rows shown in the summary")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("compare", parents=[common], help="Spearman's rho between two rankings")
    p.add_argument("ranking", help="ranking CSV (entity,weight,rank) or baseline CSV")
    p.add_argument("baseline", help="baseline CSV (entity,rank)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="rank over an (alpha, beta) grid")
    p.add_argument("edges")
    p.add_argument("--alpha-grid", required=True, help="start:stop:step or comma list")
    p.add_argument("--beta-grid", required=True, help="start:stop:step or comma list")
    _add_run_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="sweep CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", parents=[common], help="generate a seeded random edge list")
    p.add_argument("--companies", type=int, required=True)
    p.add_argument("--technologies", type=int, required=True)
    p.add_argument("--p", type=float, help="uniform edge probability")
    p.add_argument("--degree", type=int, help="fixed number of technologies per company")
    p.add_argument("--block", action="append", help="planted block c0:c1,t0:t1,p_in,p_out (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="edge CSV path (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("filter", parents=[common], help="select companies by description keywords")
    p.add_argument("docs", help="JSONL with company and description fields")
    p.add_argument("keywords", help="file with one keyword per line")
    p.add_argument("--min-hits", type=int, default=2, help="distinct keywords required (default 2)")
    p.add_argument("--case-sensitive", action="store_true")
    p.set_defaults(func=cmd_filter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.json = getattr(args, "json", False)
    args.quiet = getattr(args, "quiet", False)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="techrank: %(levelname)s: %(message)s",
        force=True,
    )
    try:
        return args.func(args)
    except EmptyLayer as exc:
        print(f"error: degenerate graph: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (TechRankError, InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
