"""Command line front end.

Subcommands cover the whole pipeline: workload generation, schema-aware
reformulation, saturation, statistics collection, view selection (tune),
view materialization, and answering workload queries from a tune document.

Exit codes: 0 on success, 2 on invalid input (files, flags, queries,
schema), 3 on unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

from .algebra import _term_back, _term_json, eval_expr, expr_from_json, expr_to_json, format_expr
from .cost import CostWeights, Estimator
from .queries import (
    ConjunctiveQuery,
    QueryError,
    TripleAtom,
    format_query,
    parse_queries,
)
from .reasoning import (
    Schema,
    SchemaError,
    format_schema,
    parse_schema,
    reformulate,
    reformulate_views_for_materialization,
    saturate,
)
from .search import STRATEGIES, SearchConfig, SearchResult, run_search
from .states import MODES, TransitionContext, initial_state
from .stats import WorkloadStatistics, collect_statistics
from .store import Relation, StoreError, TripleStore, dump_triples, load_triples, materialize
from .workload import COMMONALITY, SHAPES, WorkloadSpec, generate_workload, make_synthetic_store

DOCUMENT_FORMAT = "rdftuner/1"


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# file loading


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def load_store_file(path: str) -> TripleStore:
    return load_triples(_read_text(path))


def load_schema_file(path: str) -> Schema:
    return parse_schema(_read_text(path))


def load_workload_file(path: str) -> list[ConjunctiveQuery]:
    queries = parse_queries(_read_text(path))
    if not queries:
        raise QueryError(f"{path}: no queries found")
    return queries


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# mode plumbing shared by tune/stats/materialize/answer


def _require_schema(mode: str, schema: Schema | None) -> None:
    if mode != "plain" and schema is None:
        raise InputError(f"mode {mode!r} needs --schema")


def statistics_for_mode(
    views: list[ConjunctiveQuery] | tuple[ConjunctiveQuery, ...],
    store: TripleStore,
    schema: Schema | None,
    mode: str,
) -> WorkloadStatistics:
    """Statistics matching how views will be materialized in this mode.

    pre-reformulated views query the raw store directly; saturation counts
    against the saturated store; post counts through reformulation, which
    yields the same numbers as saturation.
    """
    views = list(views)
    _require_schema(mode, schema)
    if mode in ("plain", "pre"):
        return collect_statistics(views, store, mode="plain")
    if mode == "saturate":
        assert schema is not None
        return collect_statistics(views, saturate(store, schema), mode="saturate")
    if mode == "post":
        return collect_statistics(views, store, schema=schema, mode="post")
    raise InputError(f"unknown mode {mode!r}")


def view_relations(
    views: list[ConjunctiveQuery] | tuple[ConjunctiveQuery, ...],
    store: TripleStore,
    schema: Schema | None,
    mode: str,
) -> dict[str, Relation]:
    """Materialize every view the way the chosen mode prescribes."""
    views = list(views)
    _require_schema(mode, schema)
    if mode == "post":
        assert schema is not None
        unions = reformulate_views_for_materialization(views, schema)
        return {u.name: materialize(u, store) for u in unions}
    if mode == "saturate":
        assert schema is not None
        store = saturate(store, schema)
    return {v.name: materialize(v, store) for v in views}


# ---------------------------------------------------------------------------
# tune documents


def _cost_json(cost) -> dict:
    return {"vso": cost.vso, "rec": cost.rec, "vmc": cost.vmc, "total": cost.total}


def query_to_json(q: ConjunctiveQuery) -> dict:
    return {
        "name": q.name,
        "head": [_term_json(t) for t in q.head],
        "body": [[_term_json(t) for t in a.terms] for a in q.body],
    }


def query_from_json(d: dict) -> ConjunctiveQuery:
    return ConjunctiveQuery(
        d["name"],
        tuple(_term_back(t) for t in d["head"]),
        tuple(TripleAtom(*(_term_back(t) for t in row)) for row in d["body"]),
    )


def result_document(
    queries: list[ConjunctiveQuery],
    result: SearchResult,
    mode: str,
    schema: Schema | None,
    config: SearchConfig,
    weights: CostWeights,
) -> dict:
    best = result.best
    return {
        "format": DOCUMENT_FORMAT,
        "mode": mode,
        "schema": format_schema(schema).splitlines() if schema is not None else None,
        "strategy": config.strategy,
        "avf": config.avf,
        "stop_tt": config.stop_tt,
        "stop_var": config.stop_var,
        "timeout": config.timeout,
        "max_states": config.max_states,
        "weights": {
            "cs": weights.cs,
            "cr": weights.cr,
            "cm": weights.cm,
            "c1": weights.c1,
            "c2": weights.c2,
            "f": weights.f,
        },
        "queries": [query_to_json(q) for q in queries],
        "views": [query_to_json(v) for v in best.views],
        "rewritings": [
            {
                "query": r.query_name,
                "plan": format_expr(r.expr),
                "expr": expr_to_json(r.expr),
            }
            for r in best.rewritings
        ],
        "initial_cost": _cost_json(result.initial_cost),
        "best_cost": _cost_json(result.best_cost),
        "rcr": result.rcr,
        "elapsed_seconds": result.elapsed,
        "timed_out": result.timed_out,
        "search": {
            "created": result.created,
            "duplicates": result.duplicates,
            "discarded": result.discarded,
            "explored": result.explored,
            "transitions": result.transitions,
            "peak_frontier": result.peak_frontier,
        },
        "trace": [list(row) for row in result.trace],
    }


def load_document(path: str) -> dict:
    doc = json.loads(_read_text(path))
    if not isinstance(doc, dict) or doc.get("format") != DOCUMENT_FORMAT:
        raise InputError(f"{path}: not a {DOCUMENT_FORMAT} tune document")
    return doc


def document_views(doc: dict) -> list[ConjunctiveQuery]:
    return [query_from_json(v) for v in doc["views"]]


def document_schema(doc: dict) -> Schema | None:
    lines = doc.get("schema")
    if lines is None:
        return None
    return parse_schema("\n".join(lines))


def document_relations(doc: dict, store: TripleStore) -> dict[str, Relation]:
    return view_relations(document_views(doc), store, document_schema(doc), doc["mode"])


def write_trace(path: str, result: SearchResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["elapsed_seconds", "best_cost", "rcr"])
        for elapsed, best_cost, rcr in result.trace:
            w.writerow([f"{elapsed:.6f}", repr(best_cost), f"{rcr:.6f}"])


def _relation_tsv(rel: Relation) -> str:
    lines = ["\t".join(rel.column_names())]
    for row in sorted(rel.rows):
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_tune(args: argparse.Namespace) -> int:
    store = load_store_file(args.triples)
    schema = load_schema_file(args.schema) if args.schema else None
    _require_schema(args.mode, schema)
    queries = load_workload_file(args.queries)

    ctx = TransitionContext()
    initial = initial_state(queries, ctx, mode=args.mode, schema=schema)
    stats = statistics_for_mode(initial.views, store, schema, args.mode)
    weights = CostWeights(
        cs=args.cs, cr=args.cr, cm=args.cm, c1=args.c1, c2=args.c2, f=args.f
    )
    estimator = Estimator(stats, weights)
    config = SearchConfig(
        strategy=args.strategy,
        avf=args.avf,
        stop_tt=args.stop_tt,
        stop_var=args.stop_var,
        timeout=args.timeout,
        max_states=args.max_states,
        seed=args.seed,
    )
    result = run_search(initial, estimator, ctx, config)

    doc = result_document(queries, result, args.mode, schema, config, weights)
    text = json.dumps(doc, indent=2)
    if args.out:
        _write_out(text, args.out)
        _print_summary(result)
    else:
        _write_out(text, None)
    if args.trace:
        write_trace(args.trace, result)
    return 0


def _print_summary(result: SearchResult) -> None:
    best = result.best
    flag = " (timed out)" if result.timed_out else ""
    print(
        f"cost {result.initial_cost.total:.6g} -> {result.best_cost.total:.6g}"
        f"  rcr {result.rcr:.4f}{flag}"
    )
    print(
        f"states created={result.created} duplicates={result.duplicates}"
        f" explored={result.explored} transitions={result.transitions}"
        f" peak_frontier={result.peak_frontier}"
        f" elapsed={result.elapsed:.2f}s"
    )
    print("views:")
    for v in best.views:
        print(f"  {format_query(v)}")
    print("rewritings:")
    for r in best.rewritings:
        print(f"  {r.query_name}: {format_expr(r.expr)}")


def cmd_reformulate(args: argparse.Namespace) -> int:
    schema = load_schema_file(args.schema)
    queries = load_workload_file(args.queries)
    pieces = []
    for q in queries:
        pieces.append(format_query(reformulate(q, schema)))
    _write_out("\n".join(pieces), args.out)
    return 0


def cmd_saturate(args: argparse.Namespace) -> int:
    store = load_store_file(args.triples)
    schema = load_schema_file(args.schema)
    sat = saturate(store, schema, include_schema_triples=args.include_schema_triples)
    _write_out(dump_triples(sat), args.out)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    store = load_store_file(args.triples)
    schema = load_schema_file(args.schema) if args.schema else None
    queries = load_workload_file(args.queries)
    ctx = TransitionContext()
    initial = initial_state(queries, ctx, mode=args.mode, schema=schema)
    stats = statistics_for_mode(initial.views, store, schema, args.mode)
    _write_out(stats.dumps(), args.out)
    return 0


def cmd_gen_workload(args: argparse.Namespace) -> int:
    if args.triples:
        store = load_store_file(args.triples)
    else:
        store = make_synthetic_store(args.store_size, seed=args.store_seed)
    spec = WorkloadSpec(
        n_queries=args.n_queries,
        atoms_per_query=args.atoms,
        shape=args.shape,
        commonality=args.commonality,
        n_constants=args.constants,
        seed=args.seed,
    )
    queries = generate_workload(spec, store)
    _write_out("\n".join(format_query(q) for q in queries), args.out)
    if args.triples_out:
        _write_out(dump_triples(store), args.triples_out)
    return 0


def cmd_materialize(args: argparse.Namespace) -> int:
    doc = load_document(args.plan)
    store = load_store_file(args.triples)
    relations = document_relations(doc, store)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for v in document_views(doc):
        rel = relations[v.name]
        (out_dir / f"{v.name}.tsv").write_text(_relation_tsv(rel), encoding="utf-8")
        print(f"{v.name}: {len(rel.rows)} rows -> {out_dir / (v.name + '.tsv')}")
    return 0


def cmd_answer(args: argparse.Namespace) -> int:
    doc = load_document(args.plan)
    store = load_store_file(args.triples)
    wanted = [r for r in doc["rewritings"] if r["query"] == args.query]
    if not wanted:
        known = ", ".join(r["query"] for r in doc["rewritings"])
        raise InputError(f"no rewriting for query {args.query!r} (have: {known})")
    relations = document_relations(doc, store)
    rel = eval_expr(expr_from_json(wanted[0]["expr"]), relations)
    _write_out(_relation_tsv(rel), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdftuner",
        description="Materialized view selection for triple pattern workloads.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_mode(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--mode",
            choices=MODES,
            default="plain",
            help="how implicit triples are handled (default: plain, explicit only)",
        )

    p = sub.add_parser("tune", help="search for a good view set and rewritings")
    p.add_argument("--triples", required=True, help="triple file, one 's p o' per line")
    p.add_argument("--queries", required=True, help="workload query file")
    p.add_argument("--schema", help="schema statement file")
    add_mode(p)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="dfs")
    p.add_argument("--avf", action="store_true", help="aggressive view fusion")
    p.add_argument("--stop-tt", action="store_true",
                   help="stop expanding states containing a triple-table view")
    p.add_argument("--stop-var", action="store_true",
                   help="stop expanding states whose views hold no constants")
    p.add_argument("--timeout", type=float, help="search budget in seconds")
    p.add_argument("--max-states", type=int,
                   help="keep at most this many frontier states (best first)")
    p.add_argument("--cs", type=float, default=1.0, help="space cost weight")
    p.add_argument("--cr", type=float, default=1.0, help="rewriting cost weight")
    p.add_argument("--cm", type=float, default=0.5, help="maintenance cost weight")
    p.add_argument("--c1", type=float, default=1.0, help="io weight inside rewriting cost")
    p.add_argument("--c2", type=float, default=1.0, help="cpu weight inside rewriting cost")
    p.add_argument("--f", type=float, default=2.0, help="maintenance base per view atom")
    p.add_argument("--seed", type=int, help="search tie-break seed")
    p.add_argument("--out", help="write the tune document here instead of stdout")
    p.add_argument("--trace", help="write an improvement trace CSV here")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("reformulate", help="schema-aware union rewriting of queries")
    p.add_argument("--queries", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reformulate)

    p = sub.add_parser("saturate", help="add all schema-entailed triples")
    p.add_argument("--triples", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--include-schema-triples", action="store_true",
                   help="also emit the schema statements themselves as triples")
    p.add_argument("--out")
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("stats", help="collect workload statistics as JSON")
    p.add_argument("--triples", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--schema")
    add_mode(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gen-workload", help="generate a synthetic workload")
    p.add_argument("--triples", help="sample against this store instead of a synthetic one")
    p.add_argument("--store-size", type=int, default=1000,
                   help="synthetic store size when --triples is absent")
    p.add_argument("--store-seed", type=int, default=0)
    p.add_argument("--n-queries", type=int, default=5)
    p.add_argument("--atoms", type=int, default=3, help="atoms per query")
    p.add_argument("--shape", choices=SHAPES, default="star")
    p.add_argument("--commonality", choices=COMMONALITY, default="medium")
    p.add_argument("--constants", type=int, default=1,
                   help="constants pinned per query beyond properties")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write queries here instead of stdout")
    p.add_argument("--triples-out", help="also write the store used for sampling")
    p.set_defaults(func=cmd_gen_workload)

    p = sub.add_parser("materialize", help="evaluate the views of a tune document")
    p.add_argument("--plan", required=True, help="tune document (JSON)")
    p.add_argument("--triples", required=True)
    p.add_argument("--out-dir", default="views", help="directory for one TSV per view")
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("answer", help="answer a workload query from materialized views")
    p.add_argument("--plan", required=True, help="tune document (JSON)")
    p.add_argument("--triples", required=True)
    p.add_argument("--query", required=True, help="workload query name")
    p.add_argument("--out")
    p.set_defaults(func=cmd_answer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QueryError, SchemaError, StoreError, InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
