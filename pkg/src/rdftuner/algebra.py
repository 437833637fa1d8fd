"""Relational algebra trees over view symbols: the rewriting language.

A rewriting is an operator tree whose leaves scan materialized views and whose
output columns are exactly the head terms of the workload query it answers.
Trees are immutable; transitions rewrite them by substituting expressions for
scan leaves (replace_scans).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .queries import Const, QueryError, Term, Var
from .store import Relation


@dataclass(frozen=True, slots=True)
class Scan:
    view: str


@dataclass(frozen=True, slots=True)
class Select:
    child: "Expr"
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Project:
    child: "Expr"
    columns: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class NatJoin:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class ThetaJoin:
    left: "Expr"
    right: "Expr"
    pairs: tuple[tuple[Term, Term], ...]


@dataclass(frozen=True, slots=True)
class Rename:
    child: "Expr"
    mapping: tuple[tuple[Var, Var], ...]


@dataclass(frozen=True, slots=True)
class UnionOp:
    children: tuple["Expr", ...]


Expr = Union[Scan, Select, Project, NatJoin, ThetaJoin, Rename, UnionOp]


def scan_views(expr: Expr) -> Iterator[str]:
    """View names at the leaves, one per scan occurrence."""
    if isinstance(expr, Scan):
        yield expr.view
    elif isinstance(expr, (Select, Project, Rename)):
        yield from scan_views(expr.child)
    elif isinstance(expr, (NatJoin, ThetaJoin)):
        yield from scan_views(expr.left)
        yield from scan_views(expr.right)
    else:
        for c in expr.children:
            yield from scan_views(c)


def replace_scans(expr: Expr, mapping: dict[str, Expr]) -> Expr:
    if isinstance(expr, Scan):
        return mapping.get(expr.view, expr)
    if isinstance(expr, Select):
        return Select(replace_scans(expr.child, mapping), expr.left, expr.right)
    if isinstance(expr, Project):
        return Project(replace_scans(expr.child, mapping), expr.columns)
    if isinstance(expr, NatJoin):
        return NatJoin(replace_scans(expr.left, mapping), replace_scans(expr.right, mapping))
    if isinstance(expr, ThetaJoin):
        return ThetaJoin(
            replace_scans(expr.left, mapping),
            replace_scans(expr.right, mapping),
            expr.pairs,
        )
    if isinstance(expr, Rename):
        return Rename(replace_scans(expr.child, mapping), expr.mapping)
    return UnionOp(tuple(replace_scans(c, mapping) for c in expr.children))


# ---------------------------------------------------------------------------
# evaluation over materialized relations


def _col_index(columns: tuple[Term, ...], t: Term) -> int:
    for i, c in enumerate(columns):
        if c == t:
            return i
    raise QueryError(f"column {t} not found among {columns}")


def eval_expr(expr: Expr, relations: dict[str, Relation]) -> Relation:
    """Set-semantics evaluation; column labels are the views' head terms."""
    if isinstance(expr, Scan):
        try:
            return relations[expr.view]
        except KeyError:
            raise QueryError(f"no materialized relation for view {expr.view!r}")

    if isinstance(expr, Select):
        child = eval_expr(expr.child, relations)
        li = _col_index(child.columns, expr.left)
        if isinstance(expr.right, Var) or expr.right in child.columns:
            ri = _col_index(child.columns, expr.right)
            rows = frozenset(r for r in child.rows if r[li] == r[ri])
        else:
            value = expr.right.symbol
            rows = frozenset(r for r in child.rows if r[li] == value)
        return Relation(child.name, child.columns, rows)

    if isinstance(expr, Project):
        child = eval_expr(expr.child, relations)
        idx: list[int | None] = []
        consts: list[str] = []
        for t in expr.columns:
            if t in child.columns:
                idx.append(_col_index(child.columns, t))
                consts.append("")
            elif isinstance(t, Const):
                idx.append(None)
                consts.append(t.symbol)
            else:
                raise QueryError(f"projection on unbound variable {t}")
        rows = frozenset(
            tuple(r[i] if i is not None else consts[k] for k, i in enumerate(idx))
            for r in child.rows
        )
        return Relation(child.name, expr.columns, rows)

    if isinstance(expr, NatJoin):
        left = eval_expr(expr.left, relations)
        right = eval_expr(expr.right, relations)
        shared = [c for c in left.columns if c in right.columns]
        li = [_col_index(left.columns, c) for c in shared]
        ri = [_col_index(right.columns, c) for c in shared]
        rest = [i for i, c in enumerate(right.columns) if c not in shared]
        table: dict[tuple[str, ...], list[tuple[str, ...]]] = {}
        for r in right.rows:
            table.setdefault(tuple(r[i] for i in ri), []).append(r)
        out = set()
        for l in left.rows:
            for r in table.get(tuple(l[i] for i in li), ()):
                out.add(l + tuple(r[i] for i in rest))
        columns = left.columns + tuple(right.columns[i] for i in rest)
        return Relation(left.name, columns, frozenset(out))

    if isinstance(expr, ThetaJoin):
        left = eval_expr(expr.left, relations)
        right = eval_expr(expr.right, relations)
        li = [_col_index(left.columns, a) for a, _ in expr.pairs]
        ri = [_col_index(right.columns, b) for _, b in expr.pairs]
        table = {}
        for r in right.rows:
            table.setdefault(tuple(r[i] for i in ri), []).append(r)
        out = set()
        for l in left.rows:
            for r in table.get(tuple(l[i] for i in li), ()):
                out.add(l + r)
        return Relation(left.name, left.columns + right.columns, frozenset(out))

    if isinstance(expr, Rename):
        child = eval_expr(expr.child, relations)
        m = dict(expr.mapping)
        columns = tuple(m.get(c, c) if isinstance(c, Var) else c for c in child.columns)
        return Relation(child.name, columns, child.rows)

    parts = [eval_expr(c, relations) for c in expr.children]
    arities = {len(p.columns) for p in parts}
    if len(arities) != 1:
        raise QueryError("union members disagree on arity")
    rows = frozenset().union(*(p.rows for p in parts))
    return Relation(parts[0].name, parts[0].columns, rows)


# ---------------------------------------------------------------------------
# serialization


def _term_json(t: Term) -> dict:
    return {"v": t.name} if isinstance(t, Var) else {"c": t.symbol}


def _term_back(d: dict) -> Term:
    if "v" in d:
        return Var(d["v"])
    return Const(d["c"])


def expr_to_json(expr: Expr) -> dict:
    if isinstance(expr, Scan):
        return {"op": "scan", "view": expr.view}
    if isinstance(expr, Select):
        return {
            "op": "select",
            "left": _term_json(expr.left),
            "right": _term_json(expr.right),
            "child": expr_to_json(expr.child),
        }
    if isinstance(expr, Project):
        return {
            "op": "project",
            "columns": [_term_json(t) for t in expr.columns],
            "child": expr_to_json(expr.child),
        }
    if isinstance(expr, NatJoin):
        return {"op": "natjoin", "left": expr_to_json(expr.left), "right": expr_to_json(expr.right)}
    if isinstance(expr, ThetaJoin):
        return {
            "op": "thetajoin",
            "left": expr_to_json(expr.left),
            "right": expr_to_json(expr.right),
            "pairs": [[_term_json(a), _term_json(b)] for a, b in expr.pairs],
        }
    if isinstance(expr, Rename):
        return {
            "op": "rename",
            "mapping": [[a.name, b.name] for a, b in expr.mapping],
            "child": expr_to_json(expr.child),
        }
    return {"op": "union", "children": [expr_to_json(c) for c in expr.children]}


def expr_from_json(d: dict) -> Expr:
    op = d["op"]
    if op == "scan":
        return Scan(d["view"])
    if op == "select":
        return Select(expr_from_json(d["child"]), _term_back(d["left"]), _term_back(d["right"]))
    if op == "project":
        return Project(expr_from_json(d["child"]), tuple(_term_back(t) for t in d["columns"]))
    if op == "natjoin":
        return NatJoin(expr_from_json(d["left"]), expr_from_json(d["right"]))
    if op == "thetajoin":
        return ThetaJoin(
            expr_from_json(d["left"]),
            expr_from_json(d["right"]),
            tuple((_term_back(a), _term_back(b)) for a, b in d["pairs"]),
        )
    if op == "rename":
        return Rename(
            expr_from_json(d["child"]),
            tuple((Var(a), Var(b)) for a, b in d["mapping"]),
        )
    if op == "union":
        return UnionOp(tuple(expr_from_json(c) for c in d["children"]))
    raise QueryError(f"unknown operator {op!r}")


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Scan):
        return expr.view
    if isinstance(expr, Select):
        return f"select[{expr.left}={expr.right}]({format_expr(expr.child)})"
    if isinstance(expr, Project):
        cols = ",".join(str(t) for t in expr.columns)
        return f"project[{cols}]({format_expr(expr.child)})"
    if isinstance(expr, NatJoin):
        return f"({format_expr(expr.left)} join {format_expr(expr.right)})"
    if isinstance(expr, ThetaJoin):
        cond = " and ".join(f"{a}={b}" for a, b in expr.pairs)
        return f"({format_expr(expr.left)} join[{cond}] {format_expr(expr.right)})"
    if isinstance(expr, Rename):
        ren = ",".join(f"{a}->{b}" for a, b in expr.mapping)
        return f"rename[{ren}]({format_expr(expr.child)})"
    return " union ".join(format_expr(c) for c in expr.children)
