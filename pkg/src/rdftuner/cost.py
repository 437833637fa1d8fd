"""Combined cost of a candidate state: space, rewriting effort, maintenance.

Cardinalities come from exact per-shape triple counts combined under uniform
independence: the estimated size of a connected body is the product of its
atom counts divided, for every variable shared by k atoms, by the largest of
the variable's per-atom domain sizes taken k-1 times.  Domain sizes derive
from stored per-column distinct counts only, so relaxing a constant in one
atom changes exactly one factor of the product, and never downward.  Factor
lists are multiplied in sorted order, which makes the estimate a function of
the body's isomorphism class, not of atom order or variable names.

Operator trees are costed by associating each node with the conjunctive body
it computes: a selection that re-binds a cut constant is costed as the view
it reconstructs, so wrapping a view in compensating operators never changes
the cardinalities seen higher in the tree.  Reading a view costs its row
count; selections cost their input rows; hash joins cost input plus output
rows; projections and renames are free.  These choices make a selection cut
never decrease, and a view fusion never increase, the total cost, which the
search relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .algebra import (
    Expr,
    NatJoin,
    Project,
    Rename,
    Scan,
    Select,
    ThetaJoin,
    UnionOp,
)
from .queries import ConjunctiveQuery, Const, QueryError, Term, TripleAtom, Var
from .states import State
from .stats import WorkloadStatistics


@dataclass(frozen=True)
class CostWeights:
    cs: float = 1.0  # space
    cr: float = 1.0  # rewriting evaluation
    cm: float = 0.5  # maintenance
    c1: float = 1.0  # io component of evaluation
    c2: float = 1.0  # cpu component of evaluation
    f: float = 2.0   # maintenance growth per body atom


@dataclass(frozen=True)
class CostBreakdown:
    vso: float
    rec: float
    vmc: float
    total: float


def _sorted_product(factors: list[float]) -> float:
    out = 1.0
    for x in sorted(factors):
        out *= x
    return out


@dataclass(frozen=True)
class _Node:
    """Walk result for one operator: derived body, columns, cardinality."""

    body: tuple[TripleAtom, ...] | None
    columns: tuple[Term, ...]
    card: float


def _subst_body(body: tuple[TripleAtom, ...], mapping: dict[Var, Term]):
    def sub(t: Term) -> Term:
        return mapping.get(t, t) if isinstance(t, Var) else t

    return tuple(TripleAtom(sub(a.s), sub(a.p), sub(a.o)) for a in body)


def _merge_bodies(left: tuple[TripleAtom, ...], right: tuple[TripleAtom, ...]):
    out = list(left)
    for a in right:
        if a not in out:
            out.append(a)
    return tuple(out)


class Estimator:
    def __init__(self, stats: WorkloadStatistics, weights: CostWeights | None = None):
        self.stats = stats
        self.weights = weights or CostWeights()
        self._row_cache: dict[tuple[TripleAtom, ...], float] = {}
        self._state_cache: dict[int, CostBreakdown] = {}

    # -- cardinality ------------------------------------------------------

    def body_rows(self, body: tuple[TripleAtom, ...]) -> float:
        cached = self._row_cache.get(body)
        if cached is not None:
            return cached
        counts = [float(self.stats.count(a)) for a in body]
        if any(c == 0.0 for c in counts):
            self._row_cache[body] = 0.0
            return 0.0
        atoms_of: dict[Var, list[int]] = {}
        for i, a in enumerate(body):
            for v in dict.fromkeys(a.variables()):
                atoms_of.setdefault(v, []).append(i)
        divisors: list[float] = []
        for v, idxs in atoms_of.items():
            if len(idxs) < 2:
                continue
            dv = 0.0
            for i in idxs:
                positions = [
                    p for p, t in enumerate(body[i].terms) if t == v
                ]
                local = min(self.stats.columns[p].distinct for p in positions)
                dv = max(dv, float(local))
            divisors.extend([max(dv, 1.0)] * (len(idxs) - 1))
        rows = _sorted_product(counts) / _sorted_product(divisors)
        rows = max(rows, 1.0)
        self._row_cache[body] = rows
        return rows

    def view_rows(self, view: ConjunctiveQuery) -> float:
        return self.body_rows(view.body)

    def view_width(self, view: ConjunctiveQuery) -> float:
        """Estimated bytes per stored row."""
        positions_of: dict[Var, set[int]] = {}
        for a in view.body:
            for p, t in enumerate(a.terms):
                if isinstance(t, Var):
                    positions_of.setdefault(t, set()).add(p)
        width = 0.0
        for t in view.head:
            if isinstance(t, Const):
                width += float(len(t.symbol.encode("utf-8")))
            else:
                pos = positions_of.get(t)
                if not pos:
                    raise QueryError(f"head variable {t} of {view.name} unbound")
                width += max(self.stats.columns[p].avg_size for p in pos)
        return width

    # -- operator trees ---------------------------------------------------

    def _walk(self, expr: Expr, views: dict[str, ConjunctiveQuery]) -> tuple[_Node, float, float]:
        """Returns (node, io, cpu) for one subtree."""
        if isinstance(expr, Scan):
            view = views[expr.view]
            rows = self.view_rows(view)
            return _Node(view.body, view.head, rows), rows, 0.0

        if isinstance(expr, Select):
            node, io, cpu = self._walk(expr.child, views)
            if node.body is None:
                raise QueryError("selection over a union is unsupported")
            bound = _subst_body(node.body, {expr.left: expr.right})  # type: ignore[dict-item]
            card = self.body_rows(bound)
            return _Node(bound, node.columns, card), io, cpu + node.card

        if isinstance(expr, Project):
            node, io, cpu = self._walk(expr.child, views)
            return _Node(node.body, expr.columns, node.card), io, cpu

        if isinstance(expr, Rename):
            node, io, cpu = self._walk(expr.child, views)
            mapping: dict[Var, Term] = dict(expr.mapping)
            body = None if node.body is None else _subst_body(node.body, mapping)
            cols = tuple(
                mapping.get(t, t) if isinstance(t, Var) else t for t in node.columns
            )
            return _Node(body, cols, node.card), io, cpu

        if isinstance(expr, NatJoin):
            lnode, lio, lcpu = self._walk(expr.left, views)
            rnode, rio, rcpu = self._walk(expr.right, views)
            if lnode.body is None or rnode.body is None:
                raise QueryError("join over a union is unsupported")
            body = _merge_bodies(lnode.body, rnode.body)
            card = self.body_rows(body)
            shared = {c for c in lnode.columns if c in rnode.columns}
            cols = lnode.columns + tuple(
                c for c in rnode.columns if c not in shared
            )
            cpu = lcpu + rcpu + lnode.card + rnode.card + card
            return _Node(body, cols, card), lio + rio, cpu

        if isinstance(expr, ThetaJoin):
            lnode, lio, lcpu = self._walk(expr.left, views)
            rnode, rio, rcpu = self._walk(expr.right, views)
            if lnode.body is None or rnode.body is None:
                raise QueryError("join over a union is unsupported")
            mapping: dict[Var, Term] = {}
            for a, b in expr.pairs:
                if isinstance(b, Var):
                    mapping[b] = a
            body = _merge_bodies(lnode.body, _subst_body(rnode.body, mapping))
            card = self.body_rows(body)
            cols = lnode.columns + rnode.columns
            cpu = lcpu + rcpu + lnode.card + rnode.card + card
            return _Node(body, cols, card), lio + rio, cpu

        # union: members are independent plans over disjoint scans
        parts = [self._walk(c, views) for c in expr.children]
        card = sum(p[0].card for p in parts)
        io = sum(p[1] for p in parts)
        cpu = sum(p[2] for p in parts) + sum(p[0].card for p in parts)
        cols = parts[0][0].columns
        return _Node(None, cols, card), io, cpu

    def rewriting_cost(self, expr: Expr, views: dict[str, ConjunctiveQuery]) -> float:
        _, io, cpu = self._walk(expr, views)
        return self.weights.c1 * io + self.weights.c2 * cpu

    # -- state cost -------------------------------------------------------

    def state_cost(self, state: State) -> CostBreakdown:
        cached = self._state_cache.get(state.uid)
        if cached is not None:
            return cached
        w = self.weights
        vso = 0.0
        vmc = 0.0
        for v in state.views:
            vso += self.view_rows(v) * self.view_width(v)
            vmc += math.pow(w.f, len(v.body))
        by_name = {v.name: v for v in state.views}
        rec = 0.0
        for r in state.rewritings:
            rec += self.rewriting_cost(r.expr, by_name)
        total = w.cs * vso + w.cr * rec + w.cm * vmc
        out = CostBreakdown(vso, rec, vmc, total)
        self._state_cache[state.uid] = out
        return out

    def total(self, state: State) -> float:
        return self.state_cost(state).total
