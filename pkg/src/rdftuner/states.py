"""Search states and the four state transitions.

A state pairs a set of candidate views with one complete rewriting per
workload query.  Transitions refine the views and patch every rewriting that
mentions the replaced view symbol:

  SC  cut a selection edge: a constant becomes a fresh head variable, the
      rewriting compensates with a selection.
  JC  cut a join edge: one occurrence of a joined variable becomes a fresh
      head variable; the view either survives with a selection on the two
      columns or splits into two views joined back in the rewriting.
  VB  break a view into two overlapping connected pieces, rejoined naturally.
  VF  fuse two views with isomorphic bodies into one serving both roles.

States are identified up to view renaming by a signature of canonical view
keys, which is what the search layers deduplicate on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .algebra import (
    Expr,
    NatJoin,
    Project,
    Rename,
    Scan,
    Select,
    ThetaJoin,
    UnionOp,
    replace_scans,
)
from .queries import (
    POSITIONS,
    ConjunctiveQuery,
    Const,
    QueryError,
    Term,
    Var,
    bodies_isomorphic,
    canonical_body_key,
    canonical_key,
    check_workload_query,
    connected_components,
    view_key,
)
from .reasoning import Schema, reformulate

KINDS = ("VB", "SC", "JC", "VF")


@dataclass(frozen=True)
class Rewriting:
    query_name: str
    expr: Expr


@dataclass(frozen=True, eq=False)
class State:
    views: tuple[ConjunctiveQuery, ...]
    rewritings: tuple[Rewriting, ...]
    uid: int
    signature: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        sig = tuple(sorted(view_key(v) for v in self.views))
        object.__setattr__(self, "signature", sig)

    def view_named(self, name: str) -> ConjunctiveQuery:
        for v in self.views:
            if v.name == name:
                return v
        raise KeyError(name)

    def __repr__(self) -> str:
        return f"State(uid={self.uid}, views={[v.name for v in self.views]})"


@dataclass(frozen=True)
class Transition:
    kind: str
    label: str
    state: State


class TransitionContext:
    """Supplies globally fresh view names, variable names and state ids."""

    def __init__(self) -> None:
        self._view_n = 0
        self._var_n = 0
        self._uid = 0

    def view_name(self) -> str:
        self._view_n += 1
        return f"v{self._view_n}"

    def fresh_var(self, avoid: set[str]) -> Var:
        while True:
            self._var_n += 1
            name = f"F{self._var_n}"
            if name not in avoid:
                return Var(name)

    def next_uid(self) -> int:
        self._uid += 1
        return self._uid


MODES = ("plain", "saturate", "pre", "post")


def initial_state(
    queries: list[ConjunctiveQuery],
    ctx: TransitionContext,
    mode: str = "plain",
    schema: Schema | None = None,
) -> State:
    """One view per workload query; in pre-reformulation mode, one view per
    member of each query's entailment-aware rewriting, united."""
    if mode not in MODES:
        raise QueryError(f"unknown mode {mode!r}")
    if not queries:
        raise QueryError("empty workload")
    if mode in ("pre",) and schema is None:
        raise QueryError("pre-reformulation mode needs a schema")
    views: list[ConjunctiveQuery] = []
    rewritings: list[Rewriting] = []
    for q in queries:
        check_workload_query(q)
        if mode == "pre":
            assert schema is not None
            members = reformulate(q, schema).members
            scans: list[Expr] = []
            for m in members:
                for a in m.body:
                    if a.n_constants() == 3:
                        raise QueryError(
                            f"{q.name}: entailment-aware rewriting produces atom {a} "
                            "with three constants; such views are unsupported, "
                            "use saturation or post-reformulation instead"
                        )
                if len(connected_components(m.body)) > 1:
                    raise QueryError(
                        f"{q.name}: entailment-aware rewriting disconnects a member; "
                        "use saturation or post-reformulation instead"
                    )
                v = ConjunctiveQuery(ctx.view_name(), m.head, m.body)
                views.append(v)
                scans.append(Scan(v.name))
            rewritings.append(
                Rewriting(q.name, scans[0] if len(scans) == 1 else UnionOp(tuple(scans)))
            )
        else:
            v = ConjunctiveQuery(ctx.view_name(), q.head, q.body)
            views.append(v)
            rewritings.append(Rewriting(q.name, Scan(v.name)))
    return State(tuple(views), tuple(rewritings), ctx.next_uid())


# ---------------------------------------------------------------------------
# transition helpers


def _patched(state: State, ctx: TransitionContext, slot: int,
             replacement: list[ConjunctiveQuery], mapping: dict[str, Expr]) -> State:
    views = state.views[:slot] + tuple(replacement) + state.views[slot + 1 :]
    rewritings = tuple(
        Rewriting(r.query_name, replace_scans(r.expr, mapping)) for r in state.rewritings
    )
    return State(views, rewritings, ctx.next_uid())


def _var_names(view: ConjunctiveQuery) -> set[str]:
    names = {v.name for v in view.variables()}
    names.update(t.name for t in view.head if isinstance(t, Var))
    return names


def _component_vars(body: tuple, idxs) -> set[Var]:
    out: set[Var] = set()
    for i in idxs:
        out.update(body[i].variables())
    return out


def _sub_connected(body: tuple, idxs) -> bool:
    sub = tuple(body[i] for i in idxs)
    return len(connected_components(sub)) <= 1


# ---------------------------------------------------------------------------
# the four transitions


def selection_cuts(state: State, slot: int, ctx: TransitionContext):
    view = state.views[slot]
    for ai, a in enumerate(view.body):
        for pos, term in enumerate(a.terms):
            if not isinstance(term, Const):
                continue
            f = ctx.fresh_var(_var_names(view))
            body = view.body[:ai] + (a.replace(pos, f),) + view.body[ai + 1 :]
            new = ConjunctiveQuery(ctx.view_name(), view.head + (f,), body)
            expr = Project(Select(Scan(new.name), f, term), view.head)
            label = f"SC {view.name}:n{ai + 1}.{POSITIONS[pos]}={term.symbol}"
            yield label, _patched(state, ctx, slot, [new], {view.name: expr})


def join_cuts(state: State, slot: int, ctx: TransitionContext):
    view = state.views[slot]
    atoms_of: dict[Var, set[int]] = {}
    for ai, a in enumerate(view.body):
        for v in a.variables():
            atoms_of.setdefault(v, set()).add(ai)
    for ai, a in enumerate(view.body):
        for pos, term in enumerate(a.terms):
            if not isinstance(term, Var):
                continue
            if not (atoms_of[term] - {ai}):
                continue  # no join edge reaches this occurrence
            x = term
            f = ctx.fresh_var(_var_names(view))
            body = view.body[:ai] + (a.replace(pos, f),) + view.body[ai + 1 :]
            comps = connected_components(body)
            label = f"JC {view.name}:n{ai + 1}.{POSITIONS[pos]}({x})"
            if len(comps) == 1:
                head = view.head
                if x not in head:
                    head = head + (x,)
                new = ConjunctiveQuery(ctx.view_name(), head + (f,), body)
                expr = Project(Select(Scan(new.name), f, x), view.head)
                yield label, _patched(state, ctx, slot, [new], {view.name: expr})
            else:
                comp_f = next(c for c in comps if ai in c)
                comp_x = next(c for c in comps if ai not in c)
                vars_f = _component_vars(body, comp_f)
                vars_x = _component_vars(body, comp_x)
                head_f = tuple(
                    t for t in view.head
                    if isinstance(t, Const) or t in vars_f
                ) + (f,)
                head_x = tuple(t for t in view.head if isinstance(t, Var) and t in vars_x)
                if x not in head_x:
                    head_x = head_x + (x,)
                new_f = ConjunctiveQuery(
                    ctx.view_name(), head_f, tuple(body[i] for i in comp_f)
                )
                new_x = ConjunctiveQuery(
                    ctx.view_name(), head_x, tuple(body[i] for i in comp_x)
                )
                expr = Project(
                    ThetaJoin(Scan(new_f.name), Scan(new_x.name), ((f, x),)),
                    view.head,
                )
                yield label, _patched(state, ctx, slot, [new_f, new_x], {view.name: expr})


def view_breaks(state: State, slot: int, ctx: TransitionContext):
    view = state.views[slot]
    n = len(view.body)
    if n <= 2:
        return
    seen_pairs: set[frozenset[frozenset[int]]] = set()
    all_idx = set(range(n))
    for k in range(1, n):
        for n1 in itertools.combinations(range(n), k):
            if not _sub_connected(view.body, n1):
                continue
            rest = tuple(sorted(all_idx - set(n1)))
            for osize in range(0, k):
                for overlap in itertools.combinations(n1, osize):
                    n2 = tuple(sorted(set(rest) | set(overlap)))
                    if not _sub_connected(view.body, n2):
                        continue
                    pair = frozenset((frozenset(n1), frozenset(n2)))
                    if pair in seen_pairs:
                        continue
                    seen_pairs.add(pair)
                    vars1 = _component_vars(view.body, n1)
                    vars2 = _component_vars(view.body, n2)
                    shared: list[Var] = []
                    for a in view.body:
                        for v in a.variables():
                            if v in vars1 and v in vars2 and v not in shared:
                                shared.append(v)
                    head1 = tuple(
                        t for t in view.head if isinstance(t, Const) or t in vars1
                    )
                    head1 += tuple(v for v in shared if v not in head1)
                    head2 = tuple(
                        t for t in view.head if isinstance(t, Var) and t in vars2
                    )
                    head2 += tuple(v for v in shared if v not in head2)
                    v1 = ConjunctiveQuery(
                        ctx.view_name(), head1, tuple(view.body[i] for i in n1)
                    )
                    v2 = ConjunctiveQuery(
                        ctx.view_name(), head2, tuple(view.body[i] for i in n2)
                    )
                    expr = Project(NatJoin(Scan(v1.name), Scan(v2.name)), view.head)
                    label = (
                        f"VB {view.name}:"
                        f"{{{','.join(f'n{i + 1}' for i in n1)}}}"
                        f"|{{{','.join(f'n{i + 1}' for i in n2)}}}"
                    )
                    yield label, _patched(
                        state, ctx, slot, [v1, v2], {view.name: expr}
                    )


def view_fusions(state: State, ctx: TransitionContext):
    for i, j in itertools.combinations(range(len(state.views)), 2):
        v1, v2 = state.views[i], state.views[j]
        if canonical_body_key(v1) != canonical_body_key(v2):
            continue
        isos = bodies_isomorphic(v1, v2, find_all=True)
        if not isos:
            continue
        # Distinct isomorphisms can induce distinct fused heads (two
        # all-variable atoms can line up straight or crosswise).  Each
        # outcome is its own transition; collapsing them to one would make
        # fusion order matter and lose states from the stratified orders.
        variants: dict[str, tuple[dict[Var, Var], tuple[Term, ...]]] = {}
        for rho in isos:
            fused: list[Term] = list(v1.head)
            for t in v2.head:
                mapped: Term = rho[t] if isinstance(t, Var) else t
                if mapped not in fused:
                    fused.append(mapped)
            key = canonical_key(ConjunctiveQuery("", tuple(fused), v1.body))
            variants.setdefault(key, (rho, tuple(fused)))
        for n, variant_key in enumerate(sorted(variants)):
            rho, fused_head = variants[variant_key]
            new = ConjunctiveQuery(ctx.view_name(), fused_head, v1.body)
            expr1: Expr = Scan(new.name)
            if fused_head != v1.head:
                expr1 = Project(expr1, v1.head)
            inv = {u: w for w, u in rho.items()}
            pairs = tuple(
                sorted(
                    ((u, w) for u, w in inv.items() if u != w),
                    key=lambda p: p[0].name,
                )
            )
            expr2: Expr = Scan(new.name)
            if pairs:
                expr2 = Rename(expr2, pairs)
            renamed_cols = tuple(
                inv.get(t, t) if isinstance(t, Var) else t for t in fused_head
            )
            if renamed_cols != v2.head:
                expr2 = Project(expr2, v2.head)
            views = (
                state.views[:i]
                + (new,)
                + state.views[i + 1 : j]
                + state.views[j + 1 :]
            )
            mapping = {v1.name: expr1, v2.name: expr2}
            rewritings = tuple(
                Rewriting(r.query_name, replace_scans(r.expr, mapping))
                for r in state.rewritings
            )
            label = f"VF {v1.name}+{v2.name}"
            if n:
                label += f"#{n + 1}"
            yield label, State(views, rewritings, ctx.next_uid())


# ---------------------------------------------------------------------------
# enumeration


def iter_transitions(state: State, ctx: TransitionContext, kinds=KINDS):
    """All transitions of the requested kinds, in a fixed deterministic order.

    Duplicates (children equal to previously seen states) are not filtered
    here; search layers that need deduplication do it on signatures.
    """
    for kind in kinds:
        if kind == "VF":
            for label, child in view_fusions(state, ctx):
                yield Transition(kind, label, child)
            continue
        fn = {"VB": view_breaks, "SC": selection_cuts, "JC": join_cuts}[kind]
        for slot in range(len(state.views)):
            for label, child in fn(state, slot, ctx):
                yield Transition(kind, label, child)


def enumerate_transitions(
    state: State,
    ctx: TransitionContext,
    kinds=KINDS,
    seen: set[tuple[str, ...]] | None = None,
) -> list[Transition]:
    """Materialized transition list, optionally filtered against (and
    updating) a set of already seen state signatures."""
    out: list[Transition] = []
    for tr in iter_transitions(state, ctx, kinds):
        if seen is not None:
            if tr.state.signature in seen:
                continue
            seen.add(tr.state.signature)
        out.append(tr)
    return out
