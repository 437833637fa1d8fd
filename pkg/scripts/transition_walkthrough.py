#!/usr/bin/env python3
"""Apply one transition of each kind to a 3-atom query and print the states.

Walks the museum fixture from the trivial one-view-per-query state to a
two-view fixpoint: break the query in two (VB), cut a constant out (SC),
cut the remaining joins (JC), then fuse the isomorphic leftovers (VF).
Each step prints the views, the rewriting, and the estimated cost.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rdftuner.algebra import format_expr
from rdftuner.cost import CostWeights, Estimator
from rdftuner.queries import ConjunctiveQuery, Const, TripleAtom, Var, format_query
from rdftuner.states import TransitionContext, initial_state, iter_transitions
from rdftuner.stats import collect_statistics
from rdftuner.store import load_triples

TRIPLES = """
vanGogh hasPainted starryNight
vanGogh isParentOf theo
rembrandt hasPainted nightWatch
rembrandt isParentOf titus
theo hasPainted irisesCopy
titus hasPainted selfPortraitCopy
"""


def museum_query():
    x, y, z = Var("X"), Var("Y"), Var("Z")
    return ConjunctiveQuery("q1", (x, z), (
        TripleAtom(x, Const("hasPainted"), Const("starryNight")),
        TripleAtom(x, Const("isParentOf"), y),
        TripleAtom(y, Const("hasPainted"), z),
    ))


def show(tag, state, est):
    print(f"\n== {tag}  (cost {est.state_cost(state).total:.2f})")
    for v in state.views:
        print("   view", format_query(v))
    for rw in state.rewritings:
        print(f"   {rw.query_name} = {format_expr(rw.expr)}")


def pick(state, ctx, kinds, needle):
    for tr in iter_transitions(state, ctx, kinds):
        if needle in tr.label:
            print(f"\n-> {tr.label}")
            return tr.state
    raise SystemExit(f"no transition matching {needle!r}")


def main():
    store = load_triples(TRIPLES)
    ctx = TransitionContext()
    state = initial_state([museum_query()], ctx)
    est = Estimator(collect_statistics(state.views, store), CostWeights())

    show("start: one view per query", state, est)
    state = pick(state, ctx, ("VB",), "{n1,n2}|{n2,n3}")
    show("after the view break", state, est)
    state = pick(state, ctx, ("SC",), "starryNight")
    show("after the selection cut", state, est)
    state = pick(state, ctx, ("JC",), "n1.s")
    state = pick(state, ctx, ("JC",), "n1.o")
    show("after both join cuts", state, est)
    state = pick(state, ctx, ("VF",), "+")
    state = pick(state, ctx, ("VF",), "+")
    show("after both fusions: two generic views", state, est)


if __name__ == "__main__":
    main()
