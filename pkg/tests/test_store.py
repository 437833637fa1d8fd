"""Store and evaluation, checked against a nested-loop reference evaluator
that knows nothing about atom ordering or indexes."""

import itertools
import random

from hypothesis import given, strategies as st

from rdftuner.queries import ConjunctiveQuery, Const, TripleAtom, UnionQuery, Var
from rdftuner.store import (
    TripleStore,
    dump_triples,
    evaluate,
    load_triples,
    materialize,
)
from conftest import random_query, random_schema, random_store


def naive_evaluate(q, store):
    """Try every combination of triples, one per atom, and keep consistent
    variable assignments."""
    if isinstance(q, UnionQuery):
        out = set()
        for m in q.members:
            out |= naive_evaluate(m, store)
        return out
    rows = set()
    facts = [store.symbols(t) for t in store.triples]
    for combo in itertools.product(facts, repeat=len(q.body)):
        env = {}
        ok = True
        for atom, fact in zip(q.body, combo):
            for term, value in zip(atom.terms, fact):
                if isinstance(term, Const):
                    if term.symbol != value:
                        ok = False
                        break
                elif env.setdefault(term, value) != value:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            rows.add(
                tuple(
                    env[t] if isinstance(t, Var) else t.symbol for t in q.head
                )
            )
    return rows


def test_evaluate_matches_naive_randomized():
    rng = random.Random(11)
    for _ in range(150):
        schema = random_schema(rng)
        store = random_store(rng, schema, max_triples=25)
        q = random_query(rng, schema)
        assert evaluate(q, store) == naive_evaluate(q, store)


def test_evaluate_painter_example(painter_store):
    from conftest import painter_query

    assert evaluate(painter_query(), painter_store) == {("vanGogh", "pieta")}


def test_evaluate_repeated_variable_atom():
    store = load_triples("a p a\na p b\nb q b\n")
    x = Var("X")
    q = ConjunctiveQuery("q", (x,), (TripleAtom(x, Var("P"), x),))
    assert evaluate(q, store) == {("a",), ("b",)}


def test_count_pattern_matches_lookup():
    rng = random.Random(5)
    schema = random_schema(rng)
    store = random_store(rng, schema, max_triples=60)
    x, y = Var("X"), Var("Y")
    patterns = [
        TripleAtom(x, y, Var("Z")),
        TripleAtom(x, Const("p0"), y),
        TripleAtom(x, Const("rdf:type"), Const("c0")),
        TripleAtom(x, y, x),
        TripleAtom(x, Const("nosuch"), y),
    ]
    for a in patterns:
        q = ConjunctiveQuery("c", tuple(dict.fromkeys(a.variables())), (a,))
        assert store.count_pattern(a) == len(naive_evaluate(q, store))


def test_load_dump_round_trip():
    text = 'a p b\nb "has space" c\n'
    store = load_triples(text)
    assert len(store) == 2
    again = load_triples(dump_triples(store))
    assert {again.symbols(t) for t in again.triples} == {
        store.symbols(t) for t in store.triples
    }


def test_materialize_columns_and_rows(painter_store):
    x, y = Var("X"), Var("Y")
    v = ConjunctiveQuery(
        "v1", (x, y), (TripleAtom(x, Const("isParentOf"), y),)
    )
    rel = materialize(v, painter_store)
    assert rel.name == "v1"
    assert rel.columns == (x, y)
    assert rel.rows == frozenset(
        {("vanGogh", "vincentW"), ("rembrandt", "titus")}
    )


def test_materialize_union(painter_store):
    x = Var("X")
    u = UnionQuery(
        "v2",
        (
            ConjunctiveQuery(
                "v2", (x,), (TripleAtom(x, Const("isExpIn"), Var("Y")),)
            ),
            ConjunctiveQuery(
                "v2", (x,), (TripleAtom(x, Const("isLocatIn"), Var("Y")),)
            ),
        ),
    )
    rel = materialize(u, painter_store)
    assert rel.rows == frozenset({("starryNight",), ("nightWatch",)})
