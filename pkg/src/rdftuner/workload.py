"""Synthetic stores and workload generators for experiments and benchmarks.

Queries are generated satisfiable by construction: a concrete embedding
(a star around one subject, or a walk along property triples) is sampled
from the store first, then generalized by replacing resources with
variables, keeping a configurable number of constants.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .queries import ConjunctiveQuery, Const, QueryError, RDF_TYPE, TripleAtom, Var, minimize
from .reasoning import DOMAIN, RANGE, SUBCLASS, SUBPROPERTY, Schema
from .store import StoreError, TripleStore

SHAPES = ("star", "chain", "cycle", "random_sparse", "random_dense", "mixed")
COMMONALITY = ("low", "medium", "high")


@dataclass
class WorkloadSpec:
    n_queries: int = 5
    atoms_per_query: int = 3
    shape: str = "star"
    commonality: str = "medium"
    n_constants: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise QueryError(f"unknown shape {self.shape!r}")
        if self.commonality not in COMMONALITY:
            raise QueryError(f"unknown commonality {self.commonality!r}")
        if self.n_queries < 1 or self.atoms_per_query < 1:
            raise QueryError("workload needs at least one query and one atom")


def make_synthetic_store(
    n_triples: int,
    seed: int = 0,
    n_classes: int = 8,
    n_properties: int = 12,
) -> TripleStore:
    """A skewed synthetic graph: a hub-heavy property layer plus typings."""
    rng = random.Random(seed)
    n_resources = max(6, n_triples // 4)
    resources = [f"r{i}" for i in range(n_resources)]
    classes = [f"c{i}" for i in range(n_classes)]
    properties = [f"p{i}" for i in range(n_properties)]
    p_weights = [1.0 / (i + 1) for i in range(n_properties)]
    c_weights = [1.0 / (i + 1) for i in range(n_classes)]
    hubs = resources[: max(1, n_resources // 10)]

    store = TripleStore()
    seen: set[tuple[str, str, str]] = set()
    target_typing = n_triples // 4

    def add(s: str, p: str, o: str) -> None:
        if (s, p, o) not in seen:
            seen.add((s, p, o))
            store.add(s, p, o)

    guard = 0
    while len(store) < target_typing and guard < 50 * n_triples:
        guard += 1
        add(rng.choice(resources), RDF_TYPE.symbol, rng.choices(classes, c_weights)[0])
    while len(store) < n_triples and guard < 100 * n_triples:
        guard += 1
        s = rng.choice(hubs) if rng.random() < 0.5 else rng.choice(resources)
        o = rng.choice(hubs) if rng.random() < 0.2 else rng.choice(resources)
        if s == o:
            continue
        add(s, rng.choices(properties, p_weights)[0], o)
    return store


def make_synthetic_schema(
    n_statements: int = 10,
    seed: int = 0,
    n_classes: int = 8,
    n_properties: int = 12,
) -> Schema:
    """Subclass and subproperty chains plus a few domain/range statements
    over the vocabulary of make_synthetic_store."""
    rng = random.Random(seed)
    classes = [f"c{i}" for i in range(n_classes)]
    properties = [f"p{i}" for i in range(n_properties)]
    statements: set[tuple[str, str, str]] = set()
    kinds = [SUBCLASS, SUBCLASS, SUBPROPERTY, SUBPROPERTY, DOMAIN, RANGE]
    guard = 0
    while len(statements) < n_statements and guard < 100 * n_statements:
        guard += 1
        kind = rng.choice(kinds)
        if kind == SUBCLASS:
            a, b = rng.sample(classes, 2)
            statements.add((SUBCLASS, a, b))
        elif kind == SUBPROPERTY:
            a, b = rng.sample(properties, 2)
            statements.add((SUBPROPERTY, a, b))
        else:
            statements.add((kind, rng.choice(properties), rng.choice(classes)))
    return Schema(frozenset(statements))


# ---------------------------------------------------------------------------
# satisfiable query generation


def _property_triples(store: TripleStore) -> list:
    """Non-typing, non-loop triples in a deterministic order."""
    type_code = store.dictionary.code(RDF_TYPE.symbol)
    return sorted(t for t in store.triples if t[1] != type_code and t[0] != t[2])


def _sample_star(store: TripleStore, rng: random.Random, m: int, retries: int = 400):
    """m distinct property triples sharing one subject, no self loops."""
    triples = _property_triples(store)
    if not triples:
        raise StoreError("store has no property triples")
    by_subject: dict[int, list] = {}
    for t in triples:
        by_subject.setdefault(t[0], []).append(t)
    for _ in range(retries):
        out = by_subject[rng.choice(triples)[0]]
        if len(out) >= m:
            return rng.sample(out, m)
    raise StoreError(f"no subject with {m} outgoing property triples found")


def _sample_walk(
    store: TripleStore, rng: random.Random, m: int, closed: bool, retries: int = 800
):
    """A walk along m distinct property triples; closed walks return home."""
    triples = _property_triples(store)
    if not triples:
        raise StoreError("store has no property triples")
    by_subject: dict[int, list] = {}
    for t in triples:
        by_subject.setdefault(t[0], []).append(t)
    for _ in range(retries):
        walk = [rng.choice(triples)]
        ok = True
        for _ in range(m - 1):
            nxt = [t for t in by_subject.get(walk[-1][2], ()) if t not in walk]
            if not nxt:
                ok = False
                break
            walk.append(rng.choice(nxt))
        if not ok:
            continue
        if closed and walk[-1][2] != walk[0][0]:
            continue
        return walk
    raise StoreError(f"no {'closed ' if closed else ''}walk of length {m} found")


def _sample_sparse(store: TripleStore, rng: random.Random, m: int, dense: bool,
                   retries: int = 400):
    """A connected set of m property triples grown edge by edge; dense sets
    keep growing inside the already touched resources when possible."""
    triples = _property_triples(store)
    if not triples:
        raise StoreError("store has no property triples")
    by_node: dict[int, list] = {}
    for t in triples:
        by_node.setdefault(t[0], []).append(t)
        by_node.setdefault(t[2], []).append(t)
    for _ in range(retries):
        first = rng.choice(triples)
        chosen = [first]
        nodes = {first[0], first[2]}
        ok = True
        for _ in range(m - 1):
            internal = [
                t
                for n in nodes
                for t in by_node.get(n, ())
                if t not in chosen and t[0] in nodes and t[2] in nodes
            ]
            frontier = [
                t for n in nodes for t in by_node.get(n, ()) if t not in chosen
            ]
            pool = internal if (dense and internal) else frontier
            if not pool:
                ok = False
                break
            t = rng.choice(pool)
            chosen.append(t)
            nodes.update((t[0], t[2]))
        if ok:
            return chosen
    raise StoreError(f"no connected {m}-triple pattern found")


def _generalize(
    store: TripleStore,
    triples: list,
    rng: random.Random,
    n_constants: int,
    name: str,
) -> ConjunctiveQuery:
    """Replace resources by variables, keep property constants, then pin
    n_constants subject/object positions back to their concrete values."""
    var_of: dict[int, Var] = {}

    def v(code: int) -> Var:
        if code not in var_of:
            var_of[code] = Var(f"X{len(var_of)}")
        return var_of[code]

    atoms = []
    for t in triples:
        s, p, o = t
        atoms.append(
            TripleAtom(v(s), Const(store.dictionary.symbol(p)), v(o))
        )

    # candidate positions to re-instantiate: one per atom at most, and only
    # where the variable occurs in a single atom (keeps the body connected)
    occurrences: dict[Var, int] = {}
    for a in atoms:
        for x in set(a.variables()):
            occurrences[x] = occurrences.get(x, 0) + 1
    candidates = []
    for i, t in enumerate(triples):
        for pos, code in ((0, t[0]), (2, t[2])):
            x = var_of[code]
            if occurrences[x] == 1:
                candidates.append((i, pos, code))
    rng.shuffle(candidates)
    pinned: set[int] = set()
    bound = 0
    for i, pos, code in candidates:
        if bound >= n_constants or i in pinned:
            continue
        atoms[i] = atoms[i].replace(pos, Const(store.dictionary.symbol(code)))
        pinned.add(i)
        bound += 1

    # head: first atom's subject and last atom's object, whatever survived
    # the pinning; covers the hub of a star and both ends of a chain
    head_vars: list[Var] = []
    for term in (atoms[0].terms[0], atoms[-1].terms[2]):
        if isinstance(term, Var) and term not in head_vars:
            head_vars.append(term)
    if not head_vars:
        remaining = [x for a in atoms for x in a.variables()]
        head_vars = [remaining[0]]
    q = ConjunctiveQuery(name, tuple(head_vars), tuple(atoms))
    if len(minimize(q).body) < len(q.body):
        q = ConjunctiveQuery(name, tuple(dict.fromkeys(q.variables())), tuple(atoms))
    return q


def generate_workload(spec: WorkloadSpec, store: TripleStore) -> list[ConjunctiveQuery]:
    """Sample n_queries satisfiable queries of the requested shape.

    Commonality controls how much structure queries share: high draws every
    query's shape from a pool of two sampled patterns, medium from a pool the
    size of the workload, low samples fresh patterns every time.
    """
    rng = random.Random(spec.seed)
    pool_size = {"high": 2, "medium": max(2, spec.n_queries), "low": 0}[spec.commonality]

    def sample(shape: str):
        if shape == "star":
            return _sample_star(store, rng, spec.atoms_per_query)
        if shape == "chain":
            return _sample_walk(store, rng, spec.atoms_per_query, closed=False)
        if shape == "cycle":
            if spec.atoms_per_query < 2:
                raise QueryError("cycle shape needs at least two atoms")
            return _sample_walk(store, rng, spec.atoms_per_query, closed=True)
        if shape == "random_sparse":
            return _sample_sparse(store, rng, spec.atoms_per_query, dense=False)
        if shape == "random_dense":
            return _sample_sparse(store, rng, spec.atoms_per_query, dense=True)
        return sample(rng.choice(("star", "chain", "random_sparse")))

    pool: list = []
    if pool_size:
        for _ in range(pool_size):
            pool.append(sample(spec.shape))

    queries = []
    for qi in range(spec.n_queries):
        triples = rng.choice(pool) if pool else sample(spec.shape)
        queries.append(
            _generalize(store, triples, rng, spec.n_constants, f"q{qi + 1}")
        )
    return queries
