"""Workload statistics driving cardinality and cost estimation.

For every atom of every workload query we record the exact number of matching
triples, together with the count of every relaxation of the atom: any subset
of its constants replaced by fresh variables, and any refinement of its
repeated-variable pattern (a join cut may sever one occurrence of a repeated
variable, producing an atom the original pattern does not cover).

Counts are taken against the store the views will be materialized over.  In
post-reformulation mode the store holds only explicit triples, so each count
is taken through the atom's entailment-aware rewriting; this yields exactly
the statistics of the saturated store without building it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import chain, combinations

from .queries import ConjunctiveQuery, Const, TripleAtom, Var
from .reasoning import Schema, atom_as_query, reformulate
from .store import TripleStore, evaluate

PatternKey = tuple[tuple[str, str | int], ...]


class MissingStatisticError(LookupError):
    """An estimate was requested for an atom shape never collected."""


def pattern_of(a: TripleAtom) -> PatternKey:
    """Shape of an atom: constants by value, variables by equality class."""
    classes: dict[Var, int] = {}
    out: list[tuple[str, str | int]] = []
    for t in a.terms:
        if isinstance(t, Const):
            out.append(("c", t.symbol))
        else:
            out.append(("v", classes.setdefault(t, len(classes))))
    return tuple(out)


def pattern_atom(key: PatternKey) -> TripleAtom:
    terms = [
        Const(val) if kind == "c" else Var(f"x{val}")  # type: ignore[arg-type]
        for kind, val in key
    ]
    return TripleAtom(terms[0], terms[1], terms[2])


def _partitions(items: list[int]):
    """All set partitions of items (at most three elements here)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def atom_patterns(a: TripleAtom) -> set[PatternKey]:
    """Every pattern a selection or join cut can reach from this atom."""
    const_positions = [i for i, t in enumerate(a.terms) if isinstance(t, Const)]
    out: set[PatternKey] = set()
    for k in range(len(const_positions) + 1):
        for dropped in combinations(const_positions, k):
            var_groups: dict[Var | int, list[int]] = {}
            for i, t in enumerate(a.terms):
                if i in dropped:
                    var_groups[i] = [i]  # relaxed constant: its own class
                elif isinstance(t, Var):
                    var_groups.setdefault(t, []).append(i)
            kept = {i: t for i, t in enumerate(a.terms)
                    if isinstance(t, Const) and i not in dropped}
            # refine each repeated-variable class every possible way
            group_lists = list(var_groups.values())
            refined: list[list[list[int]]] = [[]]
            for g in group_lists:
                refined = [acc + part for acc in refined for part in _partitions(g)]
            for blocks in refined:
                slot: list[tuple[str, str | int] | None] = [None, None, None]
                for i, t in kept.items():
                    slot[i] = ("c", t.symbol)
                for cid, block in enumerate(sorted(blocks, key=min)):
                    for i in block:
                        slot[i] = ("v", cid)
                # renumber by position order of first occurrence
                key: list[tuple[str, str | int]] = []
                remap: dict[int, int] = {}
                for s in slot:
                    assert s is not None
                    if s[0] == "v":
                        cid = remap.setdefault(s[1], len(remap))  # type: ignore[arg-type]
                        key.append(("v", cid))
                    else:
                        key.append(s)
                out.add(tuple(key))
    return out


@dataclass(frozen=True)
class ColumnStats:
    distinct: int
    avg_size: float
    min_size: int
    max_size: int


@dataclass
class WorkloadStatistics:
    triple_count: int
    columns: tuple[ColumnStats, ColumnStats, ColumnStats]
    pattern_counts: dict[PatternKey, int]

    def count(self, a: TripleAtom) -> int:
        key = pattern_of(a)
        try:
            return self.pattern_counts[key]
        except KeyError:
            raise MissingStatisticError(
                f"no count collected for atom shape {pattern_atom(key)}"
            ) from None

    def has(self, a: TripleAtom) -> bool:
        return pattern_of(a) in self.pattern_counts

    def to_json(self) -> dict:
        return {
            "triple_count": self.triple_count,
            "columns": [
                {
                    "distinct": c.distinct,
                    "avg_size": c.avg_size,
                    "min_size": c.min_size,
                    "max_size": c.max_size,
                }
                for c in self.columns
            ],
            "patterns": [
                {"key": list(map(list, k)), "count": n}
                for k, n in sorted(self.pattern_counts.items(), key=lambda kv: str(kv[0]))
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "WorkloadStatistics":
        cols = tuple(
            ColumnStats(c["distinct"], c["avg_size"], c["min_size"], c["max_size"])
            for c in d["columns"]
        )
        patterns = {
            tuple((kind, val) for kind, val in entry["key"]): entry["count"]
            for entry in d["patterns"]
        }
        return cls(d["triple_count"], cols, patterns)  # type: ignore[arg-type]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "WorkloadStatistics":
        return cls.from_json(json.loads(text))


def _byte_len(symbol: str) -> int:
    return len(symbol.encode("utf-8"))


def _column_stats(triples: list[tuple[str, str, str]]) -> tuple[ColumnStats, ...]:
    cols = []
    for pos in range(3):
        values = [t[pos] for t in triples]
        if not values:
            cols.append(ColumnStats(0, 0.0, 0, 0))
            continue
        sizes = [_byte_len(v) for v in values]
        cols.append(
            ColumnStats(
                distinct=len(set(values)),
                avg_size=sum(sizes) / len(sizes),
                min_size=min(sizes),
                max_size=max(sizes),
            )
        )
    return tuple(cols)


def collect_statistics(
    queries: list[ConjunctiveQuery],
    store: TripleStore,
    schema: Schema | None = None,
    mode: str = "plain",
) -> WorkloadStatistics:
    """Count every workload atom shape; `mode` controls the counting lens.

    plain/saturate: count directly against `store` (pass the saturated store
    for a saturation setup).  post: count each shape through its
    entailment-aware rewriting over the explicit store, which equals the
    saturated count.
    """
    if mode not in ("plain", "saturate", "post"):
        raise ValueError(f"unknown statistics mode {mode!r}")
    if mode == "post" and schema is None:
        raise ValueError("post-reformulation statistics need a schema")

    keys: set[PatternKey] = set()
    for q in queries:
        for a in q.body:
            keys.update(atom_patterns(a))

    counts: dict[PatternKey, int] = {}
    if mode == "post":
        assert schema is not None
        for key in keys:
            probe = atom_as_query(pattern_atom(key))
            counts[key] = len(evaluate(reformulate(probe, schema), store))
        universe_q = reformulate(
            atom_as_query(TripleAtom(Var("S"), Var("P"), Var("O"))), schema
        )
        triples = sorted(evaluate(universe_q, store))
        triple_count = len(triples)
    else:
        for key in keys:
            counts[key] = store.count_pattern(pattern_atom(key))
        triples = sorted(store.symbols(t) for t in store.triples)
        triple_count = len(store)

    return WorkloadStatistics(triple_count, _column_stats(triples), counts)  # type: ignore[arg-type]
