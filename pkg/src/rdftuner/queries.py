"""Conjunctive queries and views over a single triple table.

Queries and views share one representation: a named head (a tuple of terms,
normally variables) plus a body of triple atoms.  Heads are ordered because
rewritings align view columns positionally; they may contain constants, which
arise when entailment-aware rewriting binds a head variable to a schema class
or property.

The container itself is permissive.  Workload queries parsed from text are
validated (connected body, head variables bound, at most two constants per
atom) and split into independent sub-queries when their join graph is
disconnected; views enforce the same rules at construction time in the state
layer.  Internal queries produced by rewriting rules may legitimately violate
them and still need to evaluate.

Containment mappings drive everything else here: equivalence, minimization,
and the canonical form that makes duplicate detection cheap for the search.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache


class QueryError(ValueError):
    """Raised for malformed query structures or query text."""


# ---------------------------------------------------------------------------
# terms and atoms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


Term = Var | Const

RDF_TYPE = Const("rdf:type")

POSITIONS = ("s", "p", "o")


@dataclass(frozen=True, slots=True)
class TripleAtom:
    s: Term
    p: Term
    o: Term

    @property
    def terms(self) -> tuple[Term, Term, Term]:
        return (self.s, self.p, self.o)

    def variables(self) -> list[Var]:
        return [t for t in self.terms if isinstance(t, Var)]

    def n_constants(self) -> int:
        return sum(1 for t in self.terms if isinstance(t, Const))

    def replace(self, pos: int, term: Term) -> "TripleAtom":
        parts = list(self.terms)
        parts[pos] = term
        return TripleAtom(*parts)

    def __str__(self) -> str:
        return f"t({self.s},{self.p},{self.o})"


def atom(s: Term | str, p: Term | str, o: Term | str) -> TripleAtom:
    """Convenience constructor: bare strings follow the query-text convention
    (leading uppercase or '?' means variable)."""
    return TripleAtom(_coerce(s), _coerce(p), _coerce(o))


def _coerce(t: Term | str) -> Term:
    if isinstance(t, (Var, Const)):
        return t
    if t.startswith("?"):
        return Var(t[1:]) if len(t) > 1 else Var("?")
    if t[:1].isupper():
        return Var(t)
    return Const(t)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class ConjunctiveQuery:
    name: str
    head: tuple[Term, ...]
    body: tuple[TripleAtom, ...]

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for a in self.body:
            for v in a.variables():
                seen.setdefault(v)
        return list(seen)

    def head_vars(self) -> list[Var]:
        out: dict[Var, None] = {}
        for t in self.head:
            if isinstance(t, Var):
                out.setdefault(t)
        return list(out)

    def rename(self, mapping: dict[Var, Term]) -> "ConjunctiveQuery":
        def sub(t: Term) -> Term:
            return mapping.get(t, t) if isinstance(t, Var) else t

        return ConjunctiveQuery(
            self.name,
            tuple(sub(t) for t in self.head),
            tuple(TripleAtom(sub(a.s), sub(a.p), sub(a.o)) for a in self.body),
        )

    def __str__(self) -> str:
        head = ",".join(map(str, self.head))
        body = ", ".join(map(str, self.body))
        return f"{self.name}({head}) :- {body} ."


@dataclass(frozen=True)
class UnionQuery:
    """A union of conjunctive queries of identical head arity."""

    name: str
    members: tuple[ConjunctiveQuery, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise QueryError(f"union {self.name} has no members")
        arities = {len(m.head) for m in self.members}
        if len(arities) != 1:
            raise QueryError(f"union {self.name} mixes head arities {arities}")


def make_union(name: str, members: list[ConjunctiveQuery]) -> UnionQuery:
    """Build a union, dropping members equivalent to an earlier one."""
    kept: list[ConjunctiveQuery] = []
    for m in members:
        if not any(are_equivalent(m, k) for k in kept):
            kept.append(m)
    return UnionQuery(name, tuple(kept))


# ---------------------------------------------------------------------------
# structural checks


def connected_components(body: tuple[TripleAtom, ...]) -> list[list[int]]:
    """Partition atom indexes into join-connected components.

    Two atoms are connected when they share a variable.  Atoms without
    variables form singleton components.
    """
    n = len(body)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_var: dict[Var, int] = {}
    for i, a in enumerate(body):
        for v in a.variables():
            if v in by_var:
                ri, rj = find(i), find(by_var[v])
                if ri != rj:
                    parent[ri] = rj
            else:
                by_var[v] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def is_connected(body: tuple[TripleAtom, ...]) -> bool:
    return len(connected_components(body)) <= 1


def check_workload_query(q: ConjunctiveQuery) -> None:
    """Validate a query destined to become a view seed."""
    if not q.body:
        raise QueryError(f"{q.name}: empty body")
    body_vars = set(q.variables())
    for t in q.head:
        if isinstance(t, Var) and t not in body_vars:
            raise QueryError(f"{q.name}: head variable {t} not bound in body")
    seen_head: set[Term] = set()
    for t in q.head:
        if t in seen_head:
            raise QueryError(f"{q.name}: duplicate head term {t}")
        seen_head.add(t)
    for a in q.body:
        if a.n_constants() == 3:
            raise QueryError(f"{q.name}: atom {a} has three constants")
    if not is_connected(q.body):
        raise QueryError(f"{q.name}: body is not join-connected")


# ---------------------------------------------------------------------------
# containment


@dataclass(frozen=True)
class ContainmentMapping:
    source: str
    target: str
    assignment: tuple[tuple[Var, Term], ...]

    def as_dict(self) -> dict[Var, Term]:
        return dict(self.assignment)


def _unify_atom(
    src: TripleAtom, dst: TripleAtom, env: dict[Var, Term]
) -> dict[Var, Term] | None:
    out = env
    for st, dt in zip(src.terms, dst.terms):
        if isinstance(st, Const):
            if st != dt:
                return None
        else:
            bound = out.get(st)
            if bound is None:
                if out is env:
                    out = dict(env)
                out[st] = dt
            elif bound != dt:
                return None
    return out


def _mappings(
    src: ConjunctiveQuery,
    dst: ConjunctiveQuery,
    seed: dict[Var, Term] | None,
    limit: int | None = None,
):
    """Yield homomorphisms from src's body into dst's body extending seed."""
    if seed is None:
        return
    order = sorted(range(len(src.body)), key=lambda i: -src.body[i].n_constants())
    count = 0

    def rec(k: int, env: dict[Var, Term]):
        nonlocal count
        if limit is not None and count >= limit:
            return
        if k == len(order):
            count += 1
            yield dict(env)
            return
        a = src.body[order[k]]
        for b in dst.body:
            env2 = _unify_atom(a, b, env)
            if env2 is not None:
                yield from rec(k + 1, env2)

    yield from rec(0, seed)


def _head_seed(src: ConjunctiveQuery, dst: ConjunctiveQuery) -> dict[Var, Term] | None:
    """Initial assignment forcing head positions to correspond."""
    if len(src.head) != len(dst.head):
        return None
    env: dict[Var, Term] = {}
    for st, dt in zip(src.head, dst.head):
        if isinstance(st, Const):
            if st != dt:
                return None
        else:
            if st in env and env[st] != dt:
                return None
            env[st] = dt
    return env


def find_containment_mapping(
    src: ConjunctiveQuery, dst: ConjunctiveQuery
) -> ContainmentMapping | None:
    """Find a head-respecting homomorphism from src into dst.

    Its existence shows that dst is contained in src.  Constants must map to
    themselves and the i-th head term of src must land on the i-th head term
    of dst.
    """
    for env in _mappings(src, dst, _head_seed(src, dst), limit=1):
        return ContainmentMapping(src.name, dst.name, tuple(sorted(env.items(), key=lambda kv: kv[0].name)))
    return None


def are_equivalent(a: ConjunctiveQuery, b: ConjunctiveQuery) -> bool:
    """Mutual containment with positional head correspondence."""
    return (
        find_containment_mapping(a, b) is not None
        and find_containment_mapping(b, a) is not None
    )


def equivalent_up_to_head_permutation(
    a: ConjunctiveQuery, b: ConjunctiveQuery
) -> tuple[int, ...] | None:
    """Return a permutation p with a equivalent to b-with-head-reordered, if any.

    p maps positions of a's head to positions of b's head.
    """
    if len(a.head) != len(b.head):
        return None
    for perm in itertools.permutations(range(len(b.head))):
        permuted = ConjunctiveQuery(b.name, tuple(b.head[i] for i in perm), b.body)
        if are_equivalent(a, permuted):
            return perm
    return None


def bodies_isomorphic(
    a: ConjunctiveQuery, b: ConjunctiveQuery, find_all: bool = False, cap: int = 200
) -> list[dict[Var, Var]]:
    """Bijective variable renamings carrying b's body onto a's body.

    Atom multiplicities must match exactly (each atom of b is matched to a
    distinct atom of a).  Heads are ignored.  Returns at most `cap` renamings,
    or just the first when find_all is false.
    """
    if len(a.body) != len(b.body):
        return []
    if canonical_body_key(a) != canonical_body_key(b):
        return []
    results: list[dict[Var, Var]] = []
    used = [False] * len(a.body)

    def rec(k: int, env: dict[Var, Var], rev: dict[Var, Var]) -> bool:
        if len(results) >= cap:
            return True
        if k == len(b.body):
            results.append(dict(env))
            return not find_all
        bat = b.body[k]
        for i, aat in enumerate(a.body):
            if used[i]:
                continue
            env2, rev2 = env, rev
            ok = True
            for bt, at_ in zip(bat.terms, aat.terms):
                if isinstance(bt, Const) or isinstance(at_, Const):
                    if bt != at_:
                        ok = False
                        break
                else:
                    img = env2.get(bt)
                    if img is None:
                        if at_ in rev2:
                            ok = False
                            break
                        if env2 is env:
                            env2, rev2 = dict(env), dict(rev)
                        env2[bt] = at_
                        rev2[at_] = bt
                    elif img != at_:
                        ok = False
                        break
            if ok:
                used[i] = True
                done = rec(k + 1, env2, rev2)
                used[i] = False
                if done:
                    return True
        return False

    rec(0, {}, {})
    return results


# ---------------------------------------------------------------------------
# minimization


def minimize(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Remove redundant atoms until none can be folded away.

    An atom is redundant when the full body maps homomorphically into the
    reduced body with head terms fixed.  Greedy one-at-a-time removal reaches
    a core, which is unique up to renaming.
    """
    body = list(q.body)
    changed = True
    while changed and len(body) > 1:
        changed = False
        for i in range(len(body)):
            reduced = body[:i] + body[i + 1 :]
            full = ConjunctiveQuery(q.name, q.head, tuple(body))
            smaller = ConjunctiveQuery(q.name, q.head, tuple(reduced))
            if find_containment_mapping(full, smaller) is not None:
                body = reduced
                changed = True
                break
    return ConjunctiveQuery(q.name, q.head, tuple(body))


# ---------------------------------------------------------------------------
# canonical form

_PERMUTATION_BUDGET = 40320


def _initial_colors(q: ConjunctiveQuery, ordered_head: bool) -> list[tuple]:
    head_pos: dict[Var, tuple[int, ...]] = {}
    for i, t in enumerate(q.head):
        if isinstance(t, Var):
            head_pos.setdefault(t, ())
            head_pos[t] = head_pos[t] + ((i if ordered_head else 0),)
    colors = []
    for a in q.body:
        slots = []
        local: dict[Var, int] = {}
        for t in a.terms:
            if isinstance(t, Const):
                slots.append(("c", t.symbol))
            else:
                cls = local.setdefault(t, len(local))
                slots.append(("v", cls, head_pos.get(t, ())))
        colors.append(tuple(slots))
    return colors


def _refine(q: ConjunctiveQuery, colors: list[tuple]) -> list[tuple]:
    """Iteratively split atom color classes by their join neighborhoods."""
    n = len(q.body)
    var_positions: dict[Var, list[tuple[int, int]]] = {}
    for i, a in enumerate(q.body):
        for pos, t in enumerate(a.terms):
            if isinstance(t, Var):
                var_positions.setdefault(t, []).append((i, pos))
    for _ in range(n):
        nxt: list[tuple] = []
        for i, a in enumerate(q.body):
            links = []
            for pos, t in enumerate(a.terms):
                if isinstance(t, Var):
                    for j, jpos in var_positions[t]:
                        if j != i:
                            links.append((pos, jpos, colors[j]))
            nxt.append((colors[i], tuple(sorted(links))))
        stable = all(
            (nxt[i] == nxt[j]) == (colors[i] == colors[j])
            for i in range(n)
            for j in range(i + 1, n)
        )
        colors = nxt
        if stable:
            break
    return colors


def _serialize(q: ConjunctiveQuery, order: tuple[int, ...], ordered_head: bool) -> str:
    names: dict[Var, str] = {}

    def label(t: Term) -> str:
        if isinstance(t, Const):
            return "c:" + t.symbol
        got = names.get(t)
        if got is None:
            got = names.setdefault(t, f"x{len(names)}")
        return got

    atoms = []
    for i in order:
        a = q.body[i]
        atoms.append("(" + ",".join(label(t) for t in a.terms) + ")")
    # head vars that never occur in the body still need stable labels
    head_labels = []
    for t in q.head:
        if isinstance(t, Var) and t not in names:
            names[t] = f"x{len(names)}"
        head_labels.append(label(t))
    if not ordered_head:
        head_labels = sorted(head_labels)
    return "h=" + ",".join(head_labels) + ";b=" + ";".join(atoms)


def _canonical(q: ConjunctiveQuery, ordered_head: bool) -> str:
    colors = _refine(q, _initial_colors(q, ordered_head))
    n = len(q.body)
    groups: dict[tuple, list[int]] = {}
    for i in range(n):
        groups.setdefault(colors[i], []).append(i)
    ordered_groups = [groups[c] for c in sorted(groups)]
    budget = 1
    perm_sets = []
    for g in ordered_groups:
        size = 1
        for k in range(2, len(g) + 1):
            size *= k
        if budget * size <= _PERMUTATION_BUDGET:
            budget *= size
            perm_sets.append(list(itertools.permutations(g)))
        else:
            # beyond the budget symmetric groups keep their stable order;
            # equality then falls back to the equivalence check
            perm_sets.append([tuple(g)])
    best: str | None = None
    for combo in itertools.product(*perm_sets):
        order = tuple(itertools.chain.from_iterable(combo))
        s = _serialize(q, order, ordered_head)
        if best is None or s < best:
            best = s
    if best is None:
        best = _serialize(q, (), ordered_head)
    return best


@lru_cache(maxsize=200_000)
def canonical_key(q: ConjunctiveQuery) -> str:
    """Serialization invariant under variable renaming and atom reordering.

    Equal keys imply equivalent queries with positionally matching heads;
    the reverse holds for queries whose symmetric atom groups fit the
    permutation budget, which covers every size this engine searches over.
    """
    return _canonical(q, ordered_head=True)


@lru_cache(maxsize=200_000)
def view_key(q: ConjunctiveQuery) -> str:
    """Like canonical_key but order-insensitive on the head.

    Two views that differ only in head ordering store the same columns, so
    state signatures treat them as the same view.
    """
    return _canonical(q, ordered_head=False)


@lru_cache(maxsize=200_000)
def canonical_body_key(q: ConjunctiveQuery) -> str:
    """Canonical form of the body alone (head ignored)."""
    return _canonical(ConjunctiveQuery("", (), q.body), ordered_head=True)


# ---------------------------------------------------------------------------
# query text

_HEAD_RE = re.compile(r"^\s*([A-Za-z_][\w.-]*)\s*\(([^)]*)\)\s*$")
_ATOM_RE = re.compile(r"t\s*\(([^)]*)\)")


def _parse_term(tok: str, where: str) -> Term:
    tok = tok.strip()
    if not tok:
        raise QueryError(f"{where}: empty term")
    if tok.startswith("<") and tok.endswith(">") and len(tok) > 2:
        return Const(tok[1:-1])
    if tok.startswith('"'):
        return Const(tok)
    if tok.startswith("?"):
        if len(tok) == 1:
            raise QueryError(f"{where}: bare '?' is not a variable name")
        return Var(tok[1:])
    if tok[0].isupper():
        return Var(tok)
    return Const(tok)


def _split_args(text: str, where: str) -> list[str]:
    parts: list[str] = []
    depth_quote = False
    cur = []
    for ch in text:
        if ch == '"':
            depth_quote = not depth_quote
            cur.append(ch)
        elif ch == "," and not depth_quote:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    if depth_quote:
        raise QueryError(f"{where}: unterminated string literal")
    return parts


def parse_queries(text: str, validate: bool = True) -> list[ConjunctiveQuery]:
    """Parse workload query text.

    One query per statement, terminated by '.'.  Variables begin with an
    uppercase letter or '?'; '#' starts a comment.  A query whose join graph
    has several components is split into one query per component, suffixed
    _p1, _p2, ... in body order.
    """
    stripped = []
    for line in text.splitlines():
        quote = False
        out = []
        for ch in line:
            if ch == '"':
                quote = not quote
            if ch == "#" and not quote:
                break
            out.append(ch)
        stripped.append("".join(out))
    blob = "\n".join(stripped)

    queries: list[ConjunctiveQuery] = []
    seen_names: set[str] = set()
    for stmt_no, stmt in enumerate(blob.split("."), start=1):
        stmt = stmt.strip()
        if not stmt:
            continue
        where = f"statement {stmt_no}"
        if ":-" not in stmt:
            raise QueryError(f"{where}: missing ':-'")
        head_text, body_text = stmt.split(":-", 1)
        m = _HEAD_RE.match(head_text)
        if not m:
            raise QueryError(f"{where}: malformed head {head_text.strip()!r}")
        name = m.group(1)
        if name in seen_names:
            raise QueryError(f"{where}: duplicate query name {name!r}")
        seen_names.add(name)
        head_terms: list[Term] = []
        args = m.group(2).strip()
        if args:
            for tok in _split_args(args, where):
                t = _parse_term(tok, where)
                if isinstance(t, Const):
                    raise QueryError(f"{where}: constant {t} in head")
                head_terms.append(t)
        atoms: list[TripleAtom] = []
        consumed = _ATOM_RE.sub("", body_text).replace(",", "").strip()
        if consumed:
            raise QueryError(f"{where}: unrecognized body text {consumed!r}")
        for am in _ATOM_RE.finditer(body_text):
            toks = _split_args(am.group(1), where)
            if len(toks) != 3:
                raise QueryError(f"{where}: atom needs 3 terms, got {len(toks)}")
            atoms.append(TripleAtom(*(_parse_term(t, where) for t in toks)))
        if not atoms:
            raise QueryError(f"{where}: empty body")
        q = ConjunctiveQuery(name, tuple(head_terms), tuple(atoms))
        parts = connected_components(q.body)
        if len(parts) == 1:
            if validate:
                check_workload_query(q)
            queries.append(q)
        else:
            for i, part in enumerate(parts, start=1):
                sub_body = tuple(q.body[j] for j in part)
                sub_vars = set()
                for a in sub_body:
                    sub_vars.update(a.variables())
                sub_head = tuple(t for t in q.head if t in sub_vars)
                sub = ConjunctiveQuery(f"{name}_p{i}", sub_head, sub_body)
                if validate:
                    check_workload_query(sub)
                queries.append(sub)
            # every head variable must survive in some part
            if validate:
                covered = {t for p in queries[-len(parts):] for t in p.head}
                missing = [t for t in q.head if t not in covered]
                if missing:
                    raise QueryError(f"{where}: head variable {missing[0]} not bound in body")
    return queries


def format_query(q: ConjunctiveQuery | UnionQuery) -> str:
    if isinstance(q, UnionQuery):
        lines = []
        for i, m in enumerate(q.members, start=1):
            lines.append(format_query(ConjunctiveQuery(f"{q.name}__{i}", m.head, m.body)))
        return "\n".join(lines)
    head = ", ".join(_format_term(t) for t in q.head)
    body = ", ".join(
        "t(" + ", ".join(_format_term(t) for t in a.terms) + ")" for a in q.body
    )
    return f"{q.name}({head}) :- {body} ."


def _format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name if t.name[:1].isupper() else "?" + t.name
    # constants that would read back as variables get IRI brackets
    if t.symbol[:1].isupper() or t.symbol.startswith("?"):
        return f"<{t.symbol}>"
    return t.symbol
