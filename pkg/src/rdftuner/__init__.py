"""Materialized view selection for RDF triple pattern workloads.

Given a triple store, an optional schema, and a workload of conjunctive
triple pattern queries, the tuner searches the space of candidate view
sets reachable through cost guided state transitions and reports the
cheapest set found together with a complete rewriting of every workload
query over those views.  Implicit, schema entailed triples are honored
through saturation or through query reformulation, before or after the
search.
"""

from .cost import CostWeights, Estimator
from .queries import (
    ConjunctiveQuery,
    Const,
    QueryError,
    TripleAtom,
    UnionQuery,
    Var,
    format_query,
    parse_queries,
)
from .reasoning import (
    Schema,
    SchemaError,
    format_schema,
    parse_schema,
    reformulate,
    saturate,
)
from .search import SearchConfig, SearchResult, run_search
from .states import State, TransitionContext, initial_state
from .stats import WorkloadStatistics, collect_statistics
from .store import (
    StoreError,
    TripleStore,
    dump_triples,
    evaluate,
    load_triples,
    materialize,
)
from .workload import WorkloadSpec, generate_workload, make_synthetic_store

__version__ = "0.1.0"

__all__ = [
    "ConjunctiveQuery",
    "Const",
    "CostWeights",
    "Estimator",
    "QueryError",
    "Schema",
    "SchemaError",
    "SearchConfig",
    "SearchResult",
    "State",
    "StoreError",
    "TransitionContext",
    "TripleAtom",
    "TripleStore",
    "UnionQuery",
    "Var",
    "WorkloadSpec",
    "WorkloadStatistics",
    "collect_statistics",
    "dump_triples",
    "evaluate",
    "format_query",
    "format_schema",
    "generate_workload",
    "initial_state",
    "load_triples",
    "make_synthetic_store",
    "materialize",
    "parse_queries",
    "parse_schema",
    "reformulate",
    "run_search",
    "saturate",
    "__version__",
]
