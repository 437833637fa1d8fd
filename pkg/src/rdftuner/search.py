"""Search strategies over the state space.

All strategies share one bookkeeping core: states are deduplicated by
signature, every transition application is counted (and reported to an
optional observer), stop conditions forbid expanding a state without
forgetting it, and the best state found so far is tracked with a
deterministic tie-break of (cost, number of views, signature).

  exnaive  exhaustive, cheapest-first frontier, all transition kinds from
           every state.
  exstr    exhaustive but stratified: closes the space under view breaks,
           then selection cuts, then join cuts, then fusions.  Reaches the
           same states while applying no more transitions than exnaive.
  dfs      exhaustive depth-first variant of the stratified order with a
           frontier bounded by the recursion depth.
  gstr     greedy stratified: keeps only the cheapest state of each stratum.

Aggressive view fusion (avf) closes every newly created state under fusion
before admitting it, discarding the intermediates.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .cost import CostBreakdown, Estimator
from .states import KINDS, State, Transition, TransitionContext, iter_transitions


@dataclass
class SearchConfig:
    strategy: str = "dfs"
    avf: bool = False
    stop_tt: bool = False
    stop_var: bool = False
    timeout: float | None = None
    max_states: int | None = None
    seed: int | None = None  # reserved for tie shuffling; search is deterministic
    on_transition: Callable[[str, State, State], None] | None = None


@dataclass
class SearchResult:
    best: State
    best_cost: CostBreakdown
    initial: State
    initial_cost: CostBreakdown
    created: int
    duplicates: int
    discarded: int
    explored: int
    transitions: int
    peak_frontier: int
    elapsed: float
    timed_out: bool
    trace: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def rcr(self) -> float:
        c0 = self.initial_cost.total
        if c0 <= 0.0:
            return 0.0
        return (c0 - self.best_cost.total) / c0


STRATEGIES = ("exnaive", "exstr", "dfs", "gstr")


def is_triple_table(state: State) -> bool:
    for v in state.views:
        if len(v.body) == 1:
            a = v.body[0]
            if len(set(a.variables())) == 3:
                return True
    return False


def is_all_variable(state: State) -> bool:
    return all(
        all(a.n_constants() == 0 for a in v.body) for v in state.views
    )


class _Run:
    def __init__(self, initial: State, estimator: Estimator,
                 ctx: TransitionContext, cfg: SearchConfig):
        self.est = estimator
        self.ctx = ctx
        self.cfg = cfg
        self.t0 = time.perf_counter()
        self.deadline = None if cfg.timeout is None else self.t0 + cfg.timeout
        self.timed_out = False

        self.created = 0
        self.duplicates = 0
        self.discarded = 0
        self.explored = 0
        self.transitions = 0
        self.peak = 0

        self.seen: dict[tuple[str, ...], State] = {}
        self.terminal: set[tuple[str, ...]] = set()
        self._avf_memo: dict[tuple[str, ...], State] = {}

        self.initial = initial
        self.initial_cost = estimator.state_cost(initial)
        self.best: State | None = None
        self.best_key: tuple | None = None
        self.trace: list[tuple[float, float, float]] = []

        # a stop condition already met by the initial state is suppressed
        self.stop_var_active = cfg.stop_var and not is_all_variable(initial)
        self.stop_tt_active = cfg.stop_tt

    # -- plumbing ---------------------------------------------------------

    def out_of_time(self) -> bool:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            self.timed_out = True
            return True
        return False

    def note_peak(self, size: int) -> None:
        if size > self.peak:
            self.peak = size

    def _consider_best(self, state: State) -> None:
        cost = self.est.state_cost(state)
        key = (cost.total, len(state.views), state.signature)
        if self.best_key is None or key < self.best_key:
            self.best = state
            self.best_key = key
            elapsed = time.perf_counter() - self.t0
            c0 = self.initial_cost.total
            rcr = 0.0 if c0 <= 0.0 else (c0 - cost.total) / c0
            self.trace.append((elapsed, cost.total, rcr))

    def _observe(self, kind: str, parent: State, child: State) -> None:
        if self.cfg.on_transition is not None:
            self.cfg.on_transition(kind, parent, child)

    def _fusion_closure(self, state: State) -> State:
        """Fuse pairs of isomorphic views to a fixpoint.  The states along
        the way are applied transitions and discards, but only the fixpoint
        ever counts as created: it alone enters the candidate space."""
        memo = self._avf_memo.get(state.signature)
        if memo is not None:
            return memo
        start_sig = state.signature
        cur = state
        while True:
            choices = list(iter_transitions(cur, self.ctx, ("VF",)))
            if not choices:
                break
            # several fusions (or head layouts) may apply; commit to the
            # cheapest so aggressive fusion never worsens the best cost
            tr = min(
                choices,
                key=lambda t: (self.est.state_cost(t.state).total, t.state.signature),
            )
            self.transitions += 1
            self._observe("VF", cur, tr.state)
            self.discarded += 1
            cur = tr.state
        self._avf_memo[start_sig] = cur
        return cur

    def admit(self, state: State) -> tuple[State, bool]:
        """Dedup (and fusion-close) a reached state.  Returns the canonical
        state object and whether it is new and expandable."""
        if self.cfg.avf:
            state = self._fusion_closure(state)
        existing = self.seen.get(state.signature)
        if existing is not None:
            self.duplicates += 1
            return existing, False
        self.seen[state.signature] = state
        self.created += 1
        self._consider_best(state)
        stopped = (self.stop_tt_active and is_triple_table(state)) or (
            self.stop_var_active and is_all_variable(state)
        )
        if stopped:
            self.terminal.add(state.signature)
            self.discarded += 1
            return state, False
        return state, True

    def result(self) -> SearchResult:
        assert self.best is not None
        return SearchResult(
            best=self.best,
            best_cost=self.est.state_cost(self.best),
            initial=self.initial,
            initial_cost=self.initial_cost,
            created=self.created,
            duplicates=self.duplicates,
            discarded=self.discarded,
            explored=self.explored,
            transitions=self.transitions,
            peak_frontier=self.peak,
            elapsed=time.perf_counter() - self.t0,
            timed_out=self.timed_out,
            trace=self.trace,
        )

    # -- strategies -------------------------------------------------------

    def _priority(self, state: State) -> tuple:
        cost = self.est.state_cost(state)
        return (cost.total, len(state.views), state.signature)

    def run_exnaive(self) -> SearchResult:
        root, expandable = self.admit(self.initial)
        heap: list[tuple] = []
        if expandable:
            heapq.heappush(heap, self._priority(root) + (root,))
        while heap:
            self.note_peak(len(heap))
            if self.out_of_time():
                break
            entry = heapq.heappop(heap)
            state = entry[-1]
            self.explored += 1
            aborted = False
            for tr in iter_transitions(state, self.ctx, KINDS):
                if self.out_of_time():
                    aborted = True
                    break
                self.transitions += 1
                self._observe(tr.kind, state, tr.state)
                child, expandable = self.admit(tr.state)
                if expandable:
                    heapq.heappush(heap, self._priority(child) + (child,))
            if aborted:
                break
            if self.cfg.max_states is not None and len(heap) > self.cfg.max_states:
                keep = heapq.nsmallest(self.cfg.max_states, heap)
                self.discarded += len(heap) - len(keep)
                heap = keep
                heapq.heapify(heap)
        return self.result()

    def run_exstr(self) -> SearchResult:
        root, _ = self.admit(self.initial)
        order: list[State] = [root]
        order_sigs = {root.signature}
        for kind in KINDS:
            if self.timed_out or self.out_of_time():
                break
            worklist = deque(s for s in order if s.signature not in self.terminal)
            while worklist:
                self.note_peak(len(worklist))
                if self.out_of_time():
                    break
                state = worklist.popleft()
                self.explored += 1
                for tr in iter_transitions(state, self.ctx, (kind,)):
                    if self.out_of_time():
                        break
                    self.transitions += 1
                    self._observe(tr.kind, state, tr.state)
                    child, expandable = self.admit(tr.state)
                    if child.signature not in order_sigs:
                        order_sigs.add(child.signature)
                        order.append(child)
                        if expandable:
                            worklist.append(child)
        return self.result()

    def run_dfs(self) -> SearchResult:
        root, expandable = self.admit(self.initial)
        expanded: dict[tuple[str, ...], int] = {}

        def jobs(state: State, j0: int):
            for j in range(j0, len(KINDS)):
                mask = expanded.get(state.signature, 0)
                if mask & (1 << j):
                    continue
                expanded[state.signature] = mask | (1 << j)
                self.explored += 1
                for tr in iter_transitions(state, self.ctx, (KINDS[j],)):
                    yield j, tr

        stack: list = []
        if expandable:
            stack.append((root, jobs(root, 0)))
        while stack:
            self.note_peak(len(stack))
            if self.out_of_time():
                break
            _, gen = stack[-1]
            item = next(gen, None)
            if item is None:
                stack.pop()
                continue
            j, tr = item
            parent = stack[-1][0]
            self.transitions += 1
            self._observe(tr.kind, parent, tr.state)
            child, _ = self.admit(tr.state)
            if child.signature in self.terminal:
                continue
            # descend if any stratum from j upward is still unexpanded there
            upper = (((1 << len(KINDS)) - 1) >> j) << j
            if (expanded.get(child.signature, 0) & upper) != upper:
                stack.append((child, jobs(child, j)))
        return self.result()

    def run_gstr(self) -> SearchResult:
        current, _ = self.admit(self.initial)
        for kind in KINDS:
            if self.timed_out or self.out_of_time():
                break
            if current.signature in self.terminal:
                break
            phase: dict[tuple[str, ...], State] = {current.signature: current}
            worklist = deque([current])
            while worklist:
                self.note_peak(len(worklist))
                if self.out_of_time():
                    break
                state = worklist.popleft()
                self.explored += 1
                for tr in iter_transitions(state, self.ctx, (kind,)):
                    if self.out_of_time():
                        break
                    self.transitions += 1
                    self._observe(tr.kind, state, tr.state)
                    child, expandable = self.admit(tr.state)
                    if child.signature not in phase:
                        phase[child.signature] = child
                        if expandable:
                            worklist.append(child)
                cap = self.cfg.max_states
                if cap is not None and len(worklist) > cap:
                    ranked = sorted(worklist, key=self._priority)
                    self.discarded += len(worklist) - cap
                    worklist = deque(ranked[:cap])
            winner = min(phase.values(), key=self._priority)
            self.discarded += len(phase) - 1
            current = winner
        return self.result()


def run_search(
    initial: State,
    estimator: Estimator,
    ctx: TransitionContext,
    config: SearchConfig | None = None,
) -> SearchResult:
    cfg = config or SearchConfig()
    if cfg.strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {cfg.strategy!r}")
    run = _Run(initial, estimator, ctx, cfg)
    return {
        "exnaive": run.run_exnaive,
        "exstr": run.run_exstr,
        "dfs": run.run_dfs,
        "gstr": run.run_gstr,
    }[cfg.strategy]()
