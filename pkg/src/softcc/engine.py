"""Small-step execution of agents against a shared store.

The store starts at constant one and only ever moves down the constraint
order as tells combine new constraints in.  It is kept as a factor list;
best level, entailment and projections go through variable elimination so
the joint table is never built unless it is small.

A configuration is an agent plus a store (plus the fresh-name counters a
run has used).  ``step`` returns every rule application at once:

  stop succeeds; tell combines and then checks its threshold, failing
  when the would-be store falls strictly below it; ask checks its
  threshold and fires only when the store entails the asked constraint;
  choice steps by any branch whose guard fires, fails when all branches
  fail, hangs when the rest hang; parallel composition interleaves and
  continues as the other side once one side succeeds, failing if either
  side fails; exists runs its body on a fresh variable; calls unfold.

A lone ask with nothing to fire on is not a verdict by itself: as long
as any other component can move the run goes on, and the configuration
is classified Hang only when nothing anywhere can step.

``run_all`` explores every maximal run depth-first, deduplicating
structurally identical configurations, detecting on-path repetition as
divergence, and counting maximal runs exactly.  ``iter_runs`` yields the
runs one by one in leftmost order.  ``run_one`` follows a single run
under a leftmost or seeded random policy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from .constraints import (
    Constraint,
    combine_project,
    entails_witness,
    strictly_below,
)
from .lang import (
    Agent,
    Ask,
    Call,
    Cut,
    Eventual,
    Exists,
    Level,
    Par,
    Program,
    Stop,
    Sum,
    Tell,
    substitute,
)
from .semiring import Value


class EngineError(RuntimeError):
    pass


# -- the store ----------------------------------------------------------

# Stores whose joint table fits in this many cells compare pointwise;
# larger ones compare by their factor multiset, which is still sound for
# deduplication but can miss a repeat that is only pointwise.
_POINTWISE_CELLS = 4096


class Store:
    """An immutable factored store: the combination of everything told."""

    __slots__ = ("system", "factors", "_keyset", "_key", "_blevel", "_entails", "_mat")

    def __init__(self, system, factors: Tuple[Constraint, ...] = ()):
        self.system = system
        self.factors = factors
        self._keyset = frozenset(f.canonical_key() for f in factors)
        self._key = None
        self._blevel = None
        self._entails = {}
        self._mat = None

    def tell(self, c: Constraint) -> "Store":
        """The store after combining c in.

        With an idempotent x, re-telling a constraint already present
        leaves the store pointwise unchanged, so the factor is dropped;
        that keeps repeated tells recognizable as repeats.
        """
        if self.system.semiring.idempotent_times and c.canonical_key() in self._keyset:
            return self
        return Store(self.system, self.factors + (c,))

    def vars(self) -> tuple:
        out: tuple = ()
        for f in self.factors:
            out = out + tuple(v for v in f.vars if v not in out)
        return out

    def key(self) -> tuple:
        if self._key is None:
            nvars = len(self.vars())
            if self.system.cells(nvars) <= _POINTWISE_CELLS:
                self._key = ("pw", self.materialize().canonical_key())
            else:
                self._key = ("fs", tuple(sorted(self._keyset, key=repr)))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Store) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def materialize(self) -> Constraint:
        """The store as one constraint; only sensible while it stays small."""
        if self._mat is None:
            self._mat = combine_project(self.factors, self.vars(), self.system)
        return self._mat

    def blevel(self) -> Value:
        if self._blevel is None:
            self._blevel = combine_project(self.factors, (), self.system).scalar()
        return self._blevel

    def entails(self, c: Constraint) -> bool:
        ck = c.canonical_key()
        if ck in self._keyset:
            return True  # a factor is always entailed
        got = self._entails.get(ck)
        if got is None:
            proj = combine_project(self.factors, c.vars, self.system)
            from .constraints import leqc

            got = self._entails[ck] = leqc(proj, c)
        return got

    def witness(self, c: Constraint) -> Optional[dict]:
        """An assignment refuting entailment of c, or None if entailed."""
        factors = self.factors or (self.system.constant(self.system.semiring.one),)
        return entails_witness(list(factors), c)

    def below_cut(self, phi: Constraint) -> bool:
        return strictly_below(self.materialize(), phi)

    def project(self, keep) -> Constraint:
        return combine_project(self.factors, keep, self.system)

    def value_at(self, assignment) -> Value:
        s = self.system.semiring
        return s.combine_all(f.eval(assignment) for f in self.factors)

    def __repr__(self):
        return f"Store({len(self.factors)} factors over {self.vars()})"


# -- configurations -----------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    """One point of a run: running agent, or a terminal verdict."""

    kind: str  # running | success | fail | hang
    agent: Optional[Agent]
    store: Store
    fresh: Tuple[Tuple[str, int], ...] = ()
    blocked: Tuple[Constraint, ...] = field(default=(), compare=False)

    def fresh_total(self) -> int:
        return sum(n for _, n in self.fresh)


@dataclass(frozen=True)
class StepEdge:
    rule: str
    target: Configuration
    pruned: bool = False  # the edge is a fail at a threshold the cut raised


@dataclass
class _Move:
    rule: str
    kind: str  # run | success | fail
    agent: Optional[Agent]
    store: Store
    fresh: Dict[str, int]
    pruned: bool = False


def _moves(agent: Agent, store: Store, fresh: Dict[str, int], program: Program):
    """All rule applications of an agent: (moves, hang-candidates)."""
    if isinstance(agent, Stop):
        return [_Move("stop", "success", None, store, fresh)], []

    if isinstance(agent, Tell):
        c = program.resolve(agent.con)
        new = store.tell(c)
        t = agent.threshold
        if isinstance(t, Eventual):
            return [_Move("eventual-tell", "run", agent.body, new, fresh)], []
        if isinstance(t, Level):
            s = store.system.semiring
            if s.lt(new.blevel(), t.value):
                return [_Move("valued-tell-fail", "fail", None, store, fresh)], []
            return [_Move("valued-tell", "run", agent.body, new, fresh)], []
        phi = program.threshold_constraint(t)
        if new.below_cut(phi):
            return [_Move("tell-fail", "fail", None, store, fresh, pruned=t.raised)], []
        return [_Move("tell", "run", agent.body, new, fresh)], []

    if isinstance(agent, Ask):
        c = program.resolve(agent.con)
        t = agent.threshold
        if isinstance(t, Level):
            s = store.system.semiring
            if s.lt(store.blevel(), t.value):
                return [_Move("valued-ask-fail", "fail", None, store, fresh)], []
            if store.entails(c):
                return [_Move("valued-ask", "run", agent.body, store, fresh)], []
            return [], [("valued-ask-hang", c)]
        if isinstance(t, Cut):
            phi = program.threshold_constraint(t)
            if store.below_cut(phi):
                return [_Move("ask-fail", "fail", None, store, fresh, pruned=t.raised)], []
            if store.entails(c):
                return [_Move("ask", "run", agent.body, store, fresh)], []
            return [], [("ask-hang", c)]
        if store.entails(c):
            return [_Move("eventual-ask", "run", agent.body, store, fresh)], []
        return [], [("eventual-ask-hang", c)]

    if isinstance(agent, Sum):
        proceeds: List[_Move] = []
        fails: List[_Move] = []
        hangs = []
        for b in agent.branches:
            m, h = _moves(b, store, fresh, program)
            for mv in m:
                (proceeds if mv.kind == "run" else fails).append(mv)
            hangs.extend(h)
        if proceeds:
            return proceeds, []
        if not hangs:
            # every branch failed its threshold check
            pruned = any(mv.pruned for mv in fails)
            return [_Move("choice-fail", "fail", None, store, fresh, pruned=pruned)], []
        return [], [("choice-hang", c) for _, c in hangs]

    if isinstance(agent, Par):
        lm, lh = _moves(agent.left, store, fresh, program)
        rm, rh = _moves(agent.right, store, fresh, program)
        out: List[_Move] = []
        for mv in lm:
            if mv.kind == "success":
                out.append(_Move(mv.rule, "run", agent.right, mv.store, mv.fresh))
            elif mv.kind == "run":
                out.append(
                    _Move(mv.rule, "run", Par(mv.agent, agent.right), mv.store, mv.fresh)
                )
            else:
                out.append(mv)
        for mv in rm:
            if mv.kind == "success":
                out.append(_Move(mv.rule, "run", agent.left, mv.store, mv.fresh))
            elif mv.kind == "run":
                out.append(
                    _Move(mv.rule, "run", Par(agent.left, mv.agent), mv.store, mv.fresh)
                )
            else:
                out.append(mv)
        return out, lh + rh

    if isinstance(agent, Exists):
        base = agent.var
        k = fresh.get(base, 0)
        y = f"{base}#{k}"
        bumped = dict(fresh)
        bumped[base] = k + 1
        inner = substitute(agent.body, {base: y})
        return _moves(inner, store, bumped, program)

    if isinstance(agent, Call):
        d = program.decls.get(agent.name)
        if d is None:
            raise EngineError(f"unknown proc {agent.name!r}")
        if len(agent.args) != len(d.params):
            raise EngineError(f"arity mismatch calling {agent.name!r}")
        body = substitute(d.body, dict(zip(d.params, agent.args)))
        return [_Move("call", "run", body, store, fresh)], []

    raise EngineError(f"not an agent: {agent!r}")


def step(cfg: Configuration, program: Program) -> List[StepEdge]:
    """Every rule application from a configuration, deduplicated.

    Terminal configurations have no successors.  A running configuration
    where nothing can move and at least one ask is waiting steps to Hang.
    """
    if cfg.kind != "running":
        return []
    moves, hangs = _moves(cfg.agent, cfg.store, dict(cfg.fresh), program)
    edges: List[StepEdge] = []
    seen = set()
    for mv in moves:
        kind = "running" if mv.kind == "run" else mv.kind
        target = Configuration(
            kind,
            mv.agent,
            mv.store,
            tuple(sorted(mv.fresh.items())),
        )
        if target in seen:
            continue
        seen.add(target)
        edges.append(StepEdge(mv.rule, target, mv.pruned))
    if not edges:
        if not hangs:
            raise EngineError("running configuration with no rule and no waiting ask")
        rule = hangs[0][0] if len(hangs) == 1 else "quiescence"
        target = Configuration(
            "hang",
            cfg.agent,
            cfg.store,
            cfg.fresh,
            blocked=tuple(c for _, c in hangs),
        )
        edges.append(StepEdge(rule, target))
    return edges


# -- run records --------------------------------------------------------


@dataclass(frozen=True)
class RunLimits:
    max_steps: int = 100_000
    max_fresh_vars: int = 1000


@dataclass
class RunRecord:
    """One (class of) maximal run: terminal kind, final state, one trace."""

    kind: str  # success | fail | hang | divergent | bound_exceeded
    config: Optional[Configuration]
    trace: Tuple[Tuple[str, Configuration], ...]
    paths: int = 1
    pruned: bool = False

    @property
    def steps(self) -> int:
        return len(self.trace)

    @property
    def store(self) -> Optional[Store]:
        return self.config.store if self.config is not None else None


@dataclass
class RunResult:
    records: List[RunRecord]
    total_runs: int
    expansions: int


def _record_key(rec: RunRecord):
    if rec.kind in ("divergent", "bound_exceeded"):
        return (rec.kind, None)
    return (rec.kind, rec.config)


class _Frame:
    __slots__ = ("cfg", "depth", "edges", "idx", "agg", "low", "pending")

    def __init__(self, cfg, depth, edges):
        self.cfg = cfg
        self.depth = depth
        self.edges = edges
        self.idx = 0
        self.agg: Dict = {}
        self.low = float("inf")
        self.pending = None


def _merge(agg: Dict, rec: RunRecord):
    key = _record_key(rec)
    old = agg.get(key)
    if old is None:
        agg[key] = rec
    else:
        old.paths += rec.paths
        old.pruned = old.pruned or rec.pruned


def initial_configuration(program: Program) -> Configuration:
    if program.main is None:
        raise EngineError("program has no agent to run")
    return Configuration("running", program.main, Store(program.system), ())


def run_all(program: Program, limits: RunLimits = RunLimits()) -> RunResult:
    """Depth-first exploration of every maximal run.

    Structurally repeated configurations are explored once; repetition on
    the current path is reported as a divergent run; paths that exhaust a
    limit are reported as bound_exceeded.  total_runs counts maximal runs
    in the deduplicated transition graph.
    """
    init = initial_configuration(program)
    memo: Dict[Configuration, List[RunRecord]] = {}
    onpath: Dict[Configuration, int] = {}
    expansions = 0

    def bound(depth) -> RunRecord:
        return RunRecord("bound_exceeded", None, ())

    root = _Frame(init, 0, None)
    onpath[init] = 0
    root.edges = step(init, program)
    expansions += 1
    stack = [root]

    while stack:
        f = stack[-1]
        if f.pending is not None:
            # a child frame just completed; fold its records in
            rule, nxt, _pruned, child = f.pending
            f.pending = None
            f.low = min(f.low, child.low)
            for rec in child.agg.values():
                _merge(
                    f.agg,
                    RunRecord(
                        rec.kind,
                        rec.config,
                        ((rule, nxt),) + rec.trace,
                        rec.paths,
                        rec.pruned,
                    ),
                )
        if f.idx < len(f.edges):
            edge = f.edges[f.idx]
            f.idx += 1
            rule, nxt, pruned = edge.rule, edge.target, edge.pruned
            if nxt.kind != "running":
                _merge(
                    f.agg,
                    RunRecord(nxt.kind, nxt, ((rule, nxt),), 1, pruned),
                )
                continue
            if nxt in memo:
                for rec in memo[nxt]:
                    _merge(
                        f.agg,
                        RunRecord(
                            rec.kind,
                            rec.config,
                            ((rule, nxt),) + rec.trace,
                            rec.paths,
                            rec.pruned,
                        ),
                    )
                continue
            if nxt in onpath:
                f.low = min(f.low, onpath[nxt])
                _merge(f.agg, RunRecord("divergent", None, ((rule, nxt),)))
                continue
            if f.depth + 1 >= limits.max_steps or nxt.fresh_total() > limits.max_fresh_vars:
                _merge(f.agg, bound(f.depth + 1))
                continue
            child = _Frame(nxt, f.depth + 1, step(nxt, program))
            expansions += 1
            onpath[nxt] = f.depth + 1
            f.pending = (rule, nxt, pruned, child)
            stack.append(child)
            continue
        # frame complete
        stack.pop()
        del onpath[f.cfg]
        recs = list(f.agg.values())
        if f.low >= f.depth:
            memo[f.cfg] = recs
        if stack:
            parent = stack[-1]
            rule, nxt, pruned, _ = parent.pending
            parent.pending = (rule, nxt, pruned, f)

    records = list(root.agg.values())
    total = sum(r.paths for r in records)
    return RunResult(records, total, expansions)


def iter_runs(
    program: Program, limits: RunLimits = RunLimits()
) -> Iterator[RunRecord]:
    """Yield each maximal run, leftmost-first, one full trace at a time."""
    init = initial_configuration(program)
    trace: List[Tuple[str, Configuration]] = []
    onpath = {init}
    # stack of (edge list, index); trace mirrors the stack depth
    stack: List[Tuple[List[StepEdge], int]] = [(step(init, program), 0)]
    while stack:
        edges, idx = stack[-1]
        if idx >= len(edges):
            stack.pop()
            if trace:
                _, gone = trace.pop()
                onpath.discard(gone)
            continue
        stack[-1] = (edges, idx + 1)
        edge = edges[idx]
        nxt = edge.target
        if nxt.kind != "running":
            yield RunRecord(
                nxt.kind, nxt, tuple(trace) + ((edge.rule, nxt),), 1, edge.pruned
            )
            continue
        if nxt in onpath:
            yield RunRecord("divergent", None, tuple(trace) + ((edge.rule, nxt),))
            continue
        if len(trace) + 1 >= limits.max_steps or nxt.fresh_total() > limits.max_fresh_vars:
            yield RunRecord("bound_exceeded", None, tuple(trace))
            continue
        trace.append((edge.rule, nxt))
        onpath.add(nxt)
        stack.append((step(nxt, program), 0))


def run_one(
    program: Program,
    policy: str = "leftmost",
    seed: Optional[int] = None,
    limits: RunLimits = RunLimits(),
) -> RunRecord:
    """Follow one maximal run under a scheduling policy."""
    if policy not in ("leftmost", "random"):
        raise EngineError(f"unknown policy {policy!r}")
    rng = None
    if policy == "random":
        if seed is None:
            raise EngineError("random policy needs a seed")
        rng = random.Random(seed)
    cfg = initial_configuration(program)
    seen = {cfg}
    trace: List[Tuple[str, Configuration]] = []
    while True:
        if len(trace) >= limits.max_steps:
            return RunRecord("bound_exceeded", None, tuple(trace))
        edges = step(cfg, program)
        edge = edges[0] if rng is None else rng.choice(edges)
        nxt = edge.target
        trace.append((edge.rule, nxt))
        if nxt.kind != "running":
            return RunRecord(nxt.kind, nxt, tuple(trace), 1, edge.pruned)
        if nxt in seen:
            return RunRecord("divergent", None, tuple(trace))
        if nxt.fresh_total() > limits.max_fresh_vars:
            return RunRecord("bound_exceeded", None, tuple(trace))
        seen.add(nxt)
        cfg = nxt
