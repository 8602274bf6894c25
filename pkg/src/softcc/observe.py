"""Observables of a program's runs, and cut-based pruning.

The observables collect what the maximal runs show: the set of final
stores of successful runs projected onto the free variables of the main
agent (fresh variables are discarded by the projection), their +-fold as
the don't-know solution, and flags for failing, hanging, divergent and
limit-hitting runs.

The cut transformation raises every constraint threshold that lies
strictly below a bound psi up to psi, turning runs that cannot beat an
already-found solution into early failures.  Iterating it — explore
until a new solution appears, fold it into psi, restart — computes the
don't-know solution while pruning dominated runs, in the style of
branch and bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

from .constraints import Constraint, leqc, oplus, oplus_all, pointwise_eq, strictly_below
from .engine import RunLimits, RunRecord, RunResult, iter_runs, run_all
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
    format_value,
    free_vars,
)


class ObserveError(RuntimeError):
    pass


FILTER_MODES = ("all", "best", "worst", "frontier")


@dataclass
class Observables:
    success_set: List[Constraint]
    dk_solution: Constraint
    fail: bool
    fail_dk: bool
    hang: bool
    divergent: bool
    bound_exceeded: bool
    obs_vars: Tuple[str, ...]
    result: RunResult = field(repr=False, default=None)


def observation_vars(program: Program) -> Tuple[str, ...]:
    return tuple(sorted(free_vars(program.main)))


def _maximal(items: List[Constraint], strict=strictly_below) -> List[Constraint]:
    out = []
    for c in items:
        if not any(strict(c, d) for d in items if d is not c):
            out.append(c)
    return out


def filter_success_set(items: List[Constraint], mode: str) -> List[Constraint]:
    """Post-filter a success set: everything, the order-maximal elements,
    the order-minimal elements, or both frontiers together."""
    if mode == "all":
        return list(items)
    if mode == "best":
        return _maximal(items)
    if mode == "worst":
        return _maximal(items, strict=lambda a, b: strictly_below(b, a))
    if mode == "frontier":
        best = filter_success_set(items, "best")
        worst = filter_success_set(items, "worst")
        keys = {c.canonical_key() for c in best}
        return best + [c for c in worst if c.canonical_key() not in keys]
    raise ObserveError(f"unknown filter mode {mode!r}")


def observables_of(
    program: Program, result: RunResult, mode: str = "all"
) -> Observables:
    obs = observation_vars(program)
    projected: List[Constraint] = []
    seen = set()
    for rec in result.records:
        if rec.kind != "success":
            continue
        proj = rec.store.project(obs)
        key = proj.canonical_key()
        if key not in seen:
            seen.add(key)
            projected.append(proj)
    dk = oplus_all(projected, program.system)
    kinds = [r.kind for r in result.records]
    return Observables(
        success_set=filter_success_set(projected, mode),
        dk_solution=dk,
        fail=("fail" in kinds),
        fail_dk=bool(kinds) and all(k == "fail" for k in kinds),
        hang=("hang" in kinds),
        divergent=("divergent" in kinds),
        bound_exceeded=("bound_exceeded" in kinds),
        obs_vars=obs,
        result=result,
    )


def observe(
    program: Program, limits: RunLimits = RunLimits(), mode: str = "all"
) -> Observables:
    return observables_of(program, run_all(program, limits), mode)


def success_set(program: Program, limits: RunLimits = RunLimits()) -> List[Constraint]:
    return observe(program, limits).success_set


def dk_solution(program: Program, limits: RunLimits = RunLimits()) -> Constraint:
    return observe(program, limits).dk_solution


# -- the cut transformation ---------------------------------------------


def _cut_threshold(t, psi: Constraint, psi_is_zero: bool):
    if isinstance(t, Cut):
        if strictly_below(t.constraint, psi):
            return Cut(psi, None, raised=True)
        return t
    if isinstance(t, Eventual):
        # an eventual action is one whose threshold is the bottom
        # constraint, so a nonzero bound always raises it
        if not psi_is_zero:
            return Cut(psi, None, raised=True)
        return t
    return t  # Level thresholds are out of the cut's scope


def _cut_rec(a: Agent, psi: Constraint, psi_is_zero: bool) -> Agent:
    if isinstance(a, Stop):
        return a
    if isinstance(a, Tell):
        return replace(
            a,
            threshold=_cut_threshold(a.threshold, psi, psi_is_zero),
            body=_cut_rec(a.body, psi, psi_is_zero),
        )
    if isinstance(a, Ask):
        return replace(
            a,
            threshold=_cut_threshold(a.threshold, psi, psi_is_zero),
            body=_cut_rec(a.body, psi, psi_is_zero),
        )
    if isinstance(a, Sum):
        return Sum(tuple(_cut_rec(b, psi, psi_is_zero) for b in a.branches))
    if isinstance(a, Par):
        return Par(_cut_rec(a.left, psi, psi_is_zero), _cut_rec(a.right, psi, psi_is_zero))
    if isinstance(a, Exists):
        return replace(a, body=_cut_rec(a.body, psi, psi_is_zero))
    if isinstance(a, Call):
        return a
    raise ObserveError(f"not an agent: {a!r}")


def cut_agent(a: Agent, psi: Constraint) -> Agent:
    """Raise every constraint threshold strictly below psi up to psi."""
    zero = psi.system.constant(psi.system.semiring.zero)
    return _cut_rec(a, psi, pointwise_eq(psi, zero))


def cut_program(program: Program, psi: Constraint) -> Program:
    """cut_agent over the main agent and every procedure body."""
    zero = psi.system.constant(psi.system.semiring.zero)
    psi_is_zero = pointwise_eq(psi, zero)
    decls = {
        name: replace(d, body=_cut_rec(d.body, psi, psi_is_zero))
        for name, d in program.decls.items()
    }
    return replace(
        program, decls=decls, main=_cut_rec(program.main, psi, psi_is_zero)
    )


# -- branch and bound ----------------------------------------------------


@dataclass
class BBStats:
    iterations: int = 0  # number of times the bound was raised
    runs_pruned: int = 0  # runs that failed at a raised threshold
    runs_explored: int = 0  # maximal runs enumerated across all restarts


def _thresholds(a: Agent):
    if isinstance(a, (Tell, Ask)):
        yield a.threshold
        yield from _thresholds(a.body)
    elif isinstance(a, Sum):
        for b in a.branches:
            yield from _thresholds(b)
    elif isinstance(a, Par):
        yield from _thresholds(a.left)
        yield from _thresholds(a.right)
    elif isinstance(a, Exists):
        yield from _thresholds(a.body)


def solve_bb(
    program: Program, limits: RunLimits = RunLimits()
) -> Tuple[Constraint, BBStats]:
    """The don't-know solution by iterated cuts.

    Explore under the current bound until a success store not already
    below the bound appears, fold it in, restart; stop when a complete
    exploration under the bound finds nothing new.  The returned
    constraint pointwise equals the +-fold over all successful runs.
    """
    if program.main is None:
        raise ObserveError("program has no agent to run")
    agents = [program.main] + [d.body for d in program.decls.values()]
    for a in agents:
        for t in _thresholds(a):
            if isinstance(t, Level):
                raise ObserveError(
                    "branch and bound handles constraint thresholds only; "
                    "a semiring-level threshold cannot be raised to a bound"
                )
    system = program.system
    obs = observation_vars(program)
    psi = system.constant(system.semiring.zero)
    stats = BBStats()
    while True:
        current = cut_program(program, psi)
        found = None
        for rec in iter_runs(current, limits):
            stats.runs_explored += 1
            if rec.pruned:
                stats.runs_pruned += 1
            if rec.kind == "success":
                proj = rec.store.project(obs)
                if not leqc(proj, psi):
                    found = proj
                    break
        if found is None:
            return psi, stats
        psi = oplus(psi, found)
        stats.iterations += 1


# -- serialization -------------------------------------------------------


def value_json(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def constraint_json(c: Constraint) -> dict:
    return {
        "vars": list(c.vars),
        "support": sorted(c.support()),
        "rows": [
            {"assignment": list(row), "value": value_json(v)}
            for row, v in c.rows_sorted()
        ],
        "default": None if c.default is None else value_json(c.default),
    }


def observables_json(obs: Observables, bb: Optional[BBStats] = None) -> dict:
    return {
        "success_set": [constraint_json(c) for c in obs.success_set],
        "dk_solution": constraint_json(obs.dk_solution),
        "fail": obs.fail,
        "fail_dk": obs.fail_dk,
        "hang": obs.hang,
        "divergent": obs.divergent,
        "bound_exceeded": obs.bound_exceeded,
        "bb": None
        if bb is None
        else {"iterations": bb.iterations, "runs_pruned": bb.runs_pruned},
    }


def run_record_json(rec: RunRecord) -> dict:
    final = None
    if rec.store is not None:
        final = constraint_json(rec.store.materialize())
    return {
        "terminal": rec.kind,
        "final_store": final,
        "rule_trace": [rule for rule, _ in rec.trace],
        "steps": rec.steps,
    }


def constraint_text(c: Constraint) -> str:
    """One-line rendering: variables, then rows, then the default."""
    rows = " ".join(
        "({})={}".format(",".join(str(a) for a in row), format_value(v))
        for row, v in c.rows_sorted()
    )
    head = ",".join(c.vars) if c.vars else "()"
    parts = [f"{head}:"]
    if rows:
        parts.append(rows)
    if c.default is not None:
        parts.append(f"default={format_value(c.default)}")
    return " ".join(parts)
