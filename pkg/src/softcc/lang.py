"""Agent syntax: AST nodes, thresholds, substitution and programs.

Agents are the usual concurrent-constraint shapes: stop, tell and ask
with a threshold on the arrow, guarded choice, parallel composition,
local variables and procedure calls.  A program packages the header
(semiring, domain, variables), constraint templates, procedure
declarations, an optional main agent and an optional interest set.

Thresholds come in three forms.  Eventual is the bare arrow and never
blocks a tell.  Level carries a semiring value compared against the best
level of the store.  Cut carries a whole constraint compared against the
store itself.  Eventual behaves exactly like Level(zero) and like
Cut(constant zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

from . import constraints as C
from .constraints import Constraint, ConstraintSystem
from .semiring import Semiring, Value


class ProgramError(ValueError):
    """A malformed program: bad reference, arity, scope or table."""

    def __init__(self, msg: str, pos: Optional[Tuple[int, int]] = None):
        if pos is not None:
            msg = f"line {pos[0]}, column {pos[1]}: {msg}"
        super().__init__(msg)
        self.pos = pos


# -- constraint references inside agents --------------------------------


@dataclass(frozen=True)
class Ref:
    """A named constraint applied to variables; args None means bare use."""

    name: str
    args: Optional[Tuple[str, ...]]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DiagRef:
    """The built-in equality constraint between two variables."""

    x: str
    y: str
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ConstRef:
    """A constant constraint with empty support."""

    value: Value
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


CExpr = Union[Ref, DiagRef, ConstRef]


# -- thresholds ---------------------------------------------------------


@dataclass(frozen=True)
class Eventual:
    pass


@dataclass(frozen=True)
class Level:
    value: Value


@dataclass(frozen=True)
class Cut:
    constraint: Optional[Constraint]
    name: Optional[str] = None
    # set by the branch-and-bound transform; never part of identity
    raised: bool = field(default=False, compare=False)


Threshold = Union[Eventual, Level, Cut]


# -- agents -------------------------------------------------------------


@dataclass(frozen=True)
class Stop:
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Tell:
    con: CExpr
    threshold: Threshold
    body: "Agent"
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Ask:
    con: CExpr
    threshold: Threshold
    body: "Agent"
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sum:
    """Guarded choice; every branch is an Ask."""

    branches: Tuple[Ask, ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Par:
    left: "Agent"
    right: "Agent"
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Agent"
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple[str, ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


Agent = Union[Stop, Tell, Ask, Sum, Par, Exists, Call]


# -- free variables and substitution ------------------------------------


def _cexpr_vars(e: CExpr) -> frozenset:
    if isinstance(e, Ref):
        return frozenset(e.args or ())
    if isinstance(e, DiagRef):
        return frozenset((e.x, e.y))
    return frozenset()


def free_vars(agent: Agent) -> frozenset:
    """Variables an agent mentions in told/asked constraints and call args.

    Threshold constraints do not count: cutting an agent must not change
    what its observables are projected onto.
    """
    if isinstance(agent, Stop):
        return frozenset()
    if isinstance(agent, (Tell, Ask)):
        return _cexpr_vars(agent.con) | free_vars(agent.body)
    if isinstance(agent, Sum):
        out = frozenset()
        for b in agent.branches:
            out |= free_vars(b)
        return out
    if isinstance(agent, Par):
        return free_vars(agent.left) | free_vars(agent.right)
    if isinstance(agent, Exists):
        return free_vars(agent.body) - {agent.var}
    if isinstance(agent, Call):
        return frozenset(agent.args)
    raise TypeError(f"not an agent: {agent!r}")


def _subst_cexpr(e: CExpr, mapping: Dict[str, str]) -> CExpr:
    if isinstance(e, Ref):
        if e.args is None:
            return e
        return Ref(e.name, tuple(mapping.get(a, a) for a in e.args), e.pos)
    if isinstance(e, DiagRef):
        return DiagRef(mapping.get(e.x, e.x), mapping.get(e.y, e.y), e.pos)
    return e


def _alpha_fresh(base: str, forbidden) -> str:
    i = 0
    while f"{base}#r{i}" in forbidden:
        i += 1
    return f"{base}#r{i}"


def substitute(agent: Agent, mapping: Dict[str, str]) -> Agent:
    """Simultaneous capture-avoiding substitution of variables for variables."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    if not mapping:
        return agent
    if isinstance(agent, Stop):
        return agent
    if isinstance(agent, Tell):
        return Tell(
            _subst_cexpr(agent.con, mapping),
            agent.threshold,
            substitute(agent.body, mapping),
            agent.pos,
        )
    if isinstance(agent, Ask):
        return Ask(
            _subst_cexpr(agent.con, mapping),
            agent.threshold,
            substitute(agent.body, mapping),
            agent.pos,
        )
    if isinstance(agent, Sum):
        return Sum(tuple(substitute(b, mapping) for b in agent.branches), agent.pos)
    if isinstance(agent, Par):
        return Par(
            substitute(agent.left, mapping), substitute(agent.right, mapping), agent.pos
        )
    if isinstance(agent, Exists):
        inner = {k: v for k, v in mapping.items() if k != agent.var}
        if not inner:
            return agent
        body, binder = agent.body, agent.var
        if binder in inner.values():
            # the binder would capture an incoming name: rename it first
            forbidden = set(free_vars(body)) | set(inner.values()) | set(inner)
            renamed = _alpha_fresh(binder, forbidden)
            body = substitute(body, {binder: renamed})
            binder = renamed
        return Exists(binder, substitute(body, inner), agent.pos)
    if isinstance(agent, Call):
        return Call(agent.name, tuple(mapping.get(a, a) for a in agent.args), agent.pos)
    raise TypeError(f"not an agent: {agent!r}")


# -- pretty printing ----------------------------------------------------


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v == float("inf"):
        return "inf"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _pp_cexpr(e: CExpr) -> str:
    if isinstance(e, Ref):
        if e.args is None:
            return e.name
        return f"{e.name}({', '.join(e.args)})"
    if isinstance(e, DiagRef):
        return f"diag({e.x}, {e.y})"
    return f"const({format_value(e.value)})"


def _pp_arrow(t: Threshold) -> str:
    if isinstance(t, Eventual):
        return "->"
    if isinstance(t, Level):
        return f"->^{format_value(t.value)}"
    if t.name is None:
        raise ProgramError("cannot print a cut threshold with no name")
    return f"->[{t.name}]"


def pretty(agent: Agent) -> str:
    """Deterministic one-line rendering that the parser reads back."""
    if isinstance(agent, Stop):
        return "stop"
    if isinstance(agent, Tell):
        return f"tell({_pp_cexpr(agent.con)}) {_pp_arrow(agent.threshold)} {pretty(agent.body)}"
    if isinstance(agent, Ask):
        return f"ask({_pp_cexpr(agent.con)}) {_pp_arrow(agent.threshold)} {pretty(agent.body)}"
    if isinstance(agent, Sum):
        return " + ".join(pretty(b) for b in agent.branches)
    if isinstance(agent, Par):
        return f"({pretty(agent.left)} || {pretty(agent.right)})"
    if isinstance(agent, Exists):
        return f"exists {agent.var} . {pretty(agent.body)}"
    if isinstance(agent, Call):
        return f"{agent.name}({', '.join(agent.args)})"
    raise TypeError(f"not an agent: {agent!r}")


# -- templates, declarations, programs ----------------------------------


@dataclass
class Template:
    """A named constraint table over formal parameters."""

    name: str
    params: Tuple[str, ...]
    table: Dict[tuple, Value]
    default: Optional[Value]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)

    def base_constraint(self, system: ConstraintSystem) -> Constraint:
        return Constraint(system, self.params, self.table, self.default)


@dataclass
class Decl:
    """A named procedure with formal parameters and an agent body."""

    name: str
    params: Tuple[str, ...]
    body: Agent
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False, repr=False)


@dataclass
class Program:
    """A parsed and validated scc program."""

    semiring: Semiring
    domain: Tuple
    variables: Tuple[str, ...]
    templates: Dict[str, Template]
    decls: Dict[str, Decl]
    main: Optional[Agent]
    interest: Optional[Tuple[str, ...]]

    def __post_init__(self):
        self.system = ConstraintSystem(self.semiring, self.domain)
        self._resolve_cache: Dict = {}
        self._bases: Dict[str, Constraint] = {}

    def resolve(self, e: CExpr) -> Constraint:
        """Turn a constraint reference into an actual constraint."""
        key = e if not isinstance(e, Ref) else (e.name, e.args)
        got = self._resolve_cache.get(key)
        if got is not None:
            return got
        if isinstance(e, Ref):
            tpl = self.templates.get(e.name)
            if tpl is None:
                raise ProgramError(f"unknown constraint {e.name!r}", e.pos)
            args = e.args if e.args is not None else tpl.params
            if len(args) != len(tpl.params):
                raise ProgramError(
                    f"constraint {e.name!r} takes {len(tpl.params)} arguments, got {len(args)}",
                    e.pos,
                )
            base = self._bases.get(e.name)
            if base is None:
                base = self._bases[e.name] = tpl.base_constraint(self.system)
            got = C.rename(base, dict(zip(tpl.params, args)))
        elif isinstance(e, DiagRef):
            got = self.system.diagonal(e.x, e.y)
        else:
            got = self.system.constant(e.value)
        self._resolve_cache[key] = got
        return got

    def threshold_constraint(self, t: Threshold) -> Optional[Constraint]:
        if isinstance(t, Cut):
            if t.constraint is None:
                raise ProgramError(f"unresolved cut threshold {t.name!r}")
            return t.constraint
        return None
