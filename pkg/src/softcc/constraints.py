"""Soft constraints as finite tables of semiring values.

A constraint maps assignments of its support variables to semiring values.
Tables are dicts keyed by tuples of domain atoms in support order.  A
constraint either lists every tuple (dense, ``default is None``) or lists
some tuples and falls back to ``default`` for the rest.  Keeping the
default equal to the semiring zero lets combination and projection work
row-wise on the listed tuples only, which is what makes larger variable
counts affordable.

The algebra: ``tensor`` combines pointwise with x, ``oplus`` with +,
``project`` sums out eliminated variables, ``hide`` removes one variable,
``leqc`` is the induced constraint order, and ``entails`` asks whether a
set of constraints forces another one.  ``combine_project`` combines a
factor list and projects in one pass via variable elimination so the full
joint table never needs to exist.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Optional, Sequence, Union

from .semiring import Semiring, Value

Atom = Union[str, int]

# Dense enumeration fallbacks refuse to materialize beyond this many cells.
MAX_CELLS = 500_000


class ConstraintError(ValueError):
    pass


class IncompleteConstraintError(ConstraintError):
    """A dense constraint is missing tuples, or eval hit a hole with no default."""


class TooLargeError(ConstraintError):
    """An operation would need to enumerate more cells than MAX_CELLS."""


def _atom_key(a: Atom):
    # Atoms mix ints and strings; give them a total order for stable output.
    return (0, a, "") if isinstance(a, int) else (1, 0, a)


def _row_key(key: tuple) -> tuple:
    return tuple(_atom_key(a) for a in key)


class ConstraintSystem:
    """A semiring plus a shared finite domain for all variables."""

    def __init__(self, semiring: Semiring, domain: Sequence[Atom]):
        domain = tuple(domain)
        if not domain:
            raise ConstraintError("domain must be nonempty")
        if len(set(domain)) != len(domain):
            raise ConstraintError("domain atoms must be distinct")
        for a in domain:
            if not isinstance(a, (str, int)) or isinstance(a, bool):
                raise ConstraintError(f"domain atom must be a name or integer, got {a!r}")
        self.semiring = semiring
        self.domain = domain

    def __repr__(self) -> str:
        return f"ConstraintSystem({self.semiring.kind}, |D|={len(self.domain)})"

    def cells(self, nvars: int) -> int:
        return len(self.domain) ** nvars

    def constant(self, a: Value) -> "Constraint":
        """The constraint with empty support and value a everywhere."""
        return Constraint(self, (), {(): self.semiring.check(a)})

    def diagonal(self, x: str, y: str) -> "Constraint":
        """d_xy: one where x and y agree, zero where they differ."""
        s = self.semiring
        if x == y:
            return self.constant(s.one)
        table = {}
        for dx in self.domain:
            for dy in self.domain:
                table[(dx, dy)] = s.one if dx == dy else s.zero
        return Constraint(self, (x, y), table)


class Constraint:
    """A finite table from support-variable assignments to semiring values."""

    __slots__ = ("system", "vars", "table", "default", "_canon", "_supp", "_pruned")

    def __init__(
        self,
        system: ConstraintSystem,
        variables: Sequence[str],
        table: Mapping[tuple, Value],
        default: Optional[Value] = None,
    ):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ConstraintError(f"support has repeated variables: {variables}")
        for v in variables:
            if not isinstance(v, str) or not v:
                raise ConstraintError(f"variable names must be nonempty strings, got {v!r}")
        s = system.semiring
        dom = set(system.domain)
        checked = {}
        for key, val in table.items():
            key = tuple(key)
            if len(key) != len(variables):
                raise ConstraintError(f"row {key} does not match support {variables}")
            for a in key:
                if a not in dom:
                    raise ConstraintError(f"atom {a!r} is not in the domain")
            checked[key] = s.check(val)
        if default is None:
            if len(checked) != system.cells(len(variables)):
                raise IncompleteConstraintError(
                    f"dense constraint over {variables} lists {len(checked)} of "
                    f"{system.cells(len(variables))} tuples and has no default"
                )
        else:
            default = s.check(default)
        self.system = system
        self.vars = variables
        self.table = checked
        self.default = default
        self._canon = None
        self._supp = None
        self._pruned = None

    # -- evaluation ----------------------------------------------------

    def eval(self, assignment: Mapping[str, Atom]) -> Value:
        """Value at an assignment covering at least the support variables."""
        try:
            key = tuple(assignment[v] for v in self.vars)
        except KeyError as e:
            raise ConstraintError(f"assignment is missing variable {e.args[0]!r}") from None
        got = self.table.get(key, self.default)
        if got is None:
            raise IncompleteConstraintError(f"no row for {key} and no default")
        return got

    def scalar(self) -> Value:
        """The value of a zero-variable constraint."""
        if self.vars:
            raise ConstraintError(f"constraint still depends on {self.vars}")
        return self.eval({})

    # -- support -------------------------------------------------------

    def support(self) -> frozenset:
        """Variables the function really depends on; constant columns drop out."""
        if self._supp is None:
            s = self.system.semiring
            ndom = len(self.system.domain)
            live = []
            for i, v in enumerate(self.vars):
                groups = {}
                for key, val in self.table.items():
                    groups.setdefault(key[:i] + key[i + 1 :], []).append(val)
                varies = False
                for vals in groups.values():
                    if len(vals) < ndom and self.default is not None:
                        vals = vals + [self.default]
                    first = vals[0]
                    if any(not s.eq(first, x) for x in vals[1:]):
                        varies = True
                        break
                if varies:
                    live.append(v)
            self._supp = frozenset(live)
        return self._supp

    def pruned(self) -> "Constraint":
        """The same function restricted to its computed support."""
        if self._pruned is None:
            supp = self.support()
            if supp == set(self.vars):
                self._pruned = self
            else:
                keep = [i for i, v in enumerate(self.vars) if v in supp]
                new_vars = tuple(self.vars[i] for i in keep)
                s = self.system.semiring
                new_table = {}
                for key, val in self.table.items():
                    nk = tuple(key[i] for i in keep)
                    if nk not in new_table:
                        new_table[nk] = val
                if self.default is not None:
                    new_table = {
                        k: v for k, v in new_table.items() if not s.eq(v, self.default)
                    }
                self._pruned = Constraint(self.system, new_vars, new_table, self.default)
        return self._pruned

    # -- canonical form and equality ----------------------------------

    def _round(self, v: Value) -> Value:
        if isinstance(v, bool):
            return v
        if v == float("inf"):
            return v
        return round(v, 9)

    def canonical_key(self) -> tuple:
        """Hashable key identifying the function up to tolerance.

        Pointwise-equal constraints of enumerable size get the same key;
        beyond MAX_CANON_CELLS the key is representation-faithful instead,
        which is still sound for deduplication.
        """
        if self._canon is None:
            c = self.pruned()
            order = sorted(range(len(c.vars)), key=lambda i: c.vars[i])
            svars = tuple(c.vars[i] for i in order)
            system = c.system
            if system.cells(len(svars)) <= 4096:
                full = {}
                for key in itertools.product(system.domain, repeat=len(svars)):
                    back = {v: a for v, a in zip(svars, key)}
                    full[key] = self._round(c.eval(back))
                counts = {}
                for v in full.values():
                    counts[v] = counts.get(v, 0) + 1
                # deterministic tie-break: highest count, then smallest value
                top = max(counts.values())
                default = min((v for v, n in counts.items() if n == top), key=lambda v: (isinstance(v, bool), v))
                rows = tuple(
                    sorted(
                        ((k, v) for k, v in full.items() if v != default),
                        key=lambda kv: _row_key(kv[0]),
                    )
                )
                self._canon = (system.semiring.kind, svars, default, rows)
            else:
                table = {}
                for key, val in c.table.items():
                    table[tuple(key[i] for i in order)] = self._round(val)
                default = None if c.default is None else self._round(c.default)
                if default is not None:
                    table = {k: v for k, v in table.items() if v != default}
                rows = tuple(sorted(table.items(), key=lambda kv: _row_key(kv[0])))
                self._canon = (system.semiring.kind, svars, default, rows)
        return self._canon

    def __eq__(self, other) -> bool:
        if not isinstance(other, Constraint):
            return NotImplemented
        return self.canonical_key() == other.canonical_key()

    def __hash__(self) -> int:
        return hash(self.canonical_key())

    def __repr__(self) -> str:
        return f"Constraint({self.system.semiring.kind}, vars={self.vars}, rows={len(self.table)})"

    def rows_sorted(self):
        """Listed rows in stable order, for printing and serialization."""
        return sorted(self.table.items(), key=lambda kv: _row_key(kv[0]))


# -- helpers -----------------------------------------------------------


def _sparse_ok(c: Constraint) -> bool:
    # Row-wise algorithms apply when everything unlisted is the zero.
    if c.default is None:
        return True  # dense: every tuple is listed
    return c.system.semiring.eq(c.default, c.system.semiring.zero)


def _zero_function(c: Constraint) -> bool:
    """True when the constraint takes the zero value everywhere."""
    s = c.system.semiring
    if not _sparse_ok(c):
        return False
    return all(s.eq(v, s.zero) for v in c.table.values())


def _union_vars(c1: Constraint, c2: Constraint) -> tuple:
    return c1.vars + tuple(v for v in c2.vars if v not in c1.vars)


def _indices(sub: Sequence[str], into: Sequence[str]):
    pos = {v: i for i, v in enumerate(into)}
    return [pos[v] for v in sub]


def _dense_eval(c: Constraint, union: Sequence[str], key: tuple) -> Value:
    idx = _indices(c.vars, union)
    got = c.table.get(tuple(key[i] for i in idx), c.default)
    if got is None:
        raise IncompleteConstraintError("hole in dense table")
    return got


def rename(c: Constraint, mapping: Mapping[str, str]) -> Constraint:
    """Rename support variables; repeated targets select the diagonal rows."""
    targets = [mapping.get(v, v) for v in c.vars]
    new_vars = []
    first_pos = {}
    for i, t in enumerate(targets):
        if t not in first_pos:
            first_pos[t] = i
            new_vars.append(t)
    if len(new_vars) == len(c.vars):
        return Constraint(c.system, targets, dict(c.table), c.default)
    # collapsed: keep only rows consistent on repeated positions
    keep_idx = [first_pos[t] for t in new_vars]
    table = {}
    for key, val in c.table.items():
        if all(key[i] == key[first_pos[t]] for i, t in enumerate(targets)):
            table[tuple(key[i] for i in keep_idx)] = val
    return Constraint(c.system, tuple(new_vars), table, c.default)


# -- the algebra -------------------------------------------------------


def tensor(c1: Constraint, c2: Constraint) -> Constraint:
    """Pointwise combination with x over the union of supports."""
    if c1.system.semiring is not c2.system.semiring or c1.system.domain != c2.system.domain:
        raise ConstraintError("constraints belong to different systems")
    system = c1.system
    s = system.semiring
    union = _union_vars(c1, c2)
    if _sparse_ok(c1) and _sparse_ok(c2):
        shared = [v for v in c2.vars if v in c1.vars]
        i1 = _indices(shared, c1.vars)
        i2 = _indices(shared, c2.vars)
        extra2 = [i for i, v in enumerate(c2.vars) if v not in c1.vars]
        buckets = {}
        for key2, val2 in c2.table.items():
            buckets.setdefault(tuple(key2[i] for i in i2), []).append((key2, val2))
        table = {}
        zero = s.zero
        for key1, val1 in c1.table.items():
            probe = tuple(key1[i] for i in i1)
            for key2, val2 in buckets.get(probe, ()):
                v = s.combine(val1, val2)
                if s.eq(v, zero):
                    continue
                table[key1 + tuple(key2[i] for i in extra2)] = v
        return Constraint(system, union, table, zero)
    if system.cells(len(union)) > MAX_CELLS:
        raise TooLargeError(f"tensor over {len(union)} variables is too large")
    table = {}
    for key in itertools.product(system.domain, repeat=len(union)):
        table[key] = s.combine(_dense_eval(c1, union, key), _dense_eval(c2, union, key))
    return Constraint(system, union, table)


def tensor_all(constraints: Iterable[Constraint], system: ConstraintSystem) -> Constraint:
    """Fold with tensor; the empty combination is constant one."""
    acc = None
    for c in constraints:
        acc = c if acc is None else tensor(acc, c)
    return system.constant(system.semiring.one) if acc is None else acc


def oplus(c1: Constraint, c2: Constraint) -> Constraint:
    """Pointwise choice with + over the union of supports."""
    system = c1.system
    s = system.semiring
    # the zero function is the unit of +, pointwise
    if _zero_function(c1):
        return c2
    if _zero_function(c2):
        return c1
    if c1.vars == c2.vars:
        if c1.default is None and c2.default is None:
            table = {k: s.sum(v, c2.table[k]) for k, v in c1.table.items()}
            return Constraint(system, c1.vars, table)
        d1 = c1.default if c1.default is not None else None
        d2 = c2.default if c2.default is not None else None
        keys = set(c1.table) | set(c2.table)
        table = {}
        for k in keys:
            v1 = c1.table.get(k, d1)
            v2 = c2.table.get(k, d2)
            if v1 is None or v2 is None:
                raise IncompleteConstraintError("hole in dense table")
            table[k] = s.sum(v1, v2)
        default = None
        if d1 is not None and d2 is not None:
            default = s.sum(d1, d2)
        elif len(table) == system.cells(len(c1.vars)):
            default = None
        return Constraint(system, c1.vars, table, default)
    union = _union_vars(c1, c2)
    if system.cells(len(union)) > MAX_CELLS:
        raise TooLargeError(f"oplus over {len(union)} variables is too large")
    table = {}
    for key in itertools.product(system.domain, repeat=len(union)):
        table[key] = s.sum(_dense_eval(c1, union, key), _dense_eval(c2, union, key))
    return Constraint(system, union, table)


def oplus_all(constraints: Iterable[Constraint], system: ConstraintSystem) -> Constraint:
    """Fold with oplus; the empty choice is constant zero."""
    acc = None
    for c in constraints:
        acc = c if acc is None else oplus(acc, c)
    return system.constant(system.semiring.zero) if acc is None else acc


def project(c: Constraint, keep: Iterable[str]) -> Constraint:
    """Sum out every support variable not in keep (the + over extensions)."""
    keepset = set(keep)
    system = c.system
    s = system.semiring
    keep_idx = [i for i, v in enumerate(c.vars) if v in keepset]
    if len(keep_idx) == len(c.vars):
        return c
    new_vars = tuple(c.vars[i] for i in keep_idx)
    n_elim = len(c.vars) - len(keep_idx)
    if _sparse_ok(c):
        groups = {}
        for key, val in c.table.items():
            nk = tuple(key[i] for i in keep_idx)
            groups[nk] = s.sum(groups[nk], val) if nk in groups else val
        if c.default is None:
            return Constraint(system, new_vars, groups)
        # unlisted extensions contribute the zero default, the unit of +
        zero = s.zero
        groups = {k: v for k, v in groups.items() if not s.eq(v, zero)}
        return Constraint(system, new_vars, groups, zero)
    if system.cells(len(c.vars)) > MAX_CELLS:
        raise TooLargeError("projection source too large to enumerate")
    groups = {}
    for key in itertools.product(system.domain, repeat=len(c.vars)):
        val = c.table.get(key, c.default)
        nk = tuple(key[i] for i in keep_idx)
        groups[nk] = s.sum(groups[nk], val) if nk in groups else val
    return Constraint(system, new_vars, groups)


def hide(c: Constraint, x: str) -> Constraint:
    """Existential quantification of one variable: project onto the rest."""
    return project(c, [v for v in c.vars if v != x])


def _enumerable(system: ConstraintSystem, union: Sequence[str], limit: int = MAX_CELLS) -> bool:
    return system.cells(len(union)) <= limit


def _sparse_leq(c1: Constraint, c2: Constraint):
    """Row-wise order check for variable sets too wide to enumerate.

    Applies when everything unlisted in c1 is the zero: the order can
    only break at a listed row of c1, so those rows are checked against
    c2 directly.  Returns None when the shapes do not allow a row-wise
    answer and the caller should give up instead.
    """
    system = c1.system
    s = system.semiring
    if not _sparse_ok(c1):
        return None
    pos1 = {v: i for i, v in enumerate(c1.vars)}
    shared = [(pos1[v], j) for j, v in enumerate(c2.vars) if v in pos1]
    extra = [v for v in c2.vars if v not in pos1]
    if c2.default is not None and s.eq(c2.default, s.zero):
        # c2 vanishes off its listed rows: a nonzero row of c1 whose
        # extensions are not all covered by rows of c2 meets a zero
        if len(c1.table) * max(len(c2.table), 1) > MAX_CELLS:
            return None
        slots = system.cells(len(extra))
        for key1, val1 in c1.table.items():
            if s.eq(val1, s.zero):
                continue
            covered = 0
            for key2, val2 in c2.table.items():
                if any(key1[i] != key2[j] for i, j in shared):
                    continue
                covered += 1
                if not s.leq(val1, val2):
                    return False
            if covered < slots:
                return False
        return True
    # otherwise c2 must dominate every extension of every nonzero row
    if system.cells(len(extra)) * max(len(c1.table), 1) > MAX_CELLS:
        return None
    for key1, val1 in c1.table.items():
        if s.eq(val1, s.zero):
            continue
        a = dict(zip(c1.vars, key1))
        for ext in itertools.product(system.domain, repeat=len(extra)):
            a.update(zip(extra, ext))
            if not s.leq(val1, c2.eval(a)):
                return False
    return True


def pointwise_eq(c1: Constraint, c2: Constraint) -> bool:
    """Equality as functions of the full variable set, within tolerance."""
    if c1.canonical_key() == c2.canonical_key():
        return True
    system = c1.system
    s = system.semiring
    union = _union_vars(c1, c2)
    if not _enumerable(system, union):
        below = _sparse_leq(c1, c2)
        above = _sparse_leq(c2, c1)
        if below is None or above is None:
            raise TooLargeError("pointwise comparison too large to enumerate")
        return below and above
    for key in itertools.product(system.domain, repeat=len(union)):
        if not s.eq(_dense_eval(c1, union, key), _dense_eval(c2, union, key)):
            return False
    return True


def leqc(c1: Constraint, c2: Constraint) -> bool:
    """The constraint order: c1 below c2 iff c1 + c2 = c2 pointwise."""
    system = c1.system
    s = system.semiring
    union = _union_vars(c1, c2)
    if not _enumerable(system, union):
        got = _sparse_leq(c1, c2)
        if got is None:
            raise TooLargeError("order comparison too large to enumerate")
        return got
    for key in itertools.product(system.domain, repeat=len(union)):
        if not s.leq(_dense_eval(c1, union, key), _dense_eval(c2, union, key)):
            return False
    return True


def strictly_below(c1: Constraint, c2: Constraint) -> bool:
    """c1 below c2 and not pointwise equal; false for incomparable pairs."""
    return leqc(c1, c2) and not pointwise_eq(c1, c2)


def glb(constraints: Sequence[Constraint], system: ConstraintSystem) -> Constraint:
    """Pointwise greatest lower bound; the carriers here are chains, so min."""
    if not constraints:
        return system.constant(system.semiring.one)
    s = system.semiring
    union: tuple = ()
    for c in constraints:
        union = union + tuple(v for v in c.vars if v not in union)
    if not _enumerable(system, union):
        raise TooLargeError("glb too large to enumerate")
    table = {}
    for key in itertools.product(system.domain, repeat=len(union)):
        best = None
        for c in constraints:
            v = _dense_eval(c, union, key)
            best = v if best is None or s.leq(v, best) else best
        table[key] = best
    return Constraint(system, union, table)


# -- factored combination ----------------------------------------------


def combine_project(
    factors: Sequence[Constraint], keep: Iterable[str], system: ConstraintSystem
) -> Constraint:
    """tensor-fold the factors and project onto keep, via variable elimination.

    Equivalent to project(tensor_all(factors), keep) but eliminates one
    variable at a time, joining only the factors that touch it, so the
    intermediate tables stay near the size the factor graph demands.
    """
    keepset = set(keep)
    work = [c.pruned() for c in factors]
    work = [c for c in work if c.vars]
    scalars = [c for c in (f.pruned() for f in factors) if not c.vars]
    elim = set()
    for c in work:
        elim.update(c.vars)
    elim -= keepset
    while elim:
        best_v, best_cost = None, None
        for v in sorted(elim):
            touched = [c for c in work if v in c.vars]
            joint = set()
            for c in touched:
                joint.update(c.vars)
            cost = len(joint)
            if best_cost is None or cost < best_cost:
                best_v, best_cost = v, cost
        touched = [c for c in work if best_v in c.vars]
        rest = [c for c in work if best_v not in c.vars]
        joined = _greedy_fold(touched, system)
        summed = project(joined, [v for v in joined.vars if v != best_v])
        work = rest + [summed.pruned()]
        elim.discard(best_v)
    result = _greedy_fold(work + scalars, system)
    return result


def _greedy_fold(factors: Sequence[Constraint], system: ConstraintSystem) -> Constraint:
    """tensor-fold a factor list, preferring joins with most shared variables."""
    pool = list(factors)
    if not pool:
        return system.constant(system.semiring.one)
    while len(pool) > 1:
        best = None
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                shared = len(set(pool[i].vars) & set(pool[j].vars))
                load = len(pool[i].table) * max(1, len(pool[j].table))
                score = (-shared, load)
                if best is None or score < best[0]:
                    best = (score, i, j)
        _, i, j = best
        joined = tensor(pool[i], pool[j])
        pool = [c for k, c in enumerate(pool) if k not in (i, j)] + [joined]
    return pool[0]


# -- entailment --------------------------------------------------------


def entails(constraints: Sequence[Constraint], c: Constraint) -> bool:
    """Does the set force c?  True iff the combination is below c."""
    if not constraints:
        raise ConstraintError("entailment needs a nonempty constraint set")
    system = constraints[0].system
    proj = combine_project(constraints, c.vars, system)
    return leqc(proj, c)


def entails_witness(
    constraints: Sequence[Constraint], c: Constraint
) -> Optional[dict]:
    """An assignment refuting entailment, or None when the set entails c.

    The witness is the first counterexample in variable-sorted,
    domain-declaration order over the union of supports.
    """
    if entails(constraints, c):
        return None
    system = constraints[0].system
    s = system.semiring
    union = []
    for f in constraints:
        union.extend(v for v in f.vars if v not in union)
    union.extend(v for v in c.vars if v not in union)
    union = sorted(union)
    if not _enumerable(system, union):
        raise TooLargeError("witness search too large to enumerate")
    for key in itertools.product(system.domain, repeat=len(union)):
        env = dict(zip(union, key))
        combined = s.combine_all(f.eval(env) for f in constraints)
        if not s.leq(combined, c.eval(env)):
            return env
    return None


def refutes_entailment(
    constraints: Sequence[Constraint], c: Constraint, assignment: Mapping[str, Atom]
) -> bool:
    """Check one assignment: does it show the set failing to entail c?"""
    system = constraints[0].system
    s = system.semiring
    combined = s.combine_all(f.eval(assignment) for f in constraints)
    return not s.leq(combined, c.eval(assignment))
