"""Soft constraint satisfaction problems over one constraint system.

A problem is a constraint set plus the variables of interest.  Its
solution is the combination of the set projected onto those variables;
the best level is the solution projected all the way down to a single
semiring value.  Consistency cuts ask whether that level clears a bar:
a plain level for the value form, a whole constraint for the cut form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from .constraints import (
    Constraint,
    ConstraintError,
    ConstraintSystem,
    combine_project,
    strictly_below,
)
from .semiring import Value


@dataclass
class Problem:
    """A set of constraints and the variables the caller cares about."""

    system: ConstraintSystem
    constraints: Tuple[Constraint, ...]
    interest: Tuple[str, ...]

    def __init__(self, system, constraints, interest):
        self.system = system
        self.constraints = tuple(constraints)
        self.interest = tuple(interest)
        if len(set(self.interest)) != len(self.interest):
            raise ConstraintError("interest variables must be distinct")
        for c in self.constraints:
            if c.system.semiring is not system.semiring or c.system.domain != system.domain:
                raise ConstraintError("problem constraints must share one system")


def solve(problem: Problem) -> Constraint:
    """Combine everything and project onto the interest variables."""
    return combine_project(problem.constraints, problem.interest, problem.system)


def blevel(problem: Problem) -> Value:
    """Best level: the solution projected onto no variables at all."""
    return combine_project(problem.constraints, (), problem.system).scalar()


def is_consistent(problem: Problem) -> bool:
    """Consistent means some assignment does strictly better than zero."""
    s = problem.system.semiring
    return not s.eq(blevel(problem), s.zero)


@dataclass(frozen=True)
class ConsistencyCut:
    """A bar for alpha-consistency: a plain level or a cut constraint.

    Exactly one of level/cut is set.  Both forms are monotone in the
    problem: shrinking the constraint set pointwise can only lose.
    """

    level: Optional[Value] = None
    cut: Optional[Constraint] = field(default=None, compare=False)

    def __post_init__(self):
        if (self.level is None) == (self.cut is None):
            raise ConstraintError("give exactly one of level or cut")


def consistent(problem: Problem, bar: ConsistencyCut) -> bool:
    """Does the problem clear the bar?

    Level form: the best level is not strictly below the given value.
    Cut form: the combined constraint is not strictly below the cut.
    """
    s = problem.system.semiring
    if bar.level is not None:
        return not s.lt(blevel(problem), s.check(bar.level))
    combined = combine_project(
        problem.constraints,
        [v for c in problem.constraints for v in c.vars],
        problem.system,
    )
    return not strictly_below(combined, bar.cut)
