"""C-semirings: the value structure underneath every soft constraint.

A c-semiring is a tuple <A, +, x, 0, 1> where + (choice) is commutative,
associative, idempotent, has unit 0 and absorbing element 1, and x
(combination) is commutative, associative, distributes over +, has unit 1
and absorbing element 0.  The induced order a <= b iff a + b = b reads
"b is at least as good as a"; + is the lub of that order.

Values are plain Python scalars: bool for the boolean instance, float for
fuzzy, probabilistic and weighted.  Instances are frozen singletons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

Value = Union[bool, float]

# Float comparisons throughout the library use this tolerance; booleans
# compare exactly.
TOL = 1e-9


class CarrierError(ValueError):
    """A value lies outside the carrier of the active semiring."""


@dataclass(frozen=True)
class Semiring:
    """One c-semiring instance; all operations live here as methods."""

    kind: str
    zero: Value
    one: Value
    idempotent_times: bool

    def __repr__(self) -> str:
        return f"Semiring({self.kind})"

    def check(self, v: Value) -> Value:
        """Validate and normalize a carrier value, raising CarrierError otherwise."""
        if self.kind == "boolean":
            if not isinstance(v, bool):
                raise CarrierError(f"boolean semiring needs true/false, got {v!r}")
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise CarrierError(f"{self.kind} semiring needs a number, got {v!r}")
        f = float(v)
        if math.isnan(f):
            raise CarrierError("NaN is not a semiring value")
        if self.kind in ("fuzzy", "probabilistic"):
            if not 0.0 <= f <= 1.0:
                raise CarrierError(f"{self.kind} values live in [0,1], got {f!r}")
        else:  # weighted: costs in [0, +inf]
            if f < 0.0:
                raise CarrierError(f"weighted values live in [0,+inf], got {f!r}")
        return f

    def sum(self, a: Value, b: Value) -> Value:
        """The + of the semiring: choice between values, lub of the order."""
        a, b = self.check(a), self.check(b)
        if self.kind == "boolean":
            return a or b
        if self.kind == "weighted":
            return min(a, b)
        return max(a, b)  # fuzzy, probabilistic

    def combine(self, a: Value, b: Value) -> Value:
        """The x of the semiring: combination of values."""
        a, b = self.check(a), self.check(b)
        if self.kind == "boolean":
            return a and b
        if self.kind == "fuzzy":
            return min(a, b)
        if self.kind == "probabilistic":
            return a * b
        return a + b  # weighted: costs add

    def sum_all(self, values, start: Value | None = None) -> Value:
        acc = self.zero if start is None else start
        for v in values:
            acc = self.sum(acc, v)
        return acc

    def combine_all(self, values, start: Value | None = None) -> Value:
        acc = self.one if start is None else start
        for v in values:
            acc = self.combine(acc, v)
        return acc

    def eq(self, a: Value, b: Value) -> bool:
        """Value equality: exact for booleans, within TOL for floats."""
        if self.kind == "boolean":
            return a is b or a == b
        if a == b:  # covers inf == inf
            return True
        return abs(a - b) <= TOL

    def leq(self, a: Value, b: Value) -> bool:
        """The induced order: a <= b iff a + b = b."""
        return self.eq(self.sum(a, b), b)

    def lt(self, a: Value, b: Value) -> bool:
        """Strict order: a < b iff a <= b and not a = b."""
        return self.leq(a, b) and not self.eq(a, b)

    def sample(self, rng) -> Value:
        """Draw a random carrier value; endpoints show up often on purpose."""
        if self.kind == "boolean":
            return rng.random() < 0.5
        r = rng.random()
        if self.kind == "weighted":
            if r < 0.1:
                return 0.0
            if r < 0.2:
                return math.inf
            if r < 0.5:
                return float(rng.randrange(1, 10))
            return rng.uniform(0.0, 12.0)
        if r < 0.1:
            return 0.0
        if r < 0.2:
            return 1.0
        if r < 0.5:
            return round(rng.uniform(0.0, 1.0), 1)
        return rng.uniform(0.0, 1.0)


BOOLEAN = Semiring("boolean", False, True, True)
FUZZY = Semiring("fuzzy", 0.0, 1.0, True)
PROBABILISTIC = Semiring("probabilistic", 0.0, 1.0, False)
# The constants follow from the axioms: 0 must be the unit of min and
# absorbing for +, so it is +inf; 1 is the cost 0.
WEIGHTED = Semiring("weighted", math.inf, 0.0, False)

ALL_SEMIRINGS = (BOOLEAN, FUZZY, PROBABILISTIC, WEIGHTED)
_BY_NAME = {s.kind: s for s in ALL_SEMIRINGS}


def by_name(name: str) -> Semiring:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise CarrierError(
            f"unknown semiring {name!r}; pick one of {sorted(_BY_NAME)}"
        ) from None
