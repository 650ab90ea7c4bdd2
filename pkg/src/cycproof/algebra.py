"""Finite activation algebras.

An activation algebra is a finite join-semilattice with a bottom element 0
and a distinguished activation element alpha != 0.  Elements are canonical
small integers 0..n-1 (0 is always the bottom) with a display-name table;
the join is a full n x n lookup table.  Two built-in instances are provided:
the booleans (progress steps are labelled 1) and the three-valued failure
algebra (1 = progress, 2 = failure).
"""

from __future__ import annotations

from dataclasses import dataclass


MAX_ELEMENTS = 16


class AlgebraError(Exception):
    """Base error for algebra operations."""


class UnknownElement(AlgebraError):
    pass


@dataclass(frozen=True)
class Violation:
    """A broken semilattice law together with witnessing elements."""

    law: str
    witnesses: tuple[int, ...] = ()

    def __str__(self) -> str:
        if self.witnesses:
            return f"{self.law} (witnesses {self.witnesses})"
        return self.law


class InvalidAlgebra(AlgebraError):
    def __init__(self, violation: Violation):
        super().__init__(str(violation))
        self.violation = violation


@dataclass(frozen=True)
class ActivationAlgebra:
    """Carrier 0..n-1 with join table, bottom 0 and activation element alpha."""

    names: tuple[str, ...]
    table: tuple[tuple[int, ...], ...]
    alpha: int

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def elements(self) -> range:
        return range(len(self.names))

    @property
    def zero(self) -> int:
        return 0

    def check_element(self, a: int) -> None:
        if not 0 <= a < len(self.names):
            raise UnknownElement(f"element {a} not in algebra of size {len(self.names)}")

    def name_of(self, a: int) -> str:
        self.check_element(a)
        return self.names[a]


def join(alg: ActivationAlgebra, a: int, b: int) -> int:
    alg.check_element(a)
    alg.check_element(b)
    return alg.table[a][b]


def join_all(alg: ActivationAlgebra, items, start: int = 0) -> int:
    acc = start
    for a in items:
        acc = join(alg, acc, a)
    return acc


def leq(alg: ActivationAlgebra, a: int, b: int) -> bool:
    """Order derived from the join: a <= b iff a v b = b."""
    return join(alg, a, b) == b


def validate(alg: ActivationAlgebra) -> Violation | None:
    """Return the first violated semilattice law, or None if the algebra is valid.

    Checks, in order: size and table shape, table closure, idempotence,
    commutativity, associativity, 0 as join identity, alpha != 0.  All laws
    are checked by exhaustive table enumeration (the carrier is capped at
    MAX_ELEMENTS, so this is cheap).
    """
    n = len(alg.names)
    if n == 0:
        return Violation("nonempty carrier")
    if n > MAX_ELEMENTS:
        return Violation("carrier too large", (n,))
    if len(set(alg.names)) != n:
        return Violation("duplicate element names")
    if len(alg.table) != n or any(len(row) != n for row in alg.table):
        return Violation("join table shape")
    for a in range(n):
        for b in range(n):
            if not 0 <= alg.table[a][b] < n:
                return Violation("join closure", (a, b))
    for a in range(n):
        if alg.table[a][a] != a:
            return Violation("idempotence", (a,))
    for a in range(n):
        for b in range(n):
            if alg.table[a][b] != alg.table[b][a]:
                return Violation("commutativity", (a, b))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if alg.table[alg.table[a][b]][c] != alg.table[a][alg.table[b][c]]:
                    return Violation("associativity", (a, b, c))
    for a in range(n):
        if alg.table[0][a] != a:
            return Violation("zero identity", (a,))
    if not 0 <= alg.alpha < n:
        return Violation("alpha in carrier", (alg.alpha,))
    if alg.alpha == 0:
        return Violation("alpha!=0")
    return None


def require_valid(alg: ActivationAlgebra) -> ActivationAlgebra:
    bad = validate(alg)
    if bad is not None:
        raise InvalidAlgebra(bad)
    return alg


def max_algebra(names: tuple[str, ...], alpha: int) -> ActivationAlgebra:
    """Total-order algebra on 0..n-1 joined by max."""
    n = len(names)
    table = tuple(tuple(max(a, b) for b in range(n)) for a in range(n))
    return ActivationAlgebra(names=names, table=table, alpha=alpha)


#: Booleans: 0, 1 with max join; progress marker alpha = 1.
BOOLEANS = max_algebra(("0", "1"), alpha=1)

#: Failure algebra: 0 < 1 < 2 with max join; alpha = 1, 2 is the absorbing
#: failure value (a trace hitting 2 can never again compose to exactly 1).
FAILURE = max_algebra(("0", "1", "2"), alpha=1)
