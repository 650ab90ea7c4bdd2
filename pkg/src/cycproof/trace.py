"""Trace objects and labelled-relation morphisms between them.

Objects are finite sets of named trace positions; a morphism from X to Y is
a set of triples (x, a, y) with a an algebra element, relating positions of
a conclusion to positions of a premise.  Composition joins the labels of
adjacent triples, so several labels may connect the same pair of positions.
Triples are stored as a sorted tuple of (x, a, y) index triples, giving
canonical equality and cheap hashing for product-state memoisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebra import ActivationAlgebra, join


class ObjectMismatch(Exception):
    """Composition or application of morphisms along a broken path."""


@dataclass(frozen=True)
class TraceObject:
    name: str
    elements: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"duplicate element names in trace object {self.name!r}")

    @property
    def size(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        return f"TraceObject({self.name!r}, {self.elements!r})"


@dataclass(frozen=True)
class TraceMorphism:
    dom: TraceObject
    cod: TraceObject
    triples: tuple[tuple[int, int, int], ...]

    def __repr__(self) -> str:
        return f"TraceMorphism({self.dom.name}->{self.cod.name}, {list(self.triples)})"


def morphism(
    dom: TraceObject,
    cod: TraceObject,
    triples: Iterable[tuple[int, int, int]],
    alg: ActivationAlgebra | None = None,
) -> TraceMorphism:
    """Build a morphism, normalising the triple set and checking ranges."""
    seen = set()
    for x, a, y in triples:
        if not 0 <= x < dom.size:
            raise ValueError(f"triple position {x} outside {dom.name}")
        if not 0 <= y < cod.size:
            raise ValueError(f"triple position {y} outside {cod.name}")
        if alg is not None:
            alg.check_element(a)
        seen.add((x, a, y))
    return TraceMorphism(dom=dom, cod=cod, triples=tuple(sorted(seen)))


def identity(obj: TraceObject) -> TraceMorphism:
    """Identity morphism: every position related to itself with label 0."""
    return TraceMorphism(obj, obj, tuple((e, 0, e) for e in range(obj.size)))


def compose(alg: ActivationAlgebra, first: TraceMorphism, second: TraceMorphism) -> TraceMorphism:
    """Relational composition first;second with labels joined pointwise."""
    if first.cod != second.dom:
        raise ObjectMismatch(
            f"cannot compose {first.cod.name} -> {second.dom.name}"
        )
    by_source: dict[int, list[tuple[int, int]]] = {}
    for y, b, z in second.triples:
        by_source.setdefault(y, []).append((b, z))
    out = set()
    for x, a, y in first.triples:
        for b, z in by_source.get(y, ()):
            out.add((x, join(alg, a, b), z))
    return TraceMorphism(first.dom, second.cod, tuple(sorted(out)))


def compose_word(alg: ActivationAlgebra, word: Sequence[TraceMorphism]) -> TraceMorphism:
    if not word:
        raise ValueError("cannot compose an empty word")
    acc = word[0]
    for m in word[1:]:
        acc = compose(alg, acc, m)
    return acc


def is_valid_path(word: Sequence[TraceMorphism]) -> bool:
    """True iff consecutive morphisms chain (cod of each = dom of the next)."""
    return all(word[i].cod == word[i + 1].dom for i in range(len(word) - 1))
