"""Safra boards: chip stacks tracking cumulative trace progress.

A board on (algebra A, trace object X) is an ordered control of chips plus
stacks of chips sitting on cells (x, a) in X x A.  Moving a morphism over a
board pushes the stacks along its triples, joining cell labels; stacks that
land on the activation column are moved back to column 0 and topped with a
fresh chip.  Resetting a covered chip truncates every stack above it; this
is the event reset proof systems count.

Boards are immutable values: every transition returns a new board.  Stacks
store chip sets only; top and prefix queries go through the control order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .algebra import ActivationAlgebra, join
from .trace import ObjectMismatch, TraceMorphism, TraceObject

Stack = frozenset[int]
Cell = tuple[int, int]


class BoardError(Exception):
    pass


class NotCovered(BoardError):
    pass


class UnknownChip(BoardError):
    pass


class NotASubset(BoardError):
    pass


class EqualStacks(BoardError):
    pass


class SupplyExhausted(BoardError):
    pass


@dataclass(frozen=True)
class SafraBoard:
    obj: TraceObject
    control: tuple[int, ...]
    placements: frozenset[tuple[int, int, Stack]]  # (x, a, stack)

    def stacks_at(self, x: int, a: int) -> frozenset[Stack]:
        return frozenset(s for (px, pa, s) in self.placements if (px, pa) == (x, a))

    def cells(self) -> Iterator[tuple[Cell, Stack]]:
        for x, a, s in sorted(self.placements, key=lambda p: (p[0], p[1], sorted(p[2]))):
            yield (x, a), s

    def nonempty_cells(self) -> set[Cell]:
        return {(x, a) for (x, a, _) in self.placements}

    def position(self, chip: int) -> int:
        try:
            return self.control.index(chip)
        except ValueError:
            raise UnknownChip(str(chip)) from None

    def top(self, stack: Stack) -> int | None:
        if not stack:
            return None
        return max(stack, key=self.control.index)

    def render(self) -> str:
        chips = ",".join(str(c) for c in self.control)
        cells = "; ".join(
            f"{self.obj.elements[x]},{a}:" + "|".join("{" + ",".join(map(str, sorted(s))) + "}" for s in sorted(self.stacks_at(x, a), key=sorted))
            for (x, a) in sorted(self.nonempty_cells())
        )
        return f"[{chips}] {cells}"

    def __repr__(self) -> str:
        return f"SafraBoard({self.obj.name}, {self.render()})"


def board(obj: TraceObject, control: Sequence[int], cells: Mapping[Cell, Iterable[Iterable[int]]]) -> SafraBoard:
    """Build and check a board from a cell map."""
    placements = set()
    for (x, a), stacks in cells.items():
        for s in stacks:
            placements.add((x, a, frozenset(s)))
    b = SafraBoard(obj=obj, control=tuple(control), placements=frozenset(placements))
    problems = validate_board(b)
    if problems:
        raise BoardError("; ".join(problems))
    return b


def empty_board(obj: TraceObject) -> SafraBoard:
    return SafraBoard(obj=obj, control=(), placements=frozenset())


def validate_board(b: SafraBoard) -> list[str]:
    problems = []
    if len(set(b.control)) != len(b.control):
        problems.append("duplicate chips in control")
    control = set(b.control)
    used = set()
    for x, a, s in b.placements:
        if not 0 <= x < b.obj.size:
            problems.append(f"cell position {x} outside {b.obj.name}")
        if not s <= control:
            problems.append(f"stack {sorted(s)} not within the control")
        used |= s
    for chip in control - used:
        problems.append(f"chip {chip} in control but on no stack")
    return problems


def covered_chips(b: SafraBoard) -> set[int]:
    """Chips that are on top of no stack (only these may be reset)."""
    tops = {b.top(s) for (_, _, s) in b.placements}
    return {c for c in b.control if c not in tops}


def stack_less(b: SafraBoard, s1: Stack, s2: Stack) -> bool:
    """Order on stacks: s1 comes first iff it owns the control-least chip of the symmetric difference."""
    if s1 == s2:
        raise EqualStacks(f"{sorted(s1)}")
    diff = s1 ^ s2
    least = min(diff, key=b.position)
    return least in s1


def min_stack(b: SafraBoard, stacks: Iterable[Stack]) -> Stack:
    stacks = list(stacks)
    best = stacks[0]
    for s in stacks[1:]:
        if s != best and stack_less(b, s, best):
            best = s
    return best


def _prune_control(control: Sequence[int], placements: Iterable[tuple[int, int, Stack]]) -> tuple[int, ...]:
    used = set()
    for _, _, s in placements:
        used |= s
    return tuple(c for c in control if c in used)


def tau_successor(
    alg: ActivationAlgebra,
    b: SafraBoard,
    tau: TraceMorphism,
    fresh: Iterable[int] | None = None,
) -> SafraBoard:
    """Move stacks along tau, then cover the activation column.

    Move: a stack on (x, a) lands on (y, a v c) for every triple (x, c, y);
    chips left on no stack drop out of the control.  Cover: each y whose
    activation cell is nonempty gets one fresh chip; the stacks there move
    to (y, 0) extended by that chip, and the fresh chips are appended to
    the control in the order the elements of y are listed.

    ``fresh`` supplies candidate chips in allocation order; by default the
    smallest naturals outside the current control are used.
    """
    if tau.dom != b.obj:
        raise ObjectMismatch(f"board on {b.obj.name}, morphism from {tau.dom.name}")
    moved: set[tuple[int, int, Stack]] = set()
    for x, a, s in b.placements:
        for (tx, c, y) in tau.triples:
            if tx == x:
                moved.add((y, join(alg, a, c), s))
    control = _prune_control(b.control, moved)

    landed = sorted({y for (y, a, _) in moved if a == alg.alpha})
    if fresh is None:
        fresh = (c for c in range(len(b.control) + len(landed) + 1) if c not in set(b.control))
    supply = iter(fresh)
    minted: dict[int, int] = {}
    for y in landed:
        try:
            chip = next(supply)
        except StopIteration:
            raise SupplyExhausted(f"no fresh chip left for element {y}") from None
        if chip in control:
            raise SupplyExhausted(f"fresh chip {chip} already on the control")
        minted[y] = chip

    placements: set[tuple[int, int, Stack]] = set()
    for y, a, s in moved:
        if a == alg.alpha:
            placements.add((y, 0, s | {minted[y]}))
        else:
            placements.add((y, a, s))
    control = control + tuple(minted[y] for y in landed)
    return SafraBoard(obj=tau.cod, control=control, placements=frozenset(placements))


def weaken(b: SafraBoard, keep: Mapping[Cell, Iterable[Iterable[int]]]) -> SafraBoard:
    """Drop stacks cellwise; cells absent from ``keep`` are left untouched."""
    wanted: dict[Cell, frozenset[Stack]] = {
        cell: frozenset(frozenset(s) for s in stacks) for cell, stacks in keep.items()
    }
    for cell, stacks in wanted.items():
        have = b.stacks_at(*cell)
        if not stacks <= have:
            raise NotASubset(f"cell {cell}: {sorted(map(sorted, stacks - have))} not present")
    placements = frozenset(
        (x, a, s)
        for (x, a, s) in b.placements
        if (x, a) not in wanted or s in wanted[(x, a)]
    )
    return SafraBoard(obj=b.obj, control=_prune_control(b.control, placements), placements=placements)


def is_weakening(b: SafraBoard, b2: SafraBoard) -> bool:
    return b2.obj == b.obj and b2.placements <= b.placements and b2.control == _prune_control(
        b.control, b2.placements
    )


def thin(b: SafraBoard) -> SafraBoard:
    """The canonical weakening: each nonempty cell keeps only its least stack."""
    placements = set()
    for cell in b.nonempty_cells():
        placements.add((*cell, min_stack(b, b.stacks_at(*cell))))
    return SafraBoard(obj=b.obj, control=_prune_control(b.control, placements), placements=frozenset(placements))


def reset(b: SafraBoard, gamma: int) -> SafraBoard:
    """Truncate every stack containing gamma down to its prefix ending at gamma."""
    if gamma not in b.control:
        raise UnknownChip(str(gamma))
    if gamma not in covered_chips(b):
        raise NotCovered(f"chip {gamma} tops a stack")
    cut = b.position(gamma)
    placements = frozenset(
        (x, a, frozenset(z for z in s if b.position(z) <= cut) if gamma in s else s)
        for (x, a, s) in b.placements
    )
    return SafraBoard(obj=b.obj, control=_prune_control(b.control, placements), placements=placements)


def populate(b: SafraBoard, cells: Iterable[int]) -> SafraBoard:
    """Add an empty stack on (x, 0) for each selected element; control unchanged."""
    placements = set(b.placements)
    for x in cells:
        if not 0 <= x < b.obj.size:
            raise BoardError(f"cell position {x} outside {b.obj.name}")
        placements.add((x, 0, frozenset()))
    return SafraBoard(obj=b.obj, control=b.control, placements=frozenset(placements))


def is_population(b: SafraBoard, b2: SafraBoard) -> bool:
    if b2.obj != b.obj or b2.control != b.control:
        return False
    added = b2.placements - b.placements
    return b.placements <= b2.placements and all(a == 0 and not s for (_, a, s) in added)


# --- bounded boards and the greedy schedule ---------------------------------


def chip_supply(alg: ActivationAlgebra, K: int) -> range:
    return range(K * (alg.size + 1))


def is_k_sparse(alg: ActivationAlgebra, b: SafraBoard, K: int) -> bool:
    supply = chip_supply(alg, K)
    if not set(b.control) <= set(supply):
        return False
    if len(b.control) > K * alg.size:
        return False
    cells = [(x, a) for (x, a, _) in b.placements]
    if len(cells) != len(set(cells)):
        return False
    return all(a != alg.alpha for (_, a) in cells)


@dataclass(frozen=True)
class Transition:
    kind: str  # 'reset' | 'pop' | 'tau' | 'thin' | 'weak'
    before: SafraBoard
    after: SafraBoard
    chip: int | None = None
    tau: TraceMorphism | None = None


Transcript = tuple[Transition, ...]


def greedy_step(
    alg: ActivationAlgebra,
    b: SafraBoard,
    tau: TraceMorphism,
    K: int,
) -> tuple[SafraBoard, Transcript]:
    """The deterministic transition schedule on K-sparse boards.

    Four phases: reset every covered chip in descending control order,
    populate every empty (x, 0) cell with one empty stack, move tau minting
    fresh chips from the bounded supply minus the incoming control (smallest
    first), then thin.  The result is K-sparse again and the surviving old
    chips are exactly those never removed mid-transcript.
    """
    if tau.dom != b.obj:
        raise ObjectMismatch(f"board on {b.obj.name}, morphism from {tau.dom.name}")
    if K < b.obj.size or K < tau.cod.size:
        raise BoardError(f"K={K} below object size")
    if not is_k_sparse(alg, b, K):
        raise BoardError("greedy step requires a K-sparse input board")
    steps: list[Transition] = []
    start_control = set(b.control)
    cur = b
    for gamma in sorted(covered_chips(b), key=b.position, reverse=True):
        after = reset(cur, gamma)
        steps.append(Transition("reset", cur, after, chip=gamma))
        cur = after
    want = [x for x in range(b.obj.size) if not cur.stacks_at(x, 0)]
    if want:
        after = populate(cur, want)
        steps.append(Transition("pop", cur, after))
        cur = after
    fresh = sorted(set(chip_supply(alg, K)) - start_control)
    after = tau_successor(alg, cur, tau, fresh=fresh)
    steps.append(Transition("tau", cur, after, tau=tau))
    cur = after
    after = thin(cur)
    steps.append(Transition("thin", cur, after))
    cur = after
    assert is_k_sparse(alg, cur, K), "greedy step left the sparse fragment"
    return cur, tuple(steps)


def rename_chips(b: SafraBoard, mapping: Mapping[int, int]) -> SafraBoard:
    control = tuple(mapping.get(c, c) for c in b.control)
    placements = frozenset(
        (x, a, frozenset(mapping.get(c, c) for c in s)) for (x, a, s) in b.placements
    )
    return SafraBoard(obj=b.obj, control=control, placements=placements)


def canonical_fresh(b: SafraBoard, preserved: Iterable[int]) -> SafraBoard:
    """Rename chips outside ``preserved`` to -1, -2, ... in control order.

    Used to compare boards up to the choice of fresh chips: chips minted by
    a move are arbitrary, so equality of annotated premises only holds after
    both sides agree on a canonical naming of the non-preserved chips.
    """
    preserved = set(preserved)
    mapping = {}
    nxt = -1
    for c in b.control:
        if c not in preserved:
            mapping[c] = nxt
            nxt -= 1
    return rename_chips(b, mapping)


def boards_equal_up_to_fresh(old: SafraBoard, b1: SafraBoard, b2: SafraBoard) -> bool:
    """Equality of b1 and b2 after canonically renaming chips absent from ``old``."""
    preserved = set(old.control)
    return canonical_fresh(b1, preserved) == canonical_fresh(b2, preserved)
