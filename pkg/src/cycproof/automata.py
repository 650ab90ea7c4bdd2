"""Word automata over morphism alphabets.

Two recognisers for the same language (sequences of composable morphisms
carrying a trace that progresses infinitely often): a nondeterministic
Büchi automaton that guesses the trace, and a deterministic Rabin automaton
whose states are (object, sparse Safra board) pairs driven by the greedy
board schedule.  Both answer membership for ultimately periodic words given
as a lasso (finite prefix + nonempty loop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .algebra import ActivationAlgebra, join
from .boards import SafraBoard, chip_supply, covered_chips, empty_board, greedy_step, is_k_sparse
from .trace import TraceMorphism, TraceObject, is_valid_path

#: Marker for "activation attained on the previous step"; behaves as 0 when
#: the trace continues.
STAR = "*"


class UnknownLetter(Exception):
    pass


class ObjectNotInO(Exception):
    pass


# --- Büchi side ---------------------------------------------------------------


@dataclass(frozen=True)
class BuchiAutomaton:
    alphabet: tuple[TraceMorphism, ...]
    states: frozenset[Hashable]
    delta: dict[tuple[Hashable, TraceMorphism], frozenset[Hashable]]
    starts: frozenset[Hashable]
    accepting: frozenset[Hashable]

    def successors(self, state: Hashable, letter: TraceMorphism) -> frozenset[Hashable]:
        return self.delta.get((state, letter), frozenset())


def build_buchi(alg: ActivationAlgebra, morphisms: Iterable[TraceMorphism]) -> BuchiAutomaton:
    """Trace-guessing automaton over the given alphabet.

    States are the objects themselves (no trace picked yet) and tracking
    triples (object, position, accumulated value).  The accumulated value
    lives in the algebra extended by STAR; a step whose join reaches the
    activation element exactly lands on STAR (the accepting states), from
    where accumulation restarts.
    """
    alphabet = tuple(dict.fromkeys(morphisms))
    objects = []
    for m in alphabet:
        for obj in (m.dom, m.cod):
            if obj not in objects:
                objects.append(obj)
    states: set[Hashable] = set()
    for obj in objects:
        states.add(("obj", obj))
        for x in range(obj.size):
            for a in list(alg.elements) + [STAR]:
                states.add(("trk", obj, x, a))
    delta: dict[tuple[Hashable, TraceMorphism], set[Hashable]] = {}

    def add(src: Hashable, letter: TraceMorphism, dst: Hashable) -> None:
        delta.setdefault((src, letter), set()).add(dst)

    for m in alphabet:
        add(("obj", m.dom), m, ("obj", m.cod))
        for y in range(m.cod.size):
            add(("obj", m.dom), m, ("trk", m.cod, y, 0))
        for x, b, y in m.triples:
            for a in alg.elements:
                c = join(alg, a, b)
                if c == alg.alpha:
                    add(("trk", m.dom, x, a), m, ("trk", m.cod, y, STAR))
                else:
                    add(("trk", m.dom, x, a), m, ("trk", m.cod, y, c))
            # after an activation the accumulated value restarts at the raw label
            if b == alg.alpha:
                add(("trk", m.dom, x, STAR), m, ("trk", m.cod, y, STAR))
            else:
                add(("trk", m.dom, x, STAR), m, ("trk", m.cod, y, b))
    accepting = frozenset(s for s in states if s[0] == "trk" and s[3] == STAR)
    return BuchiAutomaton(
        alphabet=alphabet,
        states=frozenset(states),
        delta={k: frozenset(v) for k, v in delta.items()},
        starts=frozenset(("obj", obj) for obj in objects),
        accepting=accepting,
    )


def _check_letters(alphabet: Sequence[TraceMorphism], word: Iterable[TraceMorphism]) -> None:
    known = set(alphabet)
    for m in word:
        if m not in known:
            raise UnknownLetter(repr(m))


def buchi_accepts_lasso(
    aut: BuchiAutomaton, prefix: Sequence[TraceMorphism], loop: Sequence[TraceMorphism]
) -> bool:
    """Membership of prefix . loop^omega.

    Searches the product of the automaton with the loop positions: the word
    is accepted iff some reachable (accepting state, position) pair lies on
    a product cycle.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    _check_letters(aut.alphabet, list(prefix) + list(loop))
    current = set(aut.starts)
    for m in prefix:
        current = {q2 for q in current for q2 in aut.successors(q, m)}
        if not current:
            return False
    # reachable (state, loop position) pairs
    start_pairs = {(q, 0) for q in current}
    seen = set(start_pairs)
    frontier = list(start_pairs)
    succ: dict[tuple[Hashable, int], set[tuple[Hashable, int]]] = {}
    while frontier:
        q, i = frontier.pop()
        nxt = {(q2, (i + 1) % len(loop)) for q2 in aut.successors(q, loop[i])}
        succ[(q, i)] = nxt
        for pair in nxt:
            if pair not in seen:
                seen.add(pair)
                frontier.append(pair)
    targets = [pair for pair in seen if pair[0] in aut.accepting]
    for target in targets:
        # does target reach itself through at least one step?
        stack = list(succ.get(target, ()))
        visited = set(stack)
        while stack:
            pair = stack.pop()
            if pair == target:
                return True
            for nxt in succ.get(pair, ()):
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
    return False


# --- deterministic Rabin side --------------------------------------------------

RabinState = tuple[TraceObject, SafraBoard]


@dataclass
class RabinAutomaton:
    """Deterministic automaton over (object, K-sparse board) states.

    Transitions are computed on demand by the greedy board schedule and
    memoised; the Rabin pairs are indexed by the chips of the bounded
    supply.  The memo table is not synchronised: share a value across
    threads only behind a lock, or clone per thread.
    """

    algebra: ActivationAlgebra
    objects: tuple[TraceObject, ...]
    alphabet: tuple[TraceMorphism, ...]
    start: RabinState
    K: int
    _memo: dict[tuple[RabinState, TraceMorphism], RabinState] = field(default_factory=dict)

    @property
    def chips(self) -> range:
        return chip_supply(self.algebra, self.K)

    def rabin_pairs(self) -> list[int]:
        return list(self.chips)

    def step(self, state: RabinState, letter: TraceMorphism) -> RabinState | None:
        """Successor state, or None when the letter does not chain."""
        if letter not in self.alphabet:
            raise UnknownLetter(repr(letter))
        obj, brd = state
        if letter.dom != obj:
            return None
        key = (state, letter)
        if key not in self._memo:
            nxt, _ = greedy_step(self.algebra, brd, letter, self.K)
            self._memo[key] = (letter.cod, nxt)
        return self._memo[key]

    def in_good(self, state: RabinState, chip: int) -> bool:
        _, brd = state
        return chip in brd.control and chip in covered_chips(brd)

    def in_bad(self, state: RabinState, chip: int) -> bool:
        _, brd = state
        return chip not in brd.control

    def state_bound(self) -> int:
        """Size bound on the reachable state space (boards per object, summed)."""
        total = 0
        a = self.algebra.size
        for obj in self.objects:
            per = 1  # the empty board
            for c in range(1, self.K * a + 1):
                per += math.comb(self.K * (a + 1), c) * math.factorial(c) * 2 ** (
                    c * obj.size * (a - 1)
                )
            total += per
        return total

    def reachable_states(self) -> set[RabinState]:
        seen = {self.start}
        frontier = [self.start]
        bound = self.state_bound()
        while frontier:
            state = frontier.pop()
            for letter in self.alphabet:
                nxt = self.step(state, letter)
                if nxt is not None and nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
                    assert len(seen) <= bound, "reachable states exceeded the size bound"
        return seen


def build_safra_automaton(
    alg: ActivationAlgebra,
    objects: Iterable[TraceObject],
    morphisms: Iterable[TraceMorphism],
    start: TraceObject,
) -> RabinAutomaton:
    objects = tuple(dict.fromkeys(objects))
    alphabet = tuple(dict.fromkeys(morphisms))
    if start not in objects:
        raise ObjectNotInO(start.name)
    for m in alphabet:
        if m.dom not in objects or m.cod not in objects:
            raise ObjectNotInO(f"morphism {m!r} leaves the object set")
    K = max(obj.size for obj in objects)
    return RabinAutomaton(
        algebra=alg,
        objects=objects,
        alphabet=alphabet,
        start=(start, empty_board(start)),
        K=K,
    )


def rabin_run_states(
    aut: RabinAutomaton, prefix: Sequence[TraceMorphism], loop: Sequence[TraceMorphism]
) -> tuple[list[RabinState], list[RabinState] | None]:
    """Run the lasso; return (all visited states, final cycle or None if the run dies)."""
    if not loop:
        raise ValueError("loop must be nonempty")
    state = aut.start
    visited = [state]
    for m in prefix:
        state = aut.step(state, m)
        if state is None:
            return visited, None
        visited.append(state)
    seen_at: dict[tuple[RabinState, int], int] = {}
    history: list[RabinState] = [state]
    i = 0
    while (state, i % len(loop)) not in seen_at:
        seen_at[(state, i % len(loop))] = i
        state = aut.step(state, loop[i % len(loop)])
        if state is None:
            return visited + history[1:], None
        history.append(state)
        i += 1
    first = seen_at[(state, i % len(loop))]
    cycle = history[first:i]
    return visited + history[1:], cycle


def rabin_accepts_lasso(
    aut: RabinAutomaton, prefix: Sequence[TraceMorphism], loop: Sequence[TraceMorphism]
) -> bool:
    """Deterministic membership: iterate the loop until a (state, position)
    pair repeats; accept iff on the final cycle some chip is everywhere on
    the control and somewhere covered."""
    _, cycle = rabin_run_states(aut, prefix, loop)
    if cycle is None:
        return False
    for chip in aut.rabin_pairs():
        if any(aut.in_good(s, chip) for s in cycle) and not any(aut.in_bad(s, chip) for s in cycle):
            return True
    return False


# --- independent bounded oracle ------------------------------------------------


def periodic_trace_oracle(
    alg: ActivationAlgebra, prefix: Sequence[TraceMorphism], loop: Sequence[TraceMorphism]
) -> bool:
    """Direct search for an infinitely progressing trace on prefix . loop^omega.

    Looks for a position s in the loop, an element x there, and a cyclic
    trace from x back to x over whole loop repetitions whose labels join to
    exactly the activation element.  Pumping that cycle yields blocks of
    exact activation joins; conversely any progressing trace on a periodic
    word repeats such a configuration by pigeonhole.  Graph reachability
    over (element, accumulated value, position) decides this.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    word = list(prefix) + list(loop)
    if not is_valid_path(word):
        return False
    if loop[-1].cod != loop[0].dom:
        return False
    L = len(loop)

    def successors(node: tuple[int, int, int]):
        x, acc, s = node
        for (tx, b, y) in loop[s].triples:
            if tx == x:
                yield (y, join(alg, acc, b), (s + 1) % L)

    for s in range(L):
        for x in range(loop[s].dom.size):
            target = (x, alg.alpha, s)
            frontier = list(successors((x, 0, s)))
            visited = set(frontier)
            while frontier:
                node = frontier.pop()
                if node == target:
                    return True
                for nxt in successors(node):
                    if nxt not in visited:
                        visited.add(nxt)
                        frontier.append(nxt)
    return False
