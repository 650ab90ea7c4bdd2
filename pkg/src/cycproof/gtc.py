"""Trace interpretations and the global trace condition checker.

A trace interpretation assigns a trace object to every sequent and, per
derivation rule, one morphism per premise from the conclusion's object to
the premise's.  A closed preproof satisfies the global trace condition when
every infinite branch carries a trace that progresses infinitely often.

The checker runs the deterministic board automaton alongside the proof
graph and looks for a reachable bad cycle: one on which no chip stays on
the control throughout while getting covered somewhere.  Such a cycle,
looped forever, is exactly a branch without an infinitely progressing
trace.  A bounded oracle that replays explicit lassos through the
nondeterministic trace-guessing automaton cross-validates the checker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .algebra import ActivationAlgebra
from .automata import (
    RabinAutomaton,
    build_buchi,
    build_safra_automaton,
    buchi_accepts_lasso,
)
from .proofs import Addr, DerivationSystem, Preproof, format_addr, graph_edges
from .trace import TraceMorphism, TraceObject, identity


class GtcError(Exception):
    pass


class OpenLeaves(GtcError):
    pass


class InterpretationMismatch(GtcError):
    pass


@dataclass(frozen=True)
class TraceInterpretation:
    algebra: ActivationAlgebra
    object_of: Mapping[str, TraceObject]
    maps_of: Mapping[str, tuple[TraceMorphism, ...]]


def validate_interpretation(system: DerivationSystem, iota: TraceInterpretation) -> list[str]:
    problems = []
    for rule_id, rule in system.rules.items():
        maps = iota.maps_of.get(rule_id)
        if maps is None:
            problems.append(f"{rule_id}: no trace maps")
            continue
        if len(maps) != rule.arity:
            problems.append(f"{rule_id}: {len(maps)} maps for {rule.arity} premises")
            continue
        conc = iota.object_of.get(rule.conclusion)
        if conc is None:
            problems.append(f"{rule_id}: conclusion sequent has no trace object")
            continue
        for i, m in enumerate(maps):
            if m.dom != conc:
                problems.append(f"{rule_id}: map {i + 1} domain is not the conclusion object")
            prem = iota.object_of.get(rule.premises[i])
            if prem is None or m.cod != prem:
                problems.append(f"{rule_id}: map {i + 1} codomain is not the premise object")
    return problems


# --- words induced by branches -------------------------------------------------


def edge_morphism(proof: Preproof, iota: TraceInterpretation, src: Addr, label: tuple) -> TraceMorphism:
    if label[0] == "beta":
        return identity(iota.object_of[proof.lam[src]])
    return iota.maps_of[proof.delta[src]][label[1] - 1]


def _edge_label(proof: Preproof, src: Addr, dst: Addr) -> tuple:
    if src in proof.tree.beta and proof.tree.beta[src] == dst:
        return ("beta",)
    return ("child", dst[-1])


def induced_lasso(
    proof: Preproof,
    iota: TraceInterpretation,
    lasso: tuple[Sequence[Addr], Sequence[Addr]],
) -> tuple[list[TraceMorphism], list[TraceMorphism]]:
    """Morphism words for a node lasso: per-premise maps on child steps,
    identities on bud-to-companion steps."""
    prefix_nodes, loop_nodes = lasso
    if not loop_nodes:
        raise ValueError("loops contain at least one edge")
    path = list(prefix_nodes) + [loop_nodes[0]]
    prefix_word = [
        edge_morphism(proof, iota, path[i], _edge_label(proof, path[i], path[i + 1]))
        for i in range(len(path) - 1)
    ]
    cyc = list(loop_nodes) + [loop_nodes[0]]
    loop_word = [
        edge_morphism(proof, iota, cyc[i], _edge_label(proof, cyc[i], cyc[i + 1]))
        for i in range(len(cyc) - 1)
    ]
    return prefix_word, loop_word


def proof_morphisms(proof: Preproof, iota: TraceInterpretation) -> list[TraceMorphism]:
    """All morphisms labelling the proof graph, bud identities included."""
    out: list[TraceMorphism] = []
    for t in sorted(proof.nodes):
        if t in proof.delta:
            out.extend(iota.maps_of[proof.delta[t]])
        if t in proof.tree.beta:
            out.append(identity(iota.object_of[proof.lam[t]]))
    return list(dict.fromkeys(out))


# --- bad-cycle search -----------------------------------------------------------


def _closed_walk(graph: Mapping[Hashable, set], nodes: list) -> list:
    """A closed walk visiting every node of a strongly connected set."""

    def path(a, b) -> list:
        if a == b:
            return []
        frontier = [a]
        back: dict = {a: None}
        while frontier:
            nxt = []
            for u in frontier:
                for v in graph.get(u, ()):
                    if v in back or v not in restricted:
                        continue
                    back[v] = u
                    if v == b:
                        out = [v]
                        while back[out[-1]] is not None:
                            out.append(back[out[-1]])
                        return list(reversed(out))[1:]
                    nxt.append(v)
            frontier = nxt
        raise AssertionError("strongly connected set lost a path")

    restricted = set(nodes)
    walk = [nodes[0]]
    for target in nodes[1:] + [nodes[0]]:
        walk.extend(path(walk[-1], target))
    return walk[:-1] if len(walk) > 1 else walk


def find_bad_cycle(
    graph: Mapping[Hashable, set],
    chips: Iterable[int],
    in_good: Callable[[Hashable, int], bool],
    in_bad: Callable[[Hashable, int], bool],
) -> list | None:
    """Search for a cycle on which every chip misses its good set or meets its bad set.

    Recursive refinement: inside a strongly connected subgraph, any chip
    whose good set is met but whose bad set is absent certifies every cycle
    through its good states, so a bad cycle must avoid those states; remove
    them and recurse.  A component with no such chip is itself a bad cycle.
    """
    chips = list(chips)

    def digraph(nodes: set) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(nodes)
        for u in nodes:
            for v in graph.get(u, ()):
                if v in nodes:
                    g.add_edge(u, v)
        return g

    def has_edge(g: nx.DiGraph, comp: set) -> bool:
        return len(comp) > 1 or any(g.has_edge(u, u) for u in comp)

    def search(nodes: set) -> list | None:
        g = digraph(nodes)
        for comp in nx.strongly_connected_components(g):
            if not has_edge(g, comp):
                continue
            viol = [
                chip
                for chip in chips
                if any(in_good(u, chip) for u in comp) and not any(in_bad(u, chip) for u in comp)
            ]
            if not viol:
                return _closed_walk(graph, sorted(comp, key=repr))
            remainder = {u for u in comp if not any(in_good(u, chip) for chip in viol)}
            if remainder:
                found = search(remainder)
                if found is not None:
                    return found
        return None

    return search(set(graph))


# --- the checker -----------------------------------------------------------------


@dataclass
class GtcVerdict:
    ok: bool
    counterexample: tuple[list[Addr], list[Addr]] | None = None

    def __bool__(self) -> bool:
        return self.ok


def _require_closed(system: DerivationSystem, proof: Preproof) -> None:
    from .proofs import validate_preproof

    problems = validate_preproof(system, proof)
    if problems:
        raise GtcError("; ".join(problems))
    if proof.open_leaves():
        raise OpenLeaves(", ".join(format_addr(t) for t in proof.open_leaves()))


def product_automaton(proof: Preproof, iota: TraceInterpretation) -> RabinAutomaton:
    morphisms = proof_morphisms(proof, iota)
    objects = [iota.object_of[proof.lam[t]] for t in sorted(proof.nodes)]
    for m in morphisms:
        objects.extend((m.dom, m.cod))
    root_obj = iota.object_of[proof.lam[()]]
    return build_safra_automaton(iota.algebra, objects, morphisms, root_obj)


def check_gtc(system: DerivationSystem, proof: Preproof, iota: TraceInterpretation) -> GtcVerdict:
    """Decide the global trace condition of a closed preproof.

    Explores the product of the proof graph with the deterministic board
    automaton and searches it for a reachable bad cycle; the projection of
    such a cycle is returned as a counterexample lasso.
    """
    _require_closed(system, proof)
    problems = validate_interpretation(system, iota)
    if problems:
        raise InterpretationMismatch("; ".join(problems))
    aut = product_automaton(proof, iota)
    edges = graph_edges(proof)

    start = ((), aut.start)
    succ: dict = {}
    frontier = [start]
    seen = {start}
    while frontier:
        node = frontier.pop()
        addr, state = node
        succ[node] = set()
        for dst, label in edges[addr]:
            letter = edge_morphism(proof, iota, addr, label)
            nxt_state = aut.step(state, letter)
            if nxt_state is None:
                raise InterpretationMismatch(
                    f"{format_addr(addr)}: trace map does not chain with the node object"
                )
            nxt = (dst, nxt_state)
            succ[node].add(nxt)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)

    cycle = find_bad_cycle(
        succ,
        aut.rabin_pairs(),
        lambda node, chip: aut.in_good(node[1], chip),
        lambda node, chip: aut.in_bad(node[1], chip),
    )
    if cycle is None:
        return GtcVerdict(ok=True)

    entry = cycle[0]
    back: dict = {start: None}
    frontier = [start]
    while entry not in back:
        nxt = []
        for u in frontier:
            for v in succ[u]:
                if v not in back:
                    back[v] = u
                    nxt.append(v)
        frontier = nxt
    path = [entry]
    while back[path[-1]] is not None:
        path.append(back[path[-1]])
    path.reverse()
    prefix = [addr for addr, _ in path[:-1]]
    loop = [addr for addr, _ in cycle]
    return GtcVerdict(ok=False, counterexample=(prefix, loop))


# --- bounded oracle ---------------------------------------------------------------


def _closed_walks(edges: Mapping[Addr, list], scc: set, base: Addr, max_len: int):
    """Closed walks at ``base`` within one strongly connected component.

    Walks may revisit nodes, so compositions of simple cycles through the
    base are enumerated as well; requiring the base to be the least visited
    node deduplicates rotations.
    """
    walk = [base]

    def extend():
        u = walk[-1]
        for v, _ in edges[u]:
            if v not in scc or v < base:
                continue
            if v == base:
                yield list(walk)
            if len(walk) < max_len:
                walk.append(v)
                yield from extend()
                walk.pop()

    yield from extend()


def check_gtc_oracle(
    system: DerivationSystem,
    proof: Preproof,
    iota: TraceInterpretation,
    max_loop_len: int = 12,
) -> GtcVerdict:
    """Bounded lasso-enumeration oracle for the trace condition.

    Enumerates closed walks of the proof graph (simple cycles and their
    bounded compositions) and replays each induced word through the
    trace-guessing automaton; the preproof passes iff every enumerated
    lasso is accepted.  Complete for proofs whose counterexample cycles fit
    the length bound.
    """
    _require_closed(system, proof)
    problems = validate_interpretation(system, iota)
    if problems:
        raise InterpretationMismatch("; ".join(problems))
    aut = build_buchi(iota.algebra, proof_morphisms(proof, iota))
    edges = graph_edges(proof)
    digraph = nx.DiGraph()
    digraph.add_nodes_from(proof.nodes)
    for u, outs in edges.items():
        for v, _ in outs:
            digraph.add_edge(u, v)
    for comp in nx.strongly_connected_components(digraph):
        only = next(iter(comp))
        if len(comp) == 1 and not digraph.has_edge(only, only):
            continue
        for base in sorted(comp):
            for loop in _closed_walks(edges, comp, base, max_loop_len):
                prefix = [base[:i] for i in range(len(base))]
                word_prefix, word_loop = induced_lasso(proof, iota, (prefix, loop))
                if not buchi_accepts_lasso(aut, word_prefix, word_loop):
                    return GtcVerdict(ok=False, counterexample=(prefix, loop))
    return GtcVerdict(ok=True)
