"""Cyclic trees, derivation systems and preproofs.

Nodes are addresses: tuples of child indices starting at 1, with () the
root.  A cyclic tree is a finite prefix-closed address set plus a partial
back-edge map sending some leaves (buds) to strict ancestors (companions).
A preproof labels nodes with sequent ids and inner nodes with rule ids;
sequents are opaque here, instance modules own their syntax.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx

Addr = tuple[int, ...]


class ProofError(Exception):
    pass


class EndsequentMismatch(ProofError):
    pass


class CountMismatch(ProofError):
    pass


class MissingRuleImage(ProofError):
    pass


class ShapeMismatch(ProofError):
    pass


class NotABud(ProofError):
    pass


def is_prefix(s: Addr, t: Addr) -> bool:
    return len(s) <= len(t) and t[: len(s)] == s


def format_addr(addr: Addr) -> str:
    return ".".join(str(i) for i in addr) if addr else "e"


@dataclass(frozen=True)
class CyclicTree:
    nodes: frozenset[Addr]
    beta: Mapping[Addr, Addr]

    def children(self, t: Addr) -> list[Addr]:
        out = []
        for i in itertools.count(1):
            c = t + (i,)
            if c not in self.nodes:
                break
            out.append(c)
        return out

    def is_leaf(self, t: Addr) -> bool:
        return t + (1,) not in self.nodes

    def leaves(self) -> list[Addr]:
        return [t for t in sorted(self.nodes) if self.is_leaf(t)]

    def buds(self) -> list[Addr]:
        return sorted(self.beta)

    def validate(self) -> list[str]:
        problems = []
        if () not in self.nodes:
            problems.append("missing root")
        for t in self.nodes:
            if t and t[:-1] not in self.nodes:
                problems.append(f"{format_addr(t)}: parent missing (not prefix-closed)")
            if t and t[-1] < 1:
                problems.append(f"{format_addr(t)}: child indices start at 1")
            if t and t[-1] > 1 and t[:-1] + (t[-1] - 1,) not in self.nodes:
                problems.append(f"{format_addr(t)}: gap in sibling indices")
        for bud, comp in self.beta.items():
            if bud not in self.nodes:
                problems.append(f"{format_addr(bud)}: bud not a node")
                continue
            if not self.is_leaf(bud):
                problems.append(f"{format_addr(bud)}: bud is not a leaf")
            if comp not in self.nodes:
                problems.append(f"{format_addr(bud)}: companion missing")
            elif not (is_prefix(comp, bud) and comp != bud):
                problems.append(f"{format_addr(bud)}: companion not a strict ancestor")
            elif self.is_leaf(comp):
                problems.append(f"{format_addr(bud)}: companion is a leaf")
        return problems


@dataclass(frozen=True)
class Rule:
    name: str
    conclusion: str
    premises: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.premises)


@dataclass(frozen=True)
class DerivationSystem:
    sequents: Mapping[str, str]
    rules: Mapping[str, Rule]

    def display(self, sequent: str) -> str:
        return self.sequents.get(sequent, sequent)


@dataclass(frozen=True)
class Preproof:
    tree: CyclicTree
    lam: Mapping[Addr, str]
    delta: Mapping[Addr, str]

    @property
    def nodes(self) -> frozenset[Addr]:
        return self.tree.nodes

    @property
    def beta(self) -> Mapping[Addr, Addr]:
        return self.tree.beta

    def endsequent(self) -> str:
        return self.lam[()]

    def open_leaves(self) -> list[Addr]:
        """Leaves that are neither buds nor rule applications, in address order."""
        return [
            t
            for t in sorted(self.nodes)
            if self.tree.is_leaf(t) and t not in self.delta and t not in self.tree.beta
        ]

    def assumptions(self) -> list[str]:
        return [self.lam[t] for t in self.open_leaves()]


def single_node(sequent: str) -> Preproof:
    """The identity preproof: one open leaf deriving its own sequent."""
    tree = CyclicTree(nodes=frozenset({()}), beta={})
    return Preproof(tree=tree, lam={(): sequent}, delta={})


def validate_preproof(system: DerivationSystem, proof: Preproof) -> list[str]:
    """All violated preproof clauses, each tagged with its node address."""
    problems = list(proof.tree.validate())
    for t in proof.nodes:
        if t not in proof.lam:
            problems.append(f"{format_addr(t)}: unlabelled node")
    for t, seq in proof.lam.items():
        if t not in proof.nodes:
            problems.append(f"{format_addr(t)}: label on missing node")
        elif seq not in system.sequents:
            problems.append(f"{format_addr(t)}: unknown sequent {seq!r}")
    for bud, comp in proof.beta.items():
        if bud in proof.delta:
            problems.append(f"{format_addr(bud)}: bud carries a rule")
        if proof.lam.get(bud) != proof.lam.get(comp):
            problems.append(f"{format_addr(bud)}: bud label differs from companion")
    for t, rule_id in proof.delta.items():
        if t not in proof.nodes:
            problems.append(f"{format_addr(t)}: rule on missing node")
            continue
        rule = system.rules.get(rule_id)
        if rule is None:
            problems.append(f"{format_addr(t)}: unknown rule {rule_id!r}")
            continue
        if proof.lam.get(t) != rule.conclusion:
            problems.append(f"{format_addr(t)}: label does not match conclusion of {rule_id}")
        kids = proof.tree.children(t)
        if len(kids) != rule.arity:
            problems.append(
                f"{format_addr(t)}: {rule_id} expects {rule.arity} premises, found {len(kids)}"
            )
            continue
        for i, kid in enumerate(kids):
            if proof.lam.get(kid) != rule.premises[i]:
                problems.append(f"{format_addr(kid)}: label does not match premise {i + 1} of {rule_id}")
    for t in proof.nodes:
        if not proof.tree.is_leaf(t) and t not in proof.delta:
            problems.append(f"{format_addr(t)}: inner node without a rule")
    return problems


def require_valid(system: DerivationSystem, proof: Preproof) -> Preproof:
    problems = validate_preproof(system, proof)
    if problems:
        raise ProofError("; ".join(problems))
    return proof


# --- connected cycles -------------------------------------------------------


@dataclass(frozen=True)
class ConnectedCycle:
    buds: frozenset[Addr]
    base: Addr
    subtree: frozenset[Addr]


def _cycle_subtree(tree: CyclicTree, buds: Iterable[Addr]) -> frozenset[Addr]:
    out = set()
    for t in buds:
        comp = tree.beta[t]
        out.update(s for s in tree.nodes if is_prefix(comp, s) and is_prefix(s, t))
    return frozenset(out)


def is_connected_cycle(tree: CyclicTree, buds: frozenset[Addr], base: Addr) -> bool:
    """Direct test of the two connected-cycle clauses for a candidate base."""
    if base not in buds or not buds <= set(tree.beta):
        return False
    if not all(is_prefix(tree.beta[base], tree.beta[t]) for t in buds):
        return False
    # every bud must reach the base by hops t -> t' with beta(t) <= t'
    reached = {base}
    frontier = [base]
    while frontier:
        t = frontier.pop()
        for s in buds:
            if s not in reached and is_prefix(tree.beta[s], t):
                # s can hop onto t when beta(s) <= t
                reached.add(s)
                frontier.append(s)
    return reached == set(buds)


def connected_cycles(tree: CyclicTree) -> list[ConnectedCycle]:
    """Maximal connected cycles of a cyclic tree.

    For each bud b, the largest candidate with base b collects every bud t
    with beta(b) <= beta(t) that can reach b through such buds; the result
    keeps the inclusion-maximal candidates, one entry per distinct bud set.
    """
    buds = tree.buds()
    candidates: dict[frozenset[Addr], Addr] = {}
    for b in buds:
        eligible = {t for t in buds if is_prefix(tree.beta[b], tree.beta[t])}
        reached = {b}
        grown = True
        while grown:
            grown = False
            for t in eligible - reached:
                if any(is_prefix(tree.beta[t], u) for u in reached):
                    reached.add(t)
                    grown = True
        eta = frozenset(reached)
        if eta not in candidates or candidates[eta] > b:
            candidates[eta] = b
    maximal = [
        (eta, base)
        for eta, base in candidates.items()
        if not any(eta < other for other in candidates)
    ]
    return [
        ConnectedCycle(buds=eta, base=base, subtree=_cycle_subtree(tree, eta))
        for eta, base in sorted(maximal, key=lambda pair: sorted(pair[0]))
    ]


# --- grafting and morphisms -------------------------------------------------


def compose(proof: Preproof, fillers: Sequence[Preproof]) -> Preproof:
    """Graft fillers onto the open leaves of a preproof, in address order."""
    leaves = proof.open_leaves()
    if len(fillers) != len(leaves):
        raise CountMismatch(f"{len(leaves)} open leaves but {len(fillers)} fillers")
    for leaf, filler in zip(leaves, fillers):
        if filler.endsequent() != proof.lam[leaf]:
            raise EndsequentMismatch(
                f"filler for {format_addr(leaf)} derives {filler.endsequent()!r}, "
                f"leaf wants {proof.lam[leaf]!r}"
            )
    nodes = set(proof.nodes)
    lam = dict(proof.lam)
    delta = dict(proof.delta)
    beta = dict(proof.tree.beta)
    for leaf, filler in zip(leaves, fillers):
        for t in filler.nodes:
            nodes.add(leaf + t)
            lam[leaf + t] = filler.lam[t]
        for t, rule in filler.delta.items():
            delta[leaf + t] = rule
        for bud, comp in filler.tree.beta.items():
            beta[leaf + bud] = leaf + comp
    return Preproof(tree=CyclicTree(frozenset(nodes), beta), lam=lam, delta=delta)


@dataclass(frozen=True)
class PreproofMorphism:
    """Translation of sequents plus an admissibility witness per rule.

    The image of a rule must be a preproof whose endsequent is the
    translated conclusion and whose assumptions are the translated premises
    in order.
    """

    sequent_map: Mapping[str, str]
    rule_image: Mapping[str, Preproof]

    def on_sequent(self, seq: str) -> str:
        return self.sequent_map.get(seq, seq)


def apply_morphism(f: PreproofMorphism, proof: Preproof) -> Preproof:
    """Replace every rule application by its image preproof, re-tying buds.

    Buds are first left open; once the image of their companion's subtree is
    assembled, the corresponding open leaves become back-edges to its root.
    """
    companions = set(proof.tree.beta.values())

    def build(t: Addr) -> tuple[Preproof, dict[Addr, Addr]]:
        # returns the image of the subtree at t plus, for open leaves that
        # stand in for buds, the address of the original bud
        if t in proof.tree.beta:
            return single_node(f.on_sequent(proof.lam[t])), {(): t}
        if t not in proof.delta:
            return single_node(f.on_sequent(proof.lam[t])), {}
        rule_id = proof.delta[t]
        if rule_id not in f.rule_image:
            raise MissingRuleImage(f"no image preproof for rule {rule_id!r}")
        gadget = f.rule_image[rule_id]
        kids = proof.tree.children(t)
        slots = gadget.open_leaves()
        if len(slots) != len(kids):
            raise ShapeMismatch(
                f"image of {rule_id!r} has {len(slots)} assumptions for {len(kids)} premises"
            )
        subs, pending = [], {}
        for slot, kid in zip(slots, kids):
            sub, sub_pending = build(kid)
            if sub.endsequent() != gadget.lam[slot]:
                raise ShapeMismatch(
                    f"image of {rule_id!r}: assumption at {format_addr(slot)} is "
                    f"{gadget.lam[slot]!r}, premise provides {sub.endsequent()!r}"
                )
            subs.append(sub)
            for leaf, bud in sub_pending.items():
                pending[slot + leaf] = bud
        grafted = compose(gadget, subs)
        if t in companions:
            beta = dict(grafted.tree.beta)
            closed = []
            for leaf, bud in pending.items():
                if proof.tree.beta[bud] == t:
                    beta[leaf] = ()
                    closed.append(leaf)
            for leaf in closed:
                del pending[leaf]
            grafted = Preproof(
                tree=CyclicTree(grafted.nodes, beta), lam=dict(grafted.lam), delta=dict(grafted.delta)
            )
        return grafted, pending

    image, pending = build(())
    if pending:
        raise ShapeMismatch("bud without enclosing companion image")
    return image


# --- unfolding ---------------------------------------------------------------


def unfold_at(proof: Preproof, bud: Addr, retarget: str = "new_bud") -> Preproof:
    """One unfolding step: copy the companion's subtree below the bud.

    The bud becomes an inner node repeating its companion's derivation; the
    copy of the bud itself points at ``bud`` (retarget="new_bud") or at the
    old companion (retarget="old_companion").  Copies of other buds inside
    the copied subtree keep their cycle structure: companions inside the
    copied region are re-tied to their copies, companions above it are kept.
    """
    if bud not in proof.tree.beta:
        raise NotABud(format_addr(bud))
    if retarget not in ("new_bud", "old_companion"):
        raise ValueError(f"unknown retarget {retarget!r}")
    comp = proof.tree.beta[bud]
    suffix = bud[len(comp):]

    nodes = set(proof.nodes)
    lam = dict(proof.lam)
    delta = dict(proof.delta)
    beta = dict(proof.tree.beta)
    del beta[bud]

    copied = [s for s in proof.nodes if is_prefix(comp, s)]
    for s in copied:
        new = bud + s[len(comp):]
        nodes.add(new)
        lam[new] = proof.lam[s]
        if s in proof.delta:
            delta[new] = proof.delta[s]
    for s in copied:
        if s not in proof.tree.beta:
            continue
        new = bud + s[len(comp):]
        if s == bud:
            beta[new] = bud if retarget == "new_bud" else comp
        else:
            target = proof.tree.beta[s]
            if is_prefix(comp, target):
                beta[new] = bud + target[len(comp):]
            else:
                beta[new] = target
    assert bud + suffix in beta
    return Preproof(tree=CyclicTree(frozenset(nodes), beta), lam=lam, delta=delta)


def is_unfolding(original: Preproof, candidate: Preproof, max_steps: int | None = None) -> bool:
    """Search for a sequence of unfold_at steps turning original into candidate.

    Backtracks over the choice of bud and retarget; prunes any intermediate
    proof that grew outside the candidate's node set or disagrees with its
    labels.  Intended for desk-scale proofs.
    """
    if max_steps is None:
        max_steps = len(candidate.nodes)

    def agrees(p: Preproof) -> bool:
        if not p.nodes <= candidate.nodes:
            return False
        return all(
            p.lam[t] == candidate.lam.get(t) and p.delta.get(t) == candidate.delta.get(t)
            for t in p.nodes
            if t not in p.tree.beta
        )

    def key(p: Preproof):
        return (p.nodes, tuple(sorted(p.tree.beta.items())))

    seen = set()

    def search(p: Preproof, budget: int) -> bool:
        if p == candidate:
            return True
        if budget == 0:
            return False
        k = key(p)
        if k in seen:
            return False
        seen.add(k)
        for bud in p.tree.buds():
            # only unfold where the candidate disagrees with the current bud
            if candidate.tree.beta.get(bud) == p.tree.beta[bud]:
                continue
            for retarget in ("new_bud", "old_companion"):
                bigger = unfold_at(p, bud, retarget)
                if agrees(bigger) and search(bigger, budget - 1):
                    return True
        return False

    if not agrees(original):
        return False
    return search(original, max_steps)


# --- branches and lassos ------------------------------------------------------


def is_unrolling(original: Preproof, candidate: Preproof) -> bool:
    """Does the candidate unroll the original proof?

    Checks for a projection sending every candidate node to an original
    node: the root to the root, rule applications to equal rule
    applications with children following the original's children (buds
    resolved to their companions), and each candidate bud to the same
    original node as its companion.  Weaker than reachability by unfolding
    steps: sibling branches may re-close private copies of a shared cycle,
    which stepwise unfolding cannot express.
    """
    h: dict[Addr, Addr] = {(): ()}
    for t in sorted(candidate.nodes):
        if t not in h:
            return False
        n = h[t]
        if candidate.lam[t] != original.lam[n]:
            return False
        if t in candidate.tree.beta:
            comp = candidate.tree.beta[t]
            if h.get(comp) != n:
                return False
            continue
        if t in candidate.delta:
            if candidate.delta[t] != original.delta.get(n):
                return False
            for i, kid in enumerate(candidate.tree.children(t), start=1):
                target = n + (i,)
                h[kid] = original.tree.beta.get(target, target)
        elif original.delta.get(n) is not None or n in original.tree.beta:
            return False
    return True


def graph_edges(proof: Preproof) -> dict[Addr, list[tuple[Addr, tuple]]]:
    """Proof-graph successors: child edges labelled ('child', i), back edges ('beta',)."""
    out: dict[Addr, list[tuple[Addr, tuple]]] = {t: [] for t in proof.nodes}
    for t in proof.nodes:
        if t in proof.tree.beta:
            out[t].append((proof.tree.beta[t], ("beta",)))
        else:
            for i, kid in enumerate(proof.tree.children(t), start=1):
                out[t].append((kid, ("child", i)))
    return out


def _path_from_root(proof: Preproof, target: Addr) -> list[Addr]:
    return [target[:i] for i in range(len(target) + 1)]


def infinite_branch_lassos(proof: Preproof) -> Iterator[tuple[list[Addr], list[Addr]]]:
    """Lassos (prefix, loop) for every simple cycle of the proof graph.

    The loop is a simple cycle through nodes and back-edges; the prefix is
    the tree path from the root to the loop's entry node (excluded).  The
    represented branch is prefix followed by the loop forever.
    """
    digraph = nx.DiGraph()
    digraph.add_nodes_from(proof.nodes)
    for src, succs in graph_edges(proof).items():
        for dst, _ in succs:
            digraph.add_edge(src, dst)
    for cycle in nx.simple_cycles(digraph):
        entry = min(cycle, key=lambda t: (len(t), t))
        k = cycle.index(entry)
        loop = cycle[k:] + cycle[:k]
        prefix = _path_from_root(proof, entry)[:-1]
        yield prefix, loop
