"""Proof search: decorating a trace-condition proof with boards.

``annotate`` unrolls a proof depth-first while driving the greedy board
schedule, closing a branch with a back-edge as soon as the current
(proof node, board) pair equals an ancestor's.  Both components live in
finite sets, so every branch closes; the closed cycle always carries a
chip that stays on the control and is reset within it, which is checked at
closure time.  ``expand`` then inflates each greedy step into explicit
structural steps of the reset system, sharing the leading resets and the
population between premises and undoing the trailing thinning with one
weakening per premise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .boards import SafraBoard, Transcript, empty_board, greedy_step, is_k_sparse
from .gtc import GtcVerdict, TraceInterpretation, check_gtc, validate_interpretation
from .proofs import Addr, CyclicTree, DerivationSystem, Preproof, format_addr
from .reset import AnnotatedSequent, ResetPreproof, ResetStep


class SearchError(Exception):
    pass


class GtcFails(SearchError):
    pass


class DepthExceeded(SearchError):
    pass


class InvalidSearchProof(SearchError):
    pass


@dataclass(frozen=True)
class SearchStep:
    rule: str
    transcripts: tuple[Transcript, ...]


@dataclass(frozen=True)
class SearchProof:
    tree: CyclicTree
    lam: Mapping[Addr, AnnotatedSequent]
    steps: Mapping[Addr, SearchStep]
    K: int

    @property
    def nodes(self) -> frozenset[Addr]:
        return self.tree.nodes


def _resolve(proof: Preproof, t: Addr) -> Addr:
    return proof.tree.beta.get(t, t)


def default_supply_bound(proof: Preproof, iota: TraceInterpretation) -> int:
    return max(iota.object_of[proof.lam[t]].size for t in proof.nodes)


def annotate(
    system: DerivationSystem,
    proof: Preproof,
    iota: TraceInterpretation,
    K: int | None = None,
    max_depth: int | None = None,
    verdict: GtcVerdict | None = None,
) -> SearchProof:
    """Unfold a closed trace-condition proof into a board-annotated proof.

    Premises are explored left to right; a branch closes on the nearest
    ancestor carrying the same (proof node, board) pair.  Stripping the
    result node-wise yields an unfolding of the input.  ``max_depth`` bounds
    the branch length for diagnostics; termination holds without it.
    """
    if verdict is None:
        verdict = check_gtc(system, proof, iota)
    if not verdict.ok:
        raise GtcFails("the input does not satisfy the global trace condition")
    if K is None:
        K = default_supply_bound(proof, iota)

    nodes: set[Addr] = set()
    lam: dict[Addr, AnnotatedSequent] = {}
    steps: dict[Addr, SearchStep] = {}
    beta: dict[Addr, Addr] = {}

    def persistent_reset_chip(boards: list[SafraBoard]) -> int | None:
        from .boards import covered_chips

        shared = set.intersection(*(set(b.control) for b in boards))
        for chip in sorted(shared):
            if any(chip in covered_chips(b) for b in boards):
                return chip
        return None

    def walk(t: Addr, brd: SafraBoard, out: Addr, stack: list, via_bud: bool) -> None:
        # closing is allowed only where the input proof jumped through a bud:
        # the resulting cycles copy whole companion-to-bud segments, which is
        # what keeps the stripped output reachable by plain unfolding steps
        if max_depth is not None and len(stack) >= max_depth:
            raise DepthExceeded(f"no closure within depth {max_depth}")
        if via_bud:
            for j in range(len(stack) - 1, -1, -1):
                key, ancestor_out = stack[j]
                if key == (t, brd):
                    nodes.add(out)
                    lam[out] = AnnotatedSequent(proof.lam[t], brd)
                    beta[out] = ancestor_out
                    cycle_boards = [b for (_, b), _ in stack[j:]] + [brd]
                    assert persistent_reset_chip(cycle_boards) is not None, (
                        "closed a cycle without a persistent reset chip"
                    )
                    return
        nodes.add(out)
        lam[out] = AnnotatedSequent(proof.lam[t], brd)
        rule_id = proof.delta[t]
        rule = system.rules[rule_id]
        maps = iota.maps_of[rule_id]
        results = [greedy_step(iota.algebra, brd, maps[i], K) for i in range(rule.arity)]
        steps[out] = SearchStep(rule=rule_id, transcripts=tuple(tr for _, tr in results))
        frame = ((t, brd), out)
        for i in range(rule.arity):
            child = t + (i + 1,)
            walk(
                _resolve(proof, child),
                results[i][0],
                out + (i + 1,),
                stack + [frame],
                via_bud=child in proof.tree.beta,
            )

    root_board = empty_board(iota.object_of[proof.lam[()]])
    walk((), root_board, (), [], via_bud=False)
    return SearchProof(tree=CyclicTree(frozenset(nodes), beta), lam=lam, steps=steps, K=K)


def strip_search(sp: SearchProof) -> Preproof:
    """Node-wise removal of the annotations."""
    return Preproof(
        tree=sp.tree,
        lam={t: ann.base for t, ann in sp.lam.items()},
        delta={t: step.rule for t, step in sp.steps.items()},
    )


def validate_search_proof(
    system: DerivationSystem, iota: TraceInterpretation, sp: SearchProof
) -> list[str]:
    """Replays every greedy transition; annotations must match exactly."""
    problems = list(sp.tree.validate())
    problems.extend(validate_interpretation(system, iota))
    for t in sp.nodes:
        if t not in sp.lam:
            problems.append(f"{format_addr(t)}: unlabelled node")
            continue
        ann = sp.lam[t]
        if iota.object_of.get(ann.base) != ann.board.obj:
            problems.append(f"{format_addr(t)}: board object differs from the sequent's")
        if not is_k_sparse(iota.algebra, ann.board, sp.K):
            problems.append(f"{format_addr(t)}: board is not K-sparse")
    for bud, comp in sp.tree.beta.items():
        if sp.lam.get(bud) != sp.lam.get(comp):
            problems.append(f"{format_addr(bud)}: bud annotation differs from companion")
    for t, step in sp.steps.items():
        rule = system.rules.get(step.rule)
        if rule is None:
            problems.append(f"{format_addr(t)}: unknown rule {step.rule!r}")
            continue
        if sp.lam[t].base != rule.conclusion:
            problems.append(f"{format_addr(t)}: sequent does not match the rule conclusion")
            continue
        kids = sp.tree.children(t)
        if len(kids) != rule.arity or len(step.transcripts) != rule.arity:
            problems.append(f"{format_addr(t)}: premise count mismatch")
            continue
        for i, kid in enumerate(kids):
            expected, transcript = greedy_step(
                iota.algebra, sp.lam[t].board, iota.maps_of[step.rule][i], sp.K
            )
            if step.transcripts[i] != transcript:
                problems.append(f"{format_addr(kid)}: transcript is not the greedy transition")
            want = AnnotatedSequent(rule.premises[i], expected)
            if sp.lam.get(kid) != want:
                problems.append(f"{format_addr(kid)}: annotation is not the greedy successor")
    for t in sp.nodes:
        if not sp.tree.is_leaf(t) and t not in sp.steps:
            problems.append(f"{format_addr(t)}: inner node without a step")
    return problems


def check_search_condition(sp: SearchProof) -> bool:
    """Soundness of a search proof: no cycle may lack a persistent covered chip.

    Evaluated on the proof graph itself (nodes already carry their boards):
    a bad cycle is one on which every chip either leaves the control or is
    never covered.
    """
    from .boards import covered_chips
    from .gtc import find_bad_cycle

    graph: dict[Addr, set[Addr]] = {}
    for t in sp.nodes:
        if t in sp.tree.beta:
            graph[t] = {sp.tree.beta[t]}
        else:
            graph[t] = set(sp.tree.children(t))
    chips: set[int] = set()
    for ann in sp.lam.values():
        chips.update(ann.board.control)
    bad = find_bad_cycle(
        graph,
        sorted(chips),
        lambda t, chip: chip in covered_chips(sp.lam[t].board),
        lambda t, chip: chip not in sp.lam[t].board.control,
    )
    return bad is None


def expand(
    system: DerivationSystem, iota: TraceInterpretation, sp: SearchProof
) -> ResetPreproof:
    """Inflate greedy steps into reset-system derivations.

    Per node: the recorded resets (descending) and the population, shared by
    all premises, then the lifted rule, then one weakening per premise that
    redoes the thinning.  Vacuous steps are omitted; the reset system has no
    identity rule, so emitting nothing is the faithful encoding.
    """
    problems = validate_search_proof(system, iota, sp)
    if problems:
        raise InvalidSearchProof("; ".join(problems))

    nodes: set[Addr] = set()
    lam: dict[Addr, AnnotatedSequent] = {}
    steps: dict[Addr, ResetStep] = {}
    beta: dict[Addr, Addr] = {}
    start_of: dict[Addr, Addr] = {}

    def build(t: Addr, out: Addr) -> None:
        start_of[t] = out
        ann = sp.lam[t]
        nodes.add(out)
        lam[out] = ann
        if t in sp.tree.beta:
            beta[out] = start_of[sp.tree.beta[t]]
            return
        step = sp.steps.get(t)
        if step is None:
            return  # open assumption
        rule = system.rules[step.rule]
        shared = ()
        if step.transcripts:
            shared = tuple(tr for tr in step.transcripts[0] if tr.kind in ("reset", "pop"))
            for other in step.transcripts[1:]:
                assert tuple(tr for tr in other if tr.kind in ("reset", "pop")) == shared, (
                    "premises disagree on the shared reset/populate phases"
                )
        cur = out
        for tr in shared:
            lam[cur] = AnnotatedSequent(ann.base, tr.before)
            steps[cur] = (
                ResetStep("reset", chip=tr.chip) if tr.kind == "reset" else ResetStep("pop")
            )
            nxt = cur + (1,)
            nodes.add(nxt)
            cur = nxt
        lam[cur] = AnnotatedSequent(ann.base, shared[-1].after if shared else ann.board)
        steps[cur] = ResetStep("rule", rule=step.rule)
        for i, kid in enumerate(sp.tree.children(t), start=1):
            slot = cur + (i,)
            nodes.add(slot)
            transcript = step.transcripts[i - 1]
            tau = next(tr for tr in transcript if tr.kind == "tau")
            thinned = next(tr for tr in transcript if tr.kind == "thin")
            if thinned.after != thinned.before:
                lam[slot] = AnnotatedSequent(rule.premises[i - 1], tau.after)
                steps[slot] = ResetStep("weak")
                inner = slot + (1,)
                nodes.add(inner)
                build(kid, inner)
            else:
                build(kid, slot)

    build((), ())
    return ResetPreproof(tree=CyclicTree(frozenset(nodes), beta), lam=lam, steps=steps)
