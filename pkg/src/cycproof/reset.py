"""The reset proof system generated from a trace interpretation.

Sequents are annotated with Safra boards; each base rule lifts to a step
whose premise boards are move-successors of the conclusion board, and three
structural steps (weaken, reset, populate) perform board bookkeeping.  The
soundness condition is local: every bud-to-companion path must keep a
prefix of its controls unchanged and reset that prefix's top chip.

Checking therefore touches only the simple-cycle segments of a proof; the
verdict records which nodes were read so tests can assert that locality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .algebra import ActivationAlgebra
from .boards import (
    SafraBoard,
    boards_equal_up_to_fresh,
    covered_chips,
    is_population,
    is_weakening,
    reset as reset_board,
    tau_successor,
)
from .gtc import TraceInterpretation
from .proofs import Addr, CyclicTree, DerivationSystem, Preproof, format_addr, is_prefix


class ResetError(Exception):
    pass


class IllegalTransition(ResetError):
    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


class InvalidPreproof(ResetError):
    pass


class NotAProof(ResetError):
    pass


@dataclass(frozen=True)
class AnnotatedSequent:
    base: str
    board: SafraBoard


@dataclass(frozen=True)
class ResetStep:
    kind: str  # 'rule' | 'weak' | 'reset' | 'pop'
    rule: str | None = None
    chip: int | None = None

    def describe(self) -> str:
        if self.kind == "rule":
            return str(self.rule)
        if self.kind == "reset":
            return f"reset({self.chip})"
        return self.kind


@dataclass(frozen=True)
class ResetPreproof:
    tree: CyclicTree
    lam: Mapping[Addr, AnnotatedSequent]
    steps: Mapping[Addr, ResetStep]

    @property
    def nodes(self) -> frozenset[Addr]:
        return self.tree.nodes

    def open_leaves(self) -> list[Addr]:
        return [
            t
            for t in sorted(self.nodes)
            if self.tree.is_leaf(t) and t not in self.steps and t not in self.tree.beta
        ]


def validate_reset_step(
    alg: ActivationAlgebra,
    system: DerivationSystem,
    iota: TraceInterpretation,
    conclusion: AnnotatedSequent,
    step: ResetStep,
    premises: list[AnnotatedSequent],
) -> None:
    """Check one derivation step of the reset system; raise IllegalTransition.

    Structural steps keep the base sequent and relate the boards by the
    matching board transition.  A lifted rule matches the underlying rule's
    sequents, and each premise board must be the move-successor of the
    conclusion board under the rule's trace map, compared after canonically
    renaming freshly minted chips (their identities are arbitrary as long as
    the control order agrees).
    """
    if step.kind in ("weak", "reset", "pop"):
        if len(premises) != 1:
            raise IllegalTransition(step.kind, "structural steps have exactly one premise")
        prem = premises[0]
        if prem.base != conclusion.base:
            raise IllegalTransition(step.kind, "structural steps keep the sequent")
        if step.kind == "weak":
            if not is_weakening(conclusion.board, prem.board):
                raise IllegalTransition("weak", "premise board is not a weakening")
        elif step.kind == "pop":
            if not is_population(conclusion.board, prem.board):
                raise IllegalTransition("pop", "premise board is not a population")
        else:
            if step.chip is None or step.chip not in conclusion.board.control:
                raise IllegalTransition("reset", f"unknown chip {step.chip}")
            if step.chip not in covered_chips(conclusion.board):
                raise IllegalTransition("reset", f"chip {step.chip} is not covered")
            if reset_board(conclusion.board, step.chip) != prem.board:
                raise IllegalTransition("reset", "premise board is not the reset result")
        return
    if step.kind != "rule":
        raise IllegalTransition(step.kind, "unknown step kind")
    rule = system.rules.get(step.rule or "")
    if rule is None:
        raise IllegalTransition("rule", f"unknown rule {step.rule!r}")
    if rule.conclusion != conclusion.base:
        raise IllegalTransition("rule", "conclusion sequent does not match the rule")
    if len(premises) != rule.arity:
        raise IllegalTransition("rule", f"expected {rule.arity} premises")
    maps = iota.maps_of[step.rule]
    for i, prem in enumerate(premises):
        if prem.base != rule.premises[i]:
            raise IllegalTransition("rule", f"premise {i + 1} sequent does not match")
        expected = tau_successor(alg, conclusion.board, maps[i])
        if not boards_equal_up_to_fresh(conclusion.board, expected, prem.board):
            raise IllegalTransition(
                "rule", f"premise {i + 1} board is not the move-successor"
            )


def validate_reset_preproof(
    alg: ActivationAlgebra,
    system: DerivationSystem,
    iota: TraceInterpretation,
    rp: ResetPreproof,
) -> list[str]:
    problems = list(rp.tree.validate())
    for t in rp.nodes:
        if t not in rp.lam:
            problems.append(f"{format_addr(t)}: unlabelled node")
    for t in rp.nodes:
        ann = rp.lam.get(t)
        if ann is not None and iota.object_of.get(ann.base) != ann.board.obj:
            problems.append(f"{format_addr(t)}: board object differs from the sequent's")
    for bud, comp in rp.tree.beta.items():
        if rp.lam.get(bud) != rp.lam.get(comp):
            problems.append(f"{format_addr(bud)}: bud annotation differs from companion")
    for t, step in rp.steps.items():
        kids = rp.tree.children(t)
        try:
            validate_reset_step(
                alg, system, iota, rp.lam[t], step, [rp.lam[k] for k in kids]
            )
        except IllegalTransition as err:
            problems.append(f"{format_addr(t)}: {err}")
    for t in rp.nodes:
        if not rp.tree.is_leaf(t) and t not in rp.steps:
            problems.append(f"{format_addr(t)}: inner node without a step")
    return problems


# --- the local soundness condition -------------------------------------------


@dataclass
class ResetVerdict:
    ok: bool
    failing_bud: Addr | None = None
    invariants: dict[Addr, tuple[int, ...]] = field(default_factory=dict)
    touched: frozenset[Addr] = frozenset()

    def __bool__(self) -> bool:
        return self.ok


def _segment(rp: ResetPreproof, bud: Addr) -> list[Addr]:
    comp = rp.tree.beta[bud]
    return [bud[:i] for i in range(len(comp), len(bud) + 1)]


def _common_prefix(controls: list[tuple[int, ...]]) -> tuple[int, ...]:
    first = controls[0]
    n = min(len(c) for c in controls)
    out = []
    for i in range(n):
        if all(c[i] == first[i] for c in controls):
            out.append(first[i])
        else:
            break
    return tuple(out)


def bud_invariant(rp: ResetPreproof, bud: Addr) -> tuple[tuple[int, ...], list[Addr]]:
    """Longest invariant of the bud's cycle plus the nodes that were read.

    The invariant is the longest prefix of the common control prefix along
    the companion-to-bud path whose last chip is reset on that path; empty
    when no such reset exists.
    """
    path = _segment(rp, bud)
    controls = [rp.lam[t].board.control for t in path]
    common = _common_prefix(controls)
    resets = {
        rp.steps[t].chip
        for t in path[:-1]
        if rp.steps.get(t, ResetStep("?")).kind == "reset"
    }
    best = 0
    for i, chip in enumerate(common, start=1):
        if chip in resets:
            best = i
    return common[:best], path


def check_reset_condition(rp: ResetPreproof) -> ResetVerdict:
    """Local soundness: every bud-to-companion segment must have an invariant.

    Reads only the nodes on those segments (recorded in ``touched``); the
    first bud without an invariant is reported.
    """
    touched: set[Addr] = set()
    invariants: dict[Addr, tuple[int, ...]] = {}
    for bud in rp.tree.buds():
        inv, path = bud_invariant(rp, bud)
        touched.update(path)
        if not inv:
            return ResetVerdict(
                ok=False, failing_bud=bud, invariants=invariants, touched=frozenset(touched)
            )
        invariants[bud] = inv
    return ResetVerdict(ok=True, invariants=invariants, touched=frozenset(touched))


def invariants_of_connected_cycle(
    rp: ResetPreproof, eta: frozenset[Addr]
) -> tuple[Addr, tuple[int, ...]]:
    """The bud of a connected cycle whose invariant prefixes all the others."""
    invs = {}
    for bud in eta:
        inv, _ = bud_invariant(rp, bud)
        if not inv:
            raise NotAProof(f"{format_addr(bud)} has no invariant")
        invs[bud] = inv
    for bud, inv in sorted(invs.items()):
        if all(other[: len(inv)] == inv for other in invs.values()):
            return bud, inv
    raise NotAProof("no prefix-minimal invariant in the connected cycle")


# --- stripping annotations -----------------------------------------------------


def strip(rp: ResetPreproof) -> Preproof:
    """Forget boards and splice out structural steps.

    Structural nodes have a single premise deriving the same base sequent;
    removing them leaves the underlying derivation.  Companions of buds are
    re-tied to the image of the first non-structural node down their chain
    (a cycle of structural steps alone cannot restore its board, so valid
    reset preproofs never strand a companion).
    """

    def resolve(t: Addr) -> Addr:
        seen = set()
        while t in rp.steps and rp.steps[t].kind != "rule":
            if t in seen:
                raise InvalidPreproof("cycle of structural steps")
            seen.add(t)
            t = t + (1,)
        return t

    nodes: set[Addr] = set()
    lam: dict[Addr, str] = {}
    delta: dict[Addr, str] = {}
    beta: dict[Addr, Addr] = {}
    image: dict[Addr, Addr] = {}

    def build(t: Addr, out: Addr) -> None:
        t = resolve(t)
        image[t] = out
        nodes.add(out)
        lam[out] = rp.lam[t].base
        if t in rp.tree.beta:
            target = image.get(resolve(rp.tree.beta[t]))
            if target is None or target == out:
                raise InvalidPreproof(
                    f"{format_addr(t)}: companion vanishes when structural steps are stripped"
                )
            beta[out] = target
            return
        step = rp.steps.get(t)
        if step is None:
            return
        delta[out] = step.rule
        for i, kid in enumerate(rp.tree.children(t), start=1):
            build(kid, out + (i,))

    build((), ())
    return Preproof(tree=CyclicTree(frozenset(nodes), beta), lam=lam, delta=delta)
