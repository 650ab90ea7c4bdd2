import pytest

from corpus import all_entries, proof_entries
from cycproof.algebra import BOOLEANS
from cycproof.boards import board, empty_board, populate, reset as reset_board, tau_successor
from cycproof.gtc import check_gtc
from cycproof.proofs import CyclicTree, connected_cycles
from cycproof.reset import (
    AnnotatedSequent,
    IllegalTransition,
    NotAProof,
    ResetPreproof,
    ResetStep,
    bud_invariant,
    check_reset_condition,
    invariants_of_connected_cycle,
    strip,
    validate_reset_preproof,
    validate_reset_step,
)
from cycproof.search import annotate, expand
from cycproof.trace import TraceObject, morphism


def _loop_entry():
    return [e for e in all_entries() if e.name == "g_loop_alpha_B"][0]


def _annotated(entry, iota=None):
    iota = iota or entry.iota
    sp = annotate(entry.system, entry.proof, iota)
    return expand(entry.system, iota, sp), iota


# --- individual steps -------------------------------------------------------------


def test_pop_step_ok():
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    brd = empty_board(obj)
    step = ResetStep("pop")
    validate_reset_step(
        BOOLEANS,
        entry.system,
        entry.iota,
        AnnotatedSequent("s", brd),
        step,
        [AnnotatedSequent("s", populate(brd, [0]))],
    )


def test_reset_step_requires_covered():
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    brd = board(obj, (0,), {(0, 0): [[0]]})  # chip 0 tops its stack
    with pytest.raises(IllegalTransition):
        validate_reset_step(
            BOOLEANS,
            entry.system,
            entry.iota,
            AnnotatedSequent("s", brd),
            ResetStep("reset", chip=0),
            [AnnotatedSequent("s", brd)],
        )


def test_lifted_step_checks_successor_up_to_fresh_chips():
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    brd = board(obj, (0,), {(0, 0): [[0]]})
    good = tau_successor(BOOLEANS, brd, entry.iota.maps_of["r"][0], fresh=[7])
    validate_reset_step(
        BOOLEANS,
        entry.system,
        entry.iota,
        AnnotatedSequent("s", brd),
        ResetStep("rule", rule="r"),
        [AnnotatedSequent("s", good)],
    )
    with pytest.raises(IllegalTransition):
        validate_reset_step(
            BOOLEANS,
            entry.system,
            entry.iota,
            AnnotatedSequent("s", brd),
            ResetStep("rule", rule="r"),
            [AnnotatedSequent("s", brd)],  # not a successor
        )


def test_reset_chip_keeps_identity_in_comparison():
    # fresh chips are compared canonically, old chips exactly
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    brd = board(obj, (0,), {(0, 0): [[0]]})
    shifted = board(obj, (3,), {(0, 0): [[3]]})  # "same" board with renamed old chip
    succ = tau_successor(BOOLEANS, shifted, entry.iota.maps_of["r"][0], fresh=[4])
    with pytest.raises(IllegalTransition):
        validate_reset_step(
            BOOLEANS,
            entry.system,
            entry.iota,
            AnnotatedSequent("s", brd),
            ResetStep("rule", rule="r"),
            [AnnotatedSequent("s", succ)],
        )


# --- proof-level condition ---------------------------------------------------------


def test_corpus_reset_proofs_pass():
    for entry in proof_entries():
        rp, iota = _annotated(entry)
        assert validate_reset_preproof(iota.algebra, entry.system, iota, rp) == []
        verdict = check_reset_condition(rp)
        assert verdict.ok, entry.name
        if rp.tree.beta:
            assert verdict.invariants


def test_cycle_without_reset_fails():
    # hand-built: lifted rule then weaken back to the same annotation
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    b0 = board(obj, (0,), {(0, 0): [[0]]})
    b1 = tau_successor(BOOLEANS, b0, entry.iota.maps_of["r"][0], fresh=[1])
    from cycproof.boards import weaken

    b2 = weaken(b1, {(0, 0): []})
    b3 = populate(b2, [0])
    # b3 has an empty stack where b0 has chip 0, so close the cycle on b3
    lam = {
        (): AnnotatedSequent("s", b3),
        (1,): AnnotatedSequent("s", b1),
        (1, 1): AnnotatedSequent("s", b2),
        (1, 1, 1): AnnotatedSequent("s", b3),
    }
    # b3 -> rule -> tau_successor(b3) ... rebuild boards from b3 instead
    t0 = tau_successor(BOOLEANS, b3, entry.iota.maps_of["r"][0], fresh=[5])
    t1 = weaken(t0, {(0, 0): []})
    t2 = populate(t1, [0])
    assert t2 == b3
    lam = {
        (): AnnotatedSequent("s", b3),
        (1,): AnnotatedSequent("s", t0),
        (1, 1): AnnotatedSequent("s", t1),
        (1, 1, 1): AnnotatedSequent("s", b3),
    }
    steps = {
        (): ResetStep("rule", rule="r"),
        (1,): ResetStep("weak"),
        (1, 1): ResetStep("pop"),
    }
    rp = ResetPreproof(
        tree=CyclicTree(frozenset(lam), {(1, 1, 1): ()}), lam=lam, steps=steps
    )
    assert validate_reset_preproof(BOOLEANS, entry.system, entry.iota, rp) == []
    verdict = check_reset_condition(rp)
    assert not verdict.ok
    assert verdict.failing_bud == (1, 1, 1)


def test_reset_outside_common_prefix_fails():
    # the reset chip must survive in the shared control prefix of the cycle;
    # a cycle that drops it mid-way (weakening) and re-mints it fails
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    b0 = board(obj, (0, 1), {(0, 0): [[0, 1]]})
    r0 = reset_board(b0, 0)  # [0], stack {0}
    t0 = tau_successor(BOOLEANS, r0, entry.iota.maps_of["r"][0], fresh=[1])  # {0,1}
    from cycproof.boards import weaken

    w0 = weaken(t0, {(0, 0): []})  # empty board
    p0 = populate(w0, [0])
    t1 = tau_successor(BOOLEANS, p0, entry.iota.maps_of["r"][0], fresh=[0])  # {0}
    t2 = tau_successor(BOOLEANS, t1, entry.iota.maps_of["r"][0], fresh=[1])  # {0,1}
    assert t2 == b0
    lam = {
        (): AnnotatedSequent("s", b0),
        (1,): AnnotatedSequent("s", r0),
        (1, 1): AnnotatedSequent("s", t0),
        (1, 1, 1): AnnotatedSequent("s", w0),
        (1, 1, 1, 1): AnnotatedSequent("s", p0),
        (1, 1, 1, 1, 1): AnnotatedSequent("s", t1),
        (1, 1, 1, 1, 1, 1): AnnotatedSequent("s", b0),
    }
    steps = {
        (): ResetStep("reset", chip=0),
        (1,): ResetStep("rule", rule="r"),
        (1, 1): ResetStep("weak"),
        (1, 1, 1): ResetStep("pop"),
        (1, 1, 1, 1): ResetStep("rule", rule="r"),
        (1, 1, 1, 1, 1): ResetStep("rule", rule="r"),
    }
    rp = ResetPreproof(
        tree=CyclicTree(frozenset(lam), {(1, 1, 1, 1, 1, 1): ()}), lam=lam, steps=steps
    )
    assert validate_reset_preproof(BOOLEANS, entry.system, entry.iota, rp) == []
    verdict = check_reset_condition(rp)
    # chip 0 is reset on the cycle but leaves the control mid-way: the common
    # prefix of the controls is empty, so the cycle has no invariant
    assert not verdict.ok


def test_locality_instrumentation():
    entry = [e for e in all_entries() if e.name == "c_cond_loop"][0]
    rp, iota = _annotated(entry)
    verdict = check_reset_condition(rp)
    assert verdict.ok
    segments = set()
    for bud, comp in rp.tree.beta.items():
        segments.update(bud[:i] for i in range(len(comp), len(bud) + 1))
    assert verdict.touched == frozenset(segments)


def test_off_cycle_graft_does_not_change_verdict():
    entry = [e for e in all_entries() if e.name == "c_cond_loop"][0]
    rp, iota = _annotated(entry)
    before = check_reset_condition(rp)
    # graft a vacuous population above an off-segment leaf (an axiom branch)
    off = [
        t
        for t in sorted(rp.nodes)
        if rp.tree.is_leaf(t) and t not in rp.tree.beta and t not in before.touched
    ]
    assert off, "corpus proof should have an off-segment leaf"
    leaf = off[0]
    lam = dict(rp.lam)
    steps = dict(rp.steps)
    nodes = set(rp.nodes)
    child = leaf + (1,)
    nodes.add(child)
    lam[child] = lam[leaf]
    steps[leaf] = ResetStep("pop")
    # the leaf's rule moves to the grafted child
    steps[child] = ResetStep("rule", rule=_leaf_rule(entry, rp, leaf))
    mutated = ResetPreproof(tree=CyclicTree(frozenset(nodes), dict(rp.tree.beta)), lam=lam, steps=steps)
    assert validate_reset_preproof(iota.algebra, entry.system, iota, mutated) == []
    after = check_reset_condition(mutated)
    assert after.ok == before.ok
    assert after.invariants == before.invariants
    assert after.touched == before.touched


def _leaf_rule(entry, rp, leaf):
    # the axiom rule whose conclusion is the leaf's base sequent
    for rid, rule in entry.system.rules.items():
        if rule.conclusion == rp.lam[leaf].base and rule.arity == 0:
            return rid
    raise AssertionError("no axiom for the leaf")


def test_strip_example():
    entry = _loop_entry()
    rp, iota = _annotated(entry)
    plain = strip(rp)
    assert check_gtc(entry.system, plain, iota).ok
    # structural steps vanish: only lifted rules remain as nodes with rules
    lifted = [t for t, s in rp.steps.items() if s.kind == "rule"]
    assert len(plain.delta) == len(lifted)


def test_invariants_of_connected_cycle():
    for entry in proof_entries():
        rp, iota = _annotated(entry)
        for cyc in connected_cycles(rp.tree):
            bud, inv = invariants_of_connected_cycle(rp, cyc.buds)
            assert bud in cyc.buds
            assert inv
            for other in cyc.buds:
                other_inv, _ = bud_invariant(rp, other)
                assert other_inv[: len(inv)] == inv, entry.name


def test_invariants_raise_on_non_proof():
    entry = _loop_entry()
    obj = entry.iota.object_of["s"]
    b0 = empty_board(obj)
    p0 = populate(b0, [0])
    lam = {
        (): AnnotatedSequent("s", b0),
        (1,): AnnotatedSequent("s", p0),
    }
    # cycle with only a population: no invariant anywhere
    t0 = tau_successor(BOOLEANS, p0, entry.iota.maps_of["r"][0], fresh=[0])
    # build instead: pop then rule then weaken back to empty
    from cycproof.boards import weaken

    w0 = weaken(t0, {(0, 0): []})
    assert w0 == b0
    lam = {
        (): AnnotatedSequent("s", b0),
        (1,): AnnotatedSequent("s", p0),
        (1, 1): AnnotatedSequent("s", t0),
        (1, 1, 1): AnnotatedSequent("s", b0),
    }
    steps = {
        (): ResetStep("pop"),
        (1,): ResetStep("rule", rule="r"),
        (1, 1): ResetStep("weak"),
    }
    rp = ResetPreproof(tree=CyclicTree(frozenset(lam), {(1, 1, 1): ()}), lam=lam, steps=steps)
    assert not check_reset_condition(rp).ok
    with pytest.raises(NotAProof):
        invariants_of_connected_cycle(rp, frozenset({(1, 1, 1)}))
