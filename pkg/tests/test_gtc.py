import pytest

from corpus import all_entries, build_proof, generic_setup
from cycproof.algebra import BOOLEANS
from cycproof.automata import rabin_accepts_lasso
from cycproof.gtc import (
    InterpretationMismatch,
    OpenLeaves,
    TraceInterpretation,
    check_gtc,
    check_gtc_oracle,
    induced_lasso,
    product_automaton,
    validate_interpretation,
)
from cycproof.proofs import unfold_at
from cycproof.trace import TraceObject, identity, morphism


def test_corpus_verdicts():
    for entry in all_entries():
        verdict = check_gtc(entry.system, entry.proof, entry.iota)
        assert verdict.ok == entry.is_proof, entry.name
        if not verdict.ok:
            assert verdict.counterexample is not None


def test_checker_agrees_with_oracle_on_corpus():
    for entry in all_entries():
        got = check_gtc(entry.system, entry.proof, entry.iota).ok
        want = check_gtc_oracle(entry.system, entry.proof, entry.iota).ok
        assert got == want, entry.name
        if entry.alt_iota is not None:
            got = check_gtc(entry.system, entry.proof, entry.alt_iota).ok
            want = check_gtc_oracle(entry.system, entry.proof, entry.alt_iota).ok
            assert got == want, entry.name


def test_counterexample_replays_as_rejected():
    for entry in all_entries():
        if entry.is_proof:
            continue
        verdict = check_gtc(entry.system, entry.proof, entry.iota)
        prefix_nodes, loop_nodes = verdict.counterexample
        word_prefix, word_loop = induced_lasso(
            entry.proof, entry.iota, (prefix_nodes, loop_nodes)
        )
        aut = product_automaton(entry.proof, entry.iota)
        assert not rabin_accepts_lasso(aut, word_prefix, word_loop), entry.name


def test_verdict_invariant_under_unfolding():
    for entry in all_entries():
        for bud in sorted(entry.proof.tree.buds())[:2]:
            for retarget in ("new_bud", "old_companion"):
                bigger = unfold_at(entry.proof, bud, retarget)
                same = check_gtc(entry.system, bigger, entry.iota).ok
                assert same == entry.is_proof, (entry.name, bud, retarget)


def test_open_leaves_rejected():
    system, iota = generic_setup(
        BOOLEANS, {"X": ("x",)}, {"s": "X"}, {"r": ("s", ("s",), [[(0, 1, 0)]])}
    )
    open_proof = build_proof({(): "s", (1,): "s"}, {(): "r"}, {})
    with pytest.raises(OpenLeaves):
        check_gtc(system, open_proof, iota)


def test_interpretation_validation():
    system, iota = generic_setup(
        BOOLEANS, {"X": ("x",)}, {"s": "X"}, {"r": ("s", ("s",), [[(0, 1, 0)]])}
    )
    wrong_obj = TraceObject("Y", ("y", "z"))
    broken = TraceInterpretation(
        algebra=BOOLEANS, object_of={"s": wrong_obj}, maps_of=iota.maps_of
    )
    assert validate_interpretation(system, broken)
    proof = build_proof({(): "s", (1,): "s"}, {(): "r"}, {(1,): ()})
    with pytest.raises(InterpretationMismatch):
        check_gtc(system, proof, broken)


def test_induced_lasso_words():
    entry = [e for e in all_entries() if e.name == "g_loop_alpha_B"][0]
    prefix, loop = induced_lasso(entry.proof, entry.iota, ([], [(), (1,)]))
    assert prefix == []
    assert len(loop) == 2
    # child step uses the rule map, the bud step contributes the identity
    assert loop[0] == entry.iota.maps_of["r"][0]
    assert loop[1] == identity(entry.iota.object_of["s"])


def test_bad_cycle_search_prefers_usable_pair():
    # within one strongly connected component, a progressing self-loop must
    # not mask an idle one
    system, iota = generic_setup(
        BOOLEANS,
        {"X": ("x",)},
        {"s": "X"},
        {
            "br": ("s", ("s", "s"), [[(0, 0, 0)], [(0, 0, 0)]]),
            "good": ("s", ("s",), [[(0, 1, 0)]]),
            "idle": ("s", ("s",), [[(0, 0, 0)]]),
        },
    )
    proof = build_proof(
        {(): "s", (1,): "s", (1, 1): "s", (2,): "s", (2, 1): "s"},
        {(): "br", (1,): "good", (2,): "idle"},
        {(1, 1): (), (2, 1): ()},
    )
    verdict = check_gtc(system, proof, iota)
    assert not verdict.ok
    assert (2,) in verdict.counterexample[1]
