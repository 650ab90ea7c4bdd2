import itertools

import pytest

from corpus import all_entries, build_proof, generic_setup
from cycproof.algebra import BOOLEANS
from cycproof.proofs import (
    CountMismatch,
    CyclicTree,
    DerivationSystem,
    EndsequentMismatch,
    NotABud,
    Preproof,
    PreproofMorphism,
    Rule,
    apply_morphism,
    compose,
    connected_cycles,
    graph_edges,
    infinite_branch_lassos,
    is_connected_cycle,
    is_unfolding,
    is_unrolling,
    single_node,
    unfold_at,
    validate_preproof,
)

SYS = DerivationSystem(
    sequents={"G": "G", "D": "D"},
    rules={
        "one": Rule("one", "G", ("G",)),
        "two": Rule("two", "G", ("G", "D")),
        "axD": Rule("axD", "D", ()),
    },
)


def test_identity_preproof_is_valid():
    assert validate_preproof(SYS, single_node("G")) == []


def test_bud_label_mismatch_reported():
    proof = build_proof({(): "G", (1,): "D"}, {(): "one"}, {(1,): ()})
    problems = validate_preproof(SYS, proof)
    assert any("bud label differs" in p for p in problems)
    assert any("premise 1" in p for p in problems)


def test_wrong_premise_count_reported():
    proof = build_proof({(): "G", (1,): "G"}, {(): "two"}, {})
    problems = validate_preproof(SYS, proof)
    assert any("expects 2 premises" in p for p in problems)


def test_prefix_closure_reported():
    tree = CyclicTree(frozenset({(), (1, 1)}), {})
    proof = Preproof(tree=tree, lam={(): "G", (1, 1): "G"}, delta={})
    assert any("prefix" in p for p in validate_preproof(SYS, proof))


# --- connected cycles ------------------------------------------------------------


def _brute_force_cycles(tree: CyclicTree):
    buds = tree.buds()
    found = []
    for r in range(1, len(buds) + 1):
        for subset in itertools.combinations(buds, r):
            eta = frozenset(subset)
            if any(is_connected_cycle(tree, eta, base) for base in subset):
                found.append(eta)
    return [eta for eta in found if not any(eta < other for other in found)]


def test_singleton_cycle():
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    cycles = connected_cycles(proof.tree)
    assert len(cycles) == 1
    assert cycles[0].buds == frozenset({(1,)})
    assert cycles[0].subtree == frozenset({(), (1,)})


def test_nested_buds_form_one_cycle():
    # bud (1,1,1) -> (1,) nested inside bud (1,2) -> ()
    tree = CyclicTree(
        frozenset({(), (1,), (1, 1), (1, 1, 1), (1, 2)}),
        {(1, 1, 1): (1,), (1, 2): ()},
    )
    cycles = connected_cycles(tree)
    assert [c.buds for c in cycles] == [frozenset({(1, 1, 1), (1, 2)})]


def test_disjoint_sibling_cycles():
    tree = CyclicTree(
        frozenset({(), (1,), (1, 1), (2,), (2, 1)}),
        {(1, 1): (1,), (2, 1): (2,)},
    )
    cycles = connected_cycles(tree)
    assert sorted((c.buds for c in cycles), key=sorted) == [
        frozenset({(1, 1)}),
        frozenset({(2, 1)}),
    ]


def test_connected_cycles_match_brute_force_on_corpus():
    for entry in all_entries():
        tree = entry.proof.tree
        if len(tree.beta) > 6:
            continue
        got = sorted((c.buds for c in connected_cycles(tree)), key=sorted)
        want = sorted(_brute_force_cycles(tree), key=sorted)
        assert got == want, entry.name


def test_inf_of_full_loop_equals_cycle_subtree():
    for entry in all_entries():
        for cyc in connected_cycles(entry.proof.tree):
            for prefix, loop in infinite_branch_lassos(entry.proof):
                if cyc.buds <= set(loop):
                    assert set(loop) == set(cyc.subtree), entry.name


# --- grafting --------------------------------------------------------------------


def test_compose_at_root_is_identity():
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    assert compose(single_node("G"), [proof]) == proof


def test_compose_with_identity_fillers():
    proof = build_proof({(): "G", (1,): "G", (2,): "D"}, {(): "two"}, {})
    fillers = [single_node("G"), single_node("D")]
    assert compose(proof, fillers) == proof


def test_compose_node_count_and_addresses():
    proof = build_proof({(): "G", (1,): "G", (2,): "D"}, {(): "two"}, {})
    q1 = build_proof({(): "G", (1,): "G"}, {(): "one"}, {})
    q2 = build_proof({(): "D"}, {(): "axD"}, {})
    grafted = compose(proof, [q1, q2])
    assert len(grafted.nodes) == len(proof.nodes) + len(q1.nodes) + len(q2.nodes) - 2
    expected = set(proof.nodes) | {(1,) + t for t in q1.nodes} | {(2,) + t for t in q2.nodes}
    assert set(grafted.nodes) == expected
    assert validate_preproof(SYS, grafted) == []


def test_compose_mismatches():
    proof = build_proof({(): "G", (1,): "G", (2,): "D"}, {(): "two"}, {})
    with pytest.raises(CountMismatch):
        compose(proof, [single_node("G")])
    with pytest.raises(EndsequentMismatch):
        compose(proof, [single_node("D"), single_node("G")])


# --- morphism application -----------------------------------------------------------


def _identity_morphism():
    images = {}
    for rid, rule in SYS.rules.items():
        lam = {(): rule.conclusion}
        lam.update({(i + 1,): p for i, p in enumerate(rule.premises)})
        images[rid] = Preproof(
            tree=CyclicTree(frozenset(lam), {}), lam=lam, delta={(): rid}
        )
    return PreproofMorphism(sequent_map={}, rule_image=images)


def test_identity_morphism_preserves_structure():
    proof = build_proof(
        {(): "G", (1,): "G", (1, 1): "G", (1, 2): "D"},
        {(): "one", (1,): "two", (1, 2): "axD"},
        {(1, 1): ()},
    )
    assert validate_preproof(SYS, proof) == []
    image = apply_morphism(_identity_morphism(), proof)
    assert image == proof


def test_two_step_morphism_grows_and_validates():
    # send "one" to a two-step derivation of itself
    images = _identity_morphism().rule_image.copy()
    images["one"] = build_proof(
        {(): "G", (1,): "G", (1, 1): "G"}, {(): "one", (1,): "one"}, {}
    )
    f = PreproofMorphism(sequent_map={}, rule_image=images)
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    image = apply_morphism(f, proof)
    assert validate_preproof(SYS, image) == []
    assert len(image.nodes) == 3
    assert image.tree.beta == {(1, 1): ()}


# --- unfolding --------------------------------------------------------------------


def test_unfold_single_cycle_node_count():
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    bigger = unfold_at(proof, (1,), "new_bud")
    # copies every node below the companion (the whole two-node tree)
    assert len(bigger.nodes) == 3
    assert bigger.tree.beta == {(1, 1): (1,)}
    other = unfold_at(proof, (1,), "old_companion")
    assert other.tree.beta == {(1, 1): ()}


def test_unfold_preserves_validity_and_not_a_bud():
    for entry in all_entries():
        for bud in entry.proof.tree.buds():
            bigger = unfold_at(entry.proof, bud, "new_bud")
            assert validate_preproof(entry.system, bigger) == [], entry.name
    with pytest.raises(NotABud):
        unfold_at(build_proof({(): "G"}, {}, {}), (), "new_bud")


def test_unfoldings_recognised():
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    once = unfold_at(proof, (1,), "new_bud")
    twice = unfold_at(once, (1, 1), "old_companion")
    assert is_unfolding(proof, once)
    assert is_unfolding(proof, twice)
    assert is_unrolling(proof, twice)
    assert not is_unfolding(once, proof)


# --- branches ---------------------------------------------------------------------


def test_lassos_single_cycle():
    proof = build_proof({(): "G", (1,): "G"}, {(): "one"}, {(1,): ()})
    lassos = list(infinite_branch_lassos(proof))
    assert lassos == [([], [(), (1,)])]


def test_lassos_dag_only():
    proof = build_proof({(): "D"}, {(): "axD"}, {})
    assert list(infinite_branch_lassos(proof)) == []


def test_lassos_figure_eight():
    sys_, iota = generic_setup(
        BOOLEANS,
        {"X": ("x",)},
        {"s": "X"},
        {
            "br": ("s", ("s", "s"), [[(0, 0, 0)], [(0, 0, 0)]]),
            "a": ("s", ("s",), [[(0, 1, 0)]]),
            "b": ("s", ("s",), [[(0, 1, 0)]]),
        },
    )
    proof = build_proof(
        {(): "s", (1,): "s", (1, 1): "s", (2,): "s", (2, 1): "s"},
        {(): "br", (1,): "a", (2,): "b"},
        {(1, 1): (), (2, 1): ()},
    )
    lassos = list(infinite_branch_lassos(proof))
    assert len(lassos) >= 2
    for prefix, loop in lassos:
        edges = graph_edges(proof)
        cyc = loop + [loop[0]]
        for i in range(len(loop)):
            assert any(dst == cyc[i + 1] for dst, _ in edges[cyc[i]])
