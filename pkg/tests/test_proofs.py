"""Analytic proof search, proof checking, and rendering."""

import pytest

from pnmatrix import (
    Closed,
    Expansion,
    Goal,
    ResourceCapError,
    SaturationFailure,
    Sequent,
    check_proof,
    parse_formula,
    prove,
    render,
)

from expected import PROOF_GOALS, REFERENCE_CALCULI, fml
from helpers import GOLDEN, load_spec


def goal_sequent(stem):
    return Sequent(frozenset(), frozenset({fml(PROOF_GOALS[stem])}))


def test_prove_returns_checkable_tree():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = goal_sequent("example1")
    tree = prove(rules, seps, s)
    assert not isinstance(tree, SaturationFailure)
    ok, problems = check_proof(tree, rules, seps, s)
    assert ok, problems


def test_prove_failure_returns_saturated_state():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = Sequent(frozenset(), frozenset({fml("p1")}))
    res = prove(rules, seps, s)
    assert isinstance(res, SaturationFailure)
    assert not res.state & s.delta


def test_prove_state_cap():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    with pytest.raises(ResourceCapError):
        prove(rules, seps, goal_sequent("example1"), max_states=1)


def test_modal_proof_has_closed_branch():
    rules = REFERENCE_CALCULI["example6"]
    seps = load_spec("example6").separators
    s = goal_sequent("example6")
    tree = prove(rules, seps, s)
    assert not isinstance(tree, SaturationFailure)
    ok, problems = check_proof(tree, rules, seps, s)
    assert ok, problems

    def has_closed(node):
        if isinstance(node, Closed):
            return True
        if isinstance(node, Expansion):
            return any(has_closed(sub) for _, sub in node.children)
        return False

    assert has_closed(tree)


def test_check_proof_rejects_unknown_rule():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = goal_sequent("example1")
    tree = prove(rules, seps, s)
    assert isinstance(tree, Expansion)
    tampered = Expansion("nonsense", tree.subst, tree.children)
    ok, problems = check_proof(tampered, rules, seps, s)
    assert not ok
    assert any("unknown rule" in p for p in problems)


def test_check_proof_rejects_unavailable_goal():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = goal_sequent("example1")
    bogus = Goal(fml("p2"))
    ok, problems = check_proof(bogus, rules, seps, s)
    assert not ok


def test_check_proof_flags_non_analytic_instances():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = Sequent(frozenset({fml("p2")}), frozenset({fml("imp(p1,p2)")}))
    tree = prove(rules, seps, s)
    assert not isinstance(tree, SaturationFailure)
    # reinstantiate r3 at a formula far outside the analytic bound
    huge = fml("imp(imp(p1,p1),imp(p1,p1))")
    bad = Expansion(
        "r3",
        ((1, huge), (2, fml("p2"))),
        ((fml("imp(p1,p2)"), Goal(fml("imp(p1,p2)"))),),
    )
    ok, problems = check_proof(bad, rules, seps, s)
    assert not ok
    assert any("analytic" in p for p in problems)


def test_check_proof_requires_children_matching_conclusions():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = goal_sequent("example1")
    tree = prove(rules, seps, s)
    assert isinstance(tree, Expansion)
    pruned = Expansion(tree.rule, tree.subst, tree.children[:0])
    ok, problems = check_proof(pruned, rules, seps, s)
    assert not ok


@pytest.mark.parametrize("stem", sorted(PROOF_GOALS))
def test_text_render_matches_golden(stem):
    rules = REFERENCE_CALCULI[stem]
    seps = load_spec(stem).separators
    s = goal_sequent(stem)
    tree = prove(rules, seps, s)
    golden = (GOLDEN / f"{stem}.proof.txt").read_text()
    assert render(tree, s, fmt="text") == golden


def test_dot_render_shape():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = goal_sequent("example1")
    tree = prove(rules, seps, s)
    dot = render(tree, s, fmt="dot")
    assert dot.startswith("digraph proof {")
    assert dot.rstrip().endswith("}")
    with pytest.raises(ValueError):
        render(tree, s, fmt="svg")


def test_prove_with_overlapping_sides_is_immediate():
    rules = REFERENCE_CALCULI["example1"]
    seps = load_spec("example1").separators
    s = Sequent(frozenset({fml("p1")}), frozenset({fml("p1")}))
    tree = prove(rules, seps, s)
    assert isinstance(tree, Goal)
    ok, problems = check_proof(tree, rules, seps, s)
    assert ok, problems
