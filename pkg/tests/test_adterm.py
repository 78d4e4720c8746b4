import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
import oracles
from secadt.adterm import (
    OPPONENT,
    Atom,
    BADStep,
    Op,
    badsteps,
    check_generated_form,
    conj,
    counter,
    disj,
    evaluate,
    extract_scenarios,
    generated_form_violation,
    seq,
    substitute,
    to_adterm,
)
from secadt.adtree import ADTree, SEQUENTIAL, attack, defense
from secadt.errors import (
    LabelNotFoundError,
    MalformedTermError,
    MissingAssignmentError,
    ScenarioLimitError,
)

b1, b2, b3 = (gen.badstep(n) for n in ("b1", "b2", "b3"))


def test_initial_tree_is_a_flat_disjunction(initial_tree):
    term = to_adterm(initial_tree)
    nested = disj(disj(Atom("CAPEC-66"), Atom("CAPEC-250")), Atom("CAPEC-244"))
    assert term == disj(Atom("CAPEC-66"), Atom("CAPEC-250"), Atom("CAPEC-244"))
    assert term == nested


def test_single_attack_node_is_an_atom():
    assert to_adterm(ADTree(attack("A"))) == Atom("A")


def test_step_with_pattern_conjunction_is_a_badstep():
    tree = ADTree(attack("st", attack("t1"), attack("t2"),
                         counter=defense("c", defense("sp1"), defense("sp2"), refinement="conjunctive")))
    b = to_adterm(tree)
    assert b == BADStep("st", ("sp1", "sp2"))
    assert b.techniques == ("t1", "t2")
    assert b.defense == {"sp1", "sp2"}
    assert str(b) == "c^p(st, ∧^o(sp1, sp2))"


def test_disjunctive_defense_is_not_a_badstep():
    tree = ADTree(attack("st", counter=defense("alt", defense("sp1"), defense("sp2"))))
    term = to_adterm(tree)
    assert isinstance(term, Op) and term.op == "c"
    assert not check_generated_form(term)
    assert generated_form_violation(term) == term


def test_counter_collapses_to_badstep():
    assert counter(Atom("st"), conj(Atom("a", OPPONENT), Atom("b", OPPONENT), player=OPPONENT)) \
        == BADStep("st", ("a", "b"))


def test_badsteps():
    assert badsteps(b1) == {b1}
    assert badsteps(disj(seq(b1, b2), b1)) == {b1, b2}
    assert badsteps(disj(Atom("CAPEC-1"), Atom("CAPEC-2"))) == frozenset()


def test_flattening():
    assert disj(disj(b1, b2), b3) == disj(b1, disj(b2, b3)) == disj(b1, b2, b3)
    assert seq(b1, disj(b2, b3)) != seq(b1, b2, b3)


def test_scenarios_of_single_badstep():
    (s,) = extract_scenarios(b1)
    assert s.steps == (b1,)


def test_sequence_distributes_in_order(frozen):
    scenarios = extract_scenarios(seq(b1, disj(b2, b3)))
    assert [[b.step for b in s.steps] for s in scenarios] == frozen["dnf_seq_or"]
    assert [s.term for s in scenarios] == [seq(b1, b2), seq(b1, b3)]
    assert sorted(sorted(b.step for b in s.steps) for s in scenarios) == frozen["dnf_seq_or_minimal"]


def test_duplicate_clauses_merged():
    scenarios = extract_scenarios(disj(seq(b1, b2), seq(b1, b2), b1))
    assert [s.steps for s in scenarios] == [(b1, b2), (b1,)]


def test_order_distinguishes_clauses():
    assert len(extract_scenarios(disj(seq(b1, b2), seq(b2, b1)))) == 2


def test_unexpanded_leaf_is_malformed():
    with pytest.raises(MalformedTermError, match="CAPEC-66"):
        extract_scenarios(disj(b1, Atom("CAPEC-66")))


def test_scenario_ceiling():
    wide = seq(*(disj(gen.badstep(f"x{i}"), gen.badstep(f"y{i}")) for i in range(8)))
    assert len(extract_scenarios(wide)) == 256
    with pytest.raises(ScenarioLimitError):
        extract_scenarios(wide, max_scenarios=100)


def test_eval_examples(frozen):
    assert evaluate(seq(b1, b2), {b1: True, b2: False}) is False
    assert evaluate(disj(b1, b2), {b1: False, b2: True}) is True
    assert evaluate(disj(seq(b1, b2), b3), {b1: True, b2: True, b3: False}) is frozen["eval_or_seq"]


def test_eval_missing_assignment_names_atom():
    with pytest.raises(MissingAssignmentError, match="b2"):
        evaluate(conj(b1, b2), {b1: True})


def test_generated_form_examples():
    assert check_generated_form(BADStep("st", ("sp1", "sp2")))
    assert check_generated_form(disj(b1, seq(b2, b3)))
    assert not check_generated_form(seq(b1, disj(b2, b3)))
    assert not check_generated_form(conj(b1, b2))
    assert not check_generated_form(Atom("CAPEC-66"))


def test_substitute():
    b66, b250 = gen.badstep("b66"), gen.badstep("b250")
    term = disj(disj(b66, b250), Atom("CAPEC-244"))
    replacement = seq(gen.badstep("s1"), gen.badstep("s2"))
    assert substitute(term, "CAPEC-244", replacement) == disj(b66, b250, replacement)
    assert substitute(term, "CAPEC-244", Atom("CAPEC-244")) == term
    with pytest.raises(LabelNotFoundError):
        substitute(term, "CAPEC-0", b1)


def test_substitute_reforms_badstep():
    term = counter(Atom("st"), Atom("P", OPPONENT))
    assert term == BADStep("st", ("P",))
    wrapped = Op("c", "p", (Atom("X"), Atom("P", OPPONENT)))
    assert substitute(wrapped, "X", Atom("st")) == BADStep("st", ("P",))


def test_tree_with_sequential_steps():
    tree = ADTree(attack("A", attack("s1", counter=defense("P1")), attack("s2", counter=defense("P2")),
                         refinement=SEQUENTIAL))
    assert to_adterm(tree) == seq(BADStep("s1", ("P1",)), BADStep("s2", ("P2",)))


# property tests

atom_counts = st.integers(min_value=1, max_value=7)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=atom_counts)
def test_eval_invariant_under_reordering(seed, n):
    rng = random.Random(seed)
    t = gen.oracle_term(rng, n)

    def shuffled(u):
        if u[0] == "atom":
            return u
        args = [shuffled(a) for a in u[1]]
        if u[0] in ("or", "and"):
            rng.shuffle(args)
        return (u[0], args)

    term, other = gen.to_term(t), gen.to_term(shuffled(t))
    atoms = sorted(badsteps(term), key=lambda b: b.step)
    for true_set, value in oracles.truth_table(t):
        assignment = {b: b.step in true_set for b in atoms}
        assert evaluate(term, assignment) == evaluate(other, assignment) == value


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=atom_counts)
def test_scenario_union_is_badstep_set(seed, n):
    term = gen.to_term(gen.oracle_term(random.Random(seed), n))
    scenarios = extract_scenarios(term)
    assert frozenset().union(*(s.badsteps for s in scenarios)) == badsteps(term)
    assert all(not any(isinstance(x, Op) and x.op == "or" for x in _subterms(s.term)) for s in scenarios)


def _subterms(t):
    yield t
    if isinstance(t, Op):
        for a in t.args:
            yield from _subterms(a)
