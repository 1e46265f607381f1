import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treedet import fixtures
from treedet.construct import eliminate_all
from treedet.core import BottomUpAutomaton, NotDeterministicError, RankedAlphabet, Tree
from treedet.minimize import (
    CertificationError,
    MinimalDBA,
    StateCapExceeded,
    certify,
    determinize,
    equivalent,
    isomorphic,
    minimal_trees,
    minimize,
    rename_states,
    trim,
)
from treedet.oracle import bounded_equivalence, nerode_classes_bounded

from conftest import random_dba


def with_extra(A, transitions=(), states=()):
    return BottomUpAutomaton(
        A.alphabet, A.states | set(states), A.finals, A.transitions | set(transitions)
    )


def test_trim_keeps_f2():
    assert trim(fixtures.f2()) == fixtures.f2()


def test_trim_drops_unused_state():
    A = with_extra(fixtures.f2(), states={"z"})
    assert trim(A) == fixtures.f2()


def test_trim_unreachable_final():
    A = BottomUpAutomaton.build({"a": 0, "f": 1}, [("a", (), "q")], finals={"r"}, states={"q", "r"})
    T = trim(A)
    assert T.states == set() and T.transitions == set()


def test_determinize_deterministic_input_is_isomorphic():
    assert isomorphic(determinize(fixtures.f3()), fixtures.f3())


def test_determinize_two_state_nba():
    A = BottomUpAutomaton.build({"a": 0}, [("a", (), "q1"), ("a", (), "q2")], finals={"q1"})
    D = determinize(A)
    assert D.is_deterministic
    assert D.states == {"q1|q2"} and D.finals == {"q1|q2"}


def test_determinize_elimination_output_recovers_f2():
    free, _ = eliminate_all(fixtures.f2())
    assert not free.is_deterministic
    D = determinize(free)
    assert D.is_deterministic
    assert bounded_equivalence(D, fixtures.f2(), 10)


def test_determinize_cap():
    A = BottomUpAutomaton.build(
        {"a": 0, "g": 1},
        [("a", (), "x"), ("g", ("x",), "x"), ("g", ("x",), "y")],
        finals={"x"},
    )
    with pytest.raises(StateCapExceeded):
        determinize(A, cap=1)


def test_minimize_merges_duplicate_state():
    A = BottomUpAutomaton.build(
        fixtures.ABF,
        [("a", (), "qa'"), ("b", (), "qb"), ("f", ("qa'", "qb"), "qf"), ("f", ("qb", "qa'"), "qf")],
        finals={"qf"},
    )
    M = minimize(A)
    assert isinstance(M, MinimalDBA) and M.certified
    assert len(M.states) == 3
    assert bounded_equivalence(M, fixtures.f1(), 8)
    assert len(M.states) == len(nerode_classes_bounded(A, 4, 6))


def test_minimize_merges_equivalent_states():
    # qa and qc accept the same contexts
    A = BottomUpAutomaton.build(
        fixtures.ABF,
        [("a", (), "qa"), ("b", (), "qc"), ("f", ("qa", "qa"), "qf"), ("f", ("qa", "qc"), "qf"),
         ("f", ("qc", "qa"), "qf"), ("f", ("qc", "qc"), "qf")],
        finals={"qf"},
    )
    M = minimize(A)
    assert M.states == {"qa", "qf"}
    assert len(M.transitions) == 3


def test_minimize_f3_unchanged():
    M = minimize(fixtures.f3())
    assert (M.states, M.finals, M.transitions) == (
        fixtures.f3().states, fixtures.f3().finals, fixtures.f3().transitions
    )
    assert minimize(fixtures.f3()).states == {"qa", "qb", "p", "p'", "qf"}


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_minimize_f4(m):
    assert len(minimize(fixtures.f4(m)).states) == m + 4


def test_minimize_empty_language():
    A = BottomUpAutomaton.build({"a": 0}, [("a", (), "q")], finals=set())
    M = minimize(A)
    assert M.states == set() and M.transitions == set()


def test_minimize_needs_determinism():
    A = BottomUpAutomaton.build({"a": 0}, [("a", (), "p"), ("a", (), "q")], finals={"p"})
    with pytest.raises(NotDeterministicError):
        minimize(A)


def test_minimal_trees_are_least():
    trees = minimal_trees(fixtures.f3())
    assert str(trees["p"]) == "f(a,b)"
    assert str(trees["p'"]) == "f(f(a,b),f(a,b))"


@pytest.mark.parametrize("name", sorted(fixtures.ALL))
def test_certify_fixtures(name):
    cert = certify(minimize(fixtures.ALL[name]()))
    assert cert.ok
    M = minimize(fixtures.ALL[name]())
    assert set(cert.members) == set(M.states)
    assert set(cert.usage) == set(M.transitions)


def test_certify_rejects_unused_transition():
    A = with_extra(fixtures.f1(), transitions={_t("f", ("qa", "qa"), "z")}, states={"z"})
    with pytest.raises(CertificationError):
        certify(A)


def _t(sym, args, target):
    from treedet.core import Transition

    return Transition(sym, args, target)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_minimize_preserves_language_and_is_idempotent(seed):
    A = random_dba(random.Random(seed), max_states=5)
    M = minimize(A)
    assert bounded_equivalence(A, M, 7)
    assert isomorphic(minimize(M), M)
    assert certify(M).ok
    assert len(M.states) <= len(trim(A).states)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_determinize_preserves_language(seed):
    rng = random.Random(seed)
    A = random_dba(rng, max_states=3)
    # add nondeterminism by duplicating some transitions with new targets
    extra = {_t(t.symbol, t.args, rng.choice(sorted(A.states))) for t in A.transitions if rng.random() < 0.3}
    N = with_extra(A, transitions=extra)
    D = determinize(N)
    assert D.is_deterministic
    assert bounded_equivalence(N, D, 6)


def test_equivalent_exact_beyond_any_small_bound():
    # the languages first differ on f(f(a,b),f(a,b)), of size 7
    deep = fixtures.f4(1)
    other = with_extra(deep, transitions=[_t("f", ("p", "p"), "qf")])
    assert bounded_equivalence(deep, other, 4)
    assert not equivalent(deep, other)
    assert equivalent(deep, rename_states(deep, {q: q + "_" for q in deep.states}))


def test_equivalent_handles_nondeterministic_input():
    A = BottomUpAutomaton.build(
        {"a": 0, "g": 1}, [("a", (), "x"), ("a", (), "y"), ("g", ("x",), "x")], finals={"x"}
    )
    B = BottomUpAutomaton.build({"a": 0, "g": 1}, [("a", (), "z"), ("g", ("z",), "z")], finals={"z"})
    assert equivalent(A, B)
