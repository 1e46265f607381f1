import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treedet import fixtures
from treedet.core import (
    HOLE,
    BottomUpAutomaton,
    RankedAlphabet,
    Rule,
    TopDownAutomaton,
    accepts,
    correspond,
)
from treedet.io import parse_term
from treedet.oracle import (
    bounded_equivalence,
    bounded_exchange,
    bounded_language,
    bounded_path_closed,
    dta_trees,
    enumerate_contexts,
    enumerate_trees,
    format_path,
    max_violation_count,
    nerode_classes_bounded,
    path_language,
)

from conftest import random_dba

ABF = RankedAlphabet(fixtures.ABF)
CATALAN = [1, 1, 2, 5, 14]


def term(text):
    return parse_term(text, ABF)


@pytest.mark.parametrize("m", range(5))
def test_tree_counts_by_size(m):
    # binary trees with m inner nodes, two leaf labels
    n = 2 * m + 1
    exact = [t for t in enumerate_trees(ABF, n) if t.size == n]
    assert len(exact) == CATALAN[m] * 2 ** (m + 1)
    assert len(set(exact)) == len(exact)


def test_enumeration_is_ordered_by_size():
    sizes = [t.size for t in enumerate_trees(ABF, 7)]
    assert sizes == sorted(sizes)


def test_unary_symbols_enumerate():
    sigma = RankedAlphabet({"a": 0, "g": 1})
    assert [str(t) for t in enumerate_trees(sigma, 3)] == ["a", "g(a)", "g(g(a))"]


def test_contexts_have_one_hole():
    ctx = [str(c) for c in enumerate_contexts(ABF, 3)]
    # the bare hole, then f(hole,x) and f(x,hole) for both leaves
    assert len(ctx) == 5
    assert all(c.count(HOLE) == 1 for c in ctx)


def test_path_language():
    assert path_language(term("f(a,f(b,a))")) == {("f", 1, "a"), ("f", 2, "f", 1, "b"), ("f", 2, "f", 2, "a")}
    assert format_path(("f", 2, "f", 1, "b")) == "f2f1b"


def test_f1_is_not_path_closed():
    v = bounded_path_closed(fixtures.f1(), 3)
    assert not v
    assert str(v.counterexample) in {"f(a,a)", "f(b,b)"}
    assert v.bound == 3


@pytest.mark.parametrize("make", [fixtures.f2, fixtures.singleton])
def test_deterministic_fixtures_are_path_closed(make):
    assert bounded_path_closed(make(), 9)
    assert bounded_exchange(make(), 9)


def test_exchange_counterexample_on_f1():
    v = bounded_exchange(fixtures.f1(), 3)
    assert not v
    c = v.counterexample
    A = fixtures.f1()
    assert accepts(A, c.tree) and accepts(A, c.other) and not accepts(A, c.mixed)
    assert c.address == ()
    assert c.mixed == c.tree.replace((c.position,), c.other.children[c.position - 1])


def test_exchange_on_f3_needs_the_full_tree():
    assert bounded_exchange(fixtures.f3(), 10)
    assert not bounded_exchange(fixtures.f3(), 11)


def test_bounded_equivalence_reports_least_difference():
    v = bounded_equivalence(fixtures.f1(), fixtures.singleton(), 5)
    assert not v and str(v.tree) == "f(b,a)"
    assert bounded_equivalence(fixtures.f2(), fixtures.f2(), 7)


def test_bounded_language_of_f2():
    assert [str(t) for t in bounded_language(fixtures.f2(), 7)] == [
        "f(a,f(a,a))", "f(a,f(a,b))", "f(a,f(b,a))", "f(a,f(b,b))",
    ]


def test_nerode_classes_of_f2():
    classes = nerode_classes_bounded(fixtures.f2(), 5, 7)
    # leaf a, leaf b, the inner f-class and the final class
    assert len(classes) == 4
    assert term("f(a,b)") in next(c for c in classes.classes if term("f(b,b)") in c)


def test_dta_trees_counts_each_tree_once():
    B = TopDownAutomaton(
        ABF, {"q", "x"}, {"q"},
        {Rule("q", "f", ("x", "x")), Rule("x", "a", ()), Rule("x", "b", ())},
    )
    assert sorted(map(str, dta_trees(B, 5))) == ["f(a,a)", "f(a,b)", "f(b,a)", "f(b,b)"]
    with pytest.raises(ValueError):
        dta_trees(correspond(fixtures.f1()), 5)


def test_max_violation_count_on_comb():
    A = fixtures.comb()
    marked = [t for t in A.transitions if t.symbol == "f" and t.args in {("qa", "qb"), ("qb", "qa")}]
    # a comb of size 4n-1 has n+1 left subtrees that are swaps
    assert max_violation_count(A, marked, 7) == 2
    assert max_violation_count(A, marked, 11) == 3
    assert max_violation_count(A, marked, 2) == -1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_max_violation_count_matches_runs(seed):
    A = random_dba(random.Random(seed), max_states=3)
    marked = {t for t in A.transitions if t.args}
    from treedet.core import RunRejected, run_of

    best = -1
    for t in enumerate_trees(A.alphabet, 6):
        try:
            run = run_of(A, t)
        except RunRejected:
            continue
        if run.root not in A.finals:
            continue
        used = [run.transition_at(u) for u in t.addresses()]
        best = max(best, sum(x in marked for x in used))
    assert max_violation_count(A, marked, 6) == best
