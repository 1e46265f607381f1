import random
import re
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treedet import fixtures
from treedet.analyze import canonical
from treedet.core import AlphabetError, RankedAlphabet, Tree, correspond
from treedet.fudt import build_violation_grammar, decompose
from treedet.io import (
    FormatError,
    load_automaton,
    parse_automaton,
    parse_grammar,
    parse_term,
    render_automaton,
    render_decomposition,
    render_grammar,
    render_term,
)
from treedet.oracle import enumerate_trees

from conftest import random_dba

GOLDEN = Path(__file__).parent / "golden"
ABF = RankedAlphabet(fixtures.ABF)

F2_TEXT = """\
bottomup F2
alphabet a:0 b:0 f:2
states qa qb q qf
final qf
transitions
a -> qa
b -> qb
f(qa,qb) -> q
f(qb,qa) -> q
f(qa,qa) -> q
f(qb,qb) -> q
f(qa,q) -> qf
end
"""


def _tokens(text):
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    return re.findall(r"->|[()\[\],:]|[^\s()\[\],:]+", body)


def test_f2_block_parses():
    doc = parse_automaton(F2_TEXT)
    A = doc.automaton
    assert doc.kind == "bottomup" and doc.name == "F2"
    assert len(A.transitions) == 7
    assert A.states == {"qa", "qb", "q", "qf"}
    assert A == fixtures.f2()


def test_trivial_document():
    text = "bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q\nend\n"
    A = parse_automaton(text).automaton
    assert len(A.transitions) == 1 and A.finals == {"q"}


def test_topdown_document():
    text = render_automaton(correspond(fixtures.f1()), "F1")
    assert "qf(f) -> (qa,qb)" in text and "qa(a) -> ()" in text
    doc = parse_automaton(text)
    assert doc.kind == "topdown"
    assert doc.automaton == correspond(fixtures.f1())


def test_golden_f3_round_trip():
    text = (GOLDEN / "F3.ta").read_text(encoding="utf-8")
    doc = parse_automaton(text)
    assert doc.automaton == fixtures.f3()
    assert _tokens(render_automaton(doc)) == _tokens(text)


def test_load_automaton(tmp_path):
    path = tmp_path / "f1.ta"
    path.write_text(render_automaton(fixtures.f1(), "F1"), encoding="utf-8")
    assert load_automaton(path).automaton == fixtures.f1()


def test_render_is_sorted():
    text = render_automaton(fixtures.f1(), "F1")
    assert text.index("f(qa,qb) -> qf") < text.index("f(qb,qa) -> qf")
    assert "states qa qb qf" in text


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> r\nend\n", "undeclared state"),
        ("bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\nb -> q\nend\n", "unknown symbol"),
        ("bottomup t\nalphabet a:0 f:2\nstates q\nfinal q\ntransitions\nf(q) -> q\nend\n", "rank"),
        ("bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q\na -> q\nend\n", "duplicate"),
        ("bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q $\nend\n", "unexpected"),
        ("bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> q\n", "end"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(FormatError) as exc:
        parse_automaton(text)
    assert fragment in str(exc.value)
    assert exc.value.line is not None


def test_error_carries_line_and_column():
    text = "bottomup t\nalphabet a:0\nstates q\nfinal q\ntransitions\na -> r\nend\n"
    with pytest.raises(FormatError) as exc:
        parse_automaton(text)
    assert exc.value.line == 6
    assert exc.value.column >= 1


def test_parse_term_examples():
    assert parse_term("f(a,b)", ABF).size == 3
    t = parse_term("f(f(a,b),f(f(a,b),f(a,b)))", ABF)
    assert t.size == 11 and t.subtree((2, 1)) == parse_term("f(a,b)", ABF)
    with pytest.raises(AlphabetError, match="rank"):
        parse_term("f(a)", ABF)
    with pytest.raises(AlphabetError, match="unknown"):
        parse_term("g(a,b)", ABF)
    with pytest.raises(FormatError):
        parse_term("f(a,b", ABF)


def test_render_grammar_f1():
    G = build_violation_grammar(canonical(fixtures.f1()))
    lines = render_grammar(G).splitlines()
    assert lines[0] == "S -> [ qf ]"
    assert "qf -> η [ qa qb ]" in lines
    assert "qa -> ε" in lines and "qb -> ε" in lines


@pytest.mark.parametrize("name", sorted(fixtures.ALL))
def test_grammar_round_trip(name):
    G = build_violation_grammar(canonical(fixtures.ALL[name]()))
    H = parse_grammar(render_grammar(G))
    assert (H.start, H.nonterminals, H.productions) == (G.start, G.nonterminals, G.productions)
    assert H.violation_symbols == G.violation_symbols
    assert render_grammar(H) == render_grammar(G)


def test_render_decomposition_f1(tmp_path):
    written = render_decomposition(decompose(fixtures.f1()), tmp_path)
    manifest = (tmp_path / "manifest").read_text().split()
    assert manifest == ["component_1.ta", "component_2.ta"]
    assert len(written) == 3
    for name in manifest:
        doc = load_automaton(tmp_path / name)
        assert doc.kind == "topdown"


def test_buffered_state_names_round_trip(tmp_path):
    D = decompose(fixtures.f3())
    render_decomposition(D, tmp_path)
    doc = load_automaton(tmp_path / "component_1.ta")
    assert doc.automaton == D.components[0].automaton


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_automaton_round_trip(seed):
    A = random_dba(random.Random(seed), trimmed=False)
    text = render_automaton(A, "r")
    assert parse_automaton(text).automaton == A
    assert render_automaton(parse_automaton(text)) == text


def trees(alphabet, max_leaves=6):
    leaves = st.sampled_from(alphabet.of_rank(0)).map(Tree)
    inner = [s for s in alphabet if alphabet.rank(s) > 0]

    def extend(children):
        return st.sampled_from(inner).flatmap(
            lambda s: st.tuples(*[children] * alphabet.rank(s)).map(lambda kids: Tree(s, kids))
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@given(trees(RankedAlphabet({"a": 0, "b": 0, "g": 1, "f": 2, "h": 3})))
def test_term_round_trip(t):
    alphabet = RankedAlphabet({"a": 0, "b": 0, "g": 1, "f": 2, "h": 3})
    assert parse_term(render_term(t), alphabet) == t
    assert parse_term(render_term(t)) == t


def test_render_is_deterministic():
    assert render_automaton(fixtures.f3(), "x") == render_automaton(fixtures.f3(), "x")
    assert all(parse_term(str(t), ABF) == t for t in enumerate_trees(ABF, 5))
