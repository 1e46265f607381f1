"""Text formats for automata, terms, violation grammars and decompositions.

Automaton files look like::

    # comment
    bottomup F1
    alphabet a:0 b:0 f:2
    states qa qb qf
    final qf
    transitions
    a -> qa
    f(qa,qb) -> qf
    end

Top-down files use ``topdown``, ``initial`` and rules ``q(f) -> (q1,q2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Union

from treedet.core import (
    BottomUpAutomaton,
    RankedAlphabet,
    Rule,
    TopDownAutomaton,
    Transition,
    Tree,
)

if TYPE_CHECKING:
    from treedet.construct import EliminationTrace
    from treedet.fudt import Decomposition, ViolationGrammar

IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
# State ids additionally allow subset names (q1|q2) and buffers (q@[1,2.1]).
STATE = rf"{IDENT}(?:\|{IDENT})*(?:@\[[0-9.,]*\])?"

_TOKEN = re.compile(
    rf"(?P<state>{STATE})|(?P<num>[0-9]+)|(?P<arrow>->)|(?P<punct>[(),:\[\]])|(?P<ws>\s+)"
)


class FormatError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AutomatonDocument:
    kind: str
    name: str
    automaton: Union[BottomUpAutomaton, TopDownAutomaton]


def _tokens(text: str, line: int) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return out


class _Line:
    def __init__(self, number: int, text: str):
        self.number = number
        self.toks = _tokens(text, number)
        self.i = 0
        self.col = 1

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, 0)

    def take(self, kind: str | None = None, value: str | None = None) -> str:
        k, v, col = self.peek()
        if k is None:
            raise FormatError(f"unexpected end of line, expected {value or kind}", self.number)
        if (kind and k != kind) or (value and v != value):
            raise FormatError(f"expected {value or kind}, got {v!r}", self.number, col)
        self.i += 1
        self.col = col
        return v

    def accept(self, value: str) -> bool:
        if self.peek()[1] == value:
            self.i += 1
            return True
        return False

    def done(self) -> None:
        k, v, col = self.peek()
        if k is not None:
            raise FormatError(f"trailing input {v!r}", self.number, col)

    def state_list(self, close: str) -> list[tuple[str, int]]:
        items: list[tuple[str, int]] = []
        if self.accept(close):
            return items
        while True:
            items.append((self.take("state"), self.col))
            if self.accept(close):
                return tuple(items)
            self.take("punct", ",")

    def error(self, message: str) -> FormatError:
        return FormatError(message, self.number, self.peek()[2] or 1)


def _significant_lines(text: str) -> list[_Line]:
    out = []
    for number, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        if body.strip():
            out.append(_Line(number, body))
    return out


def parse_automaton(text: str) -> AutomatonDocument:
    lines = _significant_lines(text)
    if not lines:
        raise FormatError("empty document")
    it = iter(lines)
    header = next(it)
    kind = header.take("state")
    if kind not in ("bottomup", "topdown"):
        raise header.error(f"expected 'bottomup' or 'topdown', got {kind!r}")
    name = header.take("state")
    header.done()

    alphabet: RankedAlphabet | None = None
    states: list[str] = []
    marked: list[str] = []
    marked_kw = "final" if kind == "bottomup" else "initial"
    seen_kw: set[str] = set()

    for line in it:
        kw = line.take("state")
        if kw == "transitions":
            line.done()
            break
        if kw in seen_kw:
            raise FormatError(f"duplicate {kw!r} line", line.number)
        seen_kw.add(kw)
        if kw == "alphabet":
            ranks: dict[str, int] = {}
            while line.peek()[0] is not None:
                _, sym, col = line.peek()
                sym = line.take("state")
                line.take("punct", ":")
                rank = int(line.take("num"))
                if sym in ranks:
                    raise FormatError(f"duplicate symbol {sym!r}", line.number, col)
                ranks[sym] = rank
            alphabet = RankedAlphabet(ranks)
        elif kw == "states":
            while line.peek()[0] is not None:
                states.append(line.take("state"))
        elif kw == marked_kw:
            while line.peek()[0] is not None:
                marked.append(line.take("state"))
        else:
            raise FormatError(f"unknown section {kw!r}", line.number, 1)
    else:
        raise FormatError("missing 'transitions' section")
    if alphabet is None:
        raise FormatError("missing 'alphabet' line")
    declared = set(states)
    if len(declared) != len(states):
        raise FormatError("duplicate state declaration")

    def known(q: str, line: _Line, col: int) -> str:
        if q not in declared:
            raise FormatError(f"undeclared state {q!r}", line.number, col)
        return q

    def symbol(sym: str, arity: int, line: _Line, col: int) -> str:
        if sym not in alphabet:
            raise FormatError(f"unknown symbol {sym!r}", line.number, col)
        if alphabet.rank(sym) != arity:
            raise FormatError(
                f"rank mismatch: {sym!r} has rank {alphabet.rank(sym)}, got {arity}", line.number, col
            )
        return sym

    for q in marked:
        if q not in declared:
            raise FormatError(f"undeclared {marked_kw} state {q!r}")

    items: set = set()
    ended = False
    for line in it:
        if line.peek()[1] == "end":
            line.take()
            line.done()
            ended = True
            break
        if kind == "bottomup":
            sym = line.take("state")
            sym_col = line.col
            args: list[tuple[str, int]] = []
            if line.accept("("):
                args = line.state_list(")")
            line.take("arrow")
            target = known(line.take("state"), line, line.col)
            line.done()
            item = Transition(
                symbol(sym, len(args), line, sym_col),
                tuple(known(q, line, c) for q, c in args),
                target,
            )
        else:
            state = known(line.take("state"), line, line.col)
            line.take("punct", "(")
            sym = line.take("state")
            sym_col = line.col
            line.take("punct", ")")
            line.take("arrow")
            line.take("punct", "(")
            kids = line.state_list(")")
            line.done()
            item = Rule(
                state, symbol(sym, len(kids), line, sym_col), tuple(known(q, line, c) for q, c in kids)
            )
        if item in items:
            raise FormatError(f"duplicate transition {item}", line.number, 1)
        items.add(item)
    if not ended:
        raise FormatError("missing 'end'")
    extra = next(it, None)
    if extra is not None:
        raise FormatError("content after 'end'", extra.number)

    if kind == "bottomup":
        automaton = BottomUpAutomaton(alphabet, frozenset(states), frozenset(marked), frozenset(items))
    else:
        automaton = TopDownAutomaton(alphabet, frozenset(states), frozenset(marked), frozenset(items))
    return AutomatonDocument(kind, name, automaton)


def load_automaton(path: str | Path) -> AutomatonDocument:
    return parse_automaton(Path(path).read_text(encoding="utf-8"))


def render_automaton(doc: AutomatonDocument | BottomUpAutomaton | TopDownAutomaton,
                     name: str = "A", comments: Iterable[str] = ()) -> str:
    """Canonical text: symbols, states and transitions sorted lexicographically."""
    if not isinstance(doc, AutomatonDocument):
        kind = "bottomup" if isinstance(doc, BottomUpAutomaton) else "topdown"
        doc = AutomatonDocument(kind, name, doc)
    A = doc.automaton
    out = [f"# {c}" for c in comments]
    out.append(f"{doc.kind} {doc.name}")
    out.append(" ".join(["alphabet"] + [f"{s}:{r}" for s, r in A.alphabet.ranks.items()]))
    out.append(" ".join(["states"] + sorted(A.states)))
    if isinstance(A, BottomUpAutomaton):
        out.append(" ".join(["final"] + sorted(A.finals)))
        out.append("transitions")
        for t in sorted(A.transitions):
            lhs = t.symbol if not t.args else f"{t.symbol}({','.join(t.args)})"
            out.append(f"{lhs} -> {t.target}")
    else:
        out.append(" ".join(["initial"] + sorted(A.initials)))
        out.append("transitions")
        for r in sorted(A.rules):
            out.append(f"{r.state}({r.symbol}) -> ({','.join(r.children)})")
    out.append("end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# terms
# --------------------------------------------------------------------------


def parse_term(text: str, alphabet: RankedAlphabet | None = None) -> Tree:
    toks = _tokens(text.strip(), 1)
    pos = 0

    def node() -> Tree:
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] != "state":
            col = toks[pos][2] if pos < len(toks) else len(text)
            raise FormatError("expected a symbol", 1, col)
        label = toks[pos][1]
        pos += 1
        kids: list[Tree] = []
        if pos < len(toks) and toks[pos][1] == "(":
            pos += 1
            while True:
                kids.append(node())
                if pos < len(toks) and toks[pos][1] == ",":
                    pos += 1
                    continue
                if pos < len(toks) and toks[pos][1] == ")":
                    pos += 1
                    break
                raise FormatError("expected ',' or ')'", 1, toks[pos][2] if pos < len(toks) else len(text))
        return Tree(label, tuple(kids))

    tree = node()
    if pos != len(toks):
        raise FormatError(f"trailing input {toks[pos][1]!r}", 1, toks[pos][2])
    if alphabet is not None:
        tree.check(alphabet)
    return tree


def render_term(t: Tree) -> str:
    return str(t)


# --------------------------------------------------------------------------
# grammars, traces, decompositions
# --------------------------------------------------------------------------

EPSILON = "ε"


def render_grammar(G: "ViolationGrammar") -> str:
    """One production per line; start symbol first, then nonterminals in
    order of first appearance from the start symbol."""
    lines = []
    for lhs in G.nonterminal_order():
        for rhs in sorted(G.productions_of(lhs)):
            lines.append(f"{lhs} -> {' '.join(rhs) if rhs else EPSILON}")
    return "\n".join(lines) + "\n"


def parse_grammar(text: str) -> "ViolationGrammar":
    from treedet.fudt import ViolationGrammar

    rows: list[tuple[str, tuple[str, ...]]] = []
    for number, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "->" not in body:
            raise FormatError("expected '->'", number, 1)
        lhs, rhs = body.split("->", 1)
        lhs = lhs.strip()
        if not re.fullmatch(STATE, lhs):
            raise FormatError(f"bad nonterminal {lhs!r}", number, 1)
        symbols = tuple(rhs.split())
        if symbols == (EPSILON,):
            symbols = ()
        rows.append((lhs, symbols))
    if not rows:
        raise FormatError("empty grammar")
    nonterminals = {lhs for lhs, _ in rows}
    terminals = {s for _, rhs in rows for s in rhs if s not in nonterminals}
    violation_symbols = terminals - {"[", "]"}
    return ViolationGrammar(
        start=rows[0][0],
        nonterminals=frozenset(nonterminals),
        violation_symbols=frozenset(violation_symbols),
        productions=frozenset(rows),
    )


def render_trace(trace: "EliminationTrace") -> str:
    lines = []
    for n, step in enumerate(trace.steps, 1):
        g = step.group
        lines.append(f"step {n} ({step.phase}): group ({g.symbol},{g.target}) "
                     f"with {len(g.lhs_tuples)} transitions")
        lines.append(f"  fresh {' '.join(step.fresh)}")
        lines.append(f"  substitute {step.substitute}")
        for t in step.adapters:
            lines.append(f"  adapter {t}")
    return "\n".join(lines) + ("\n" if lines else "")


def render_decomposition(D: "Decomposition", directory: str | Path) -> list[Path]:
    """Write ``component_<i>.ta`` files plus a ``manifest``; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    names = []
    for i, comp in enumerate(D.components, 1):
        fname = f"component_{i}.ta"
        path = directory / fname
        path.write_text(
            render_automaton(comp.automaton, f"component_{i}", comments=comp.provenance_lines()),
            encoding="utf-8",
        )
        written.append(path)
        names.append(fname)
    manifest = directory / "manifest"
    manifest.write_text("".join(f"{n}\n" for n in names), encoding="utf-8")
    written.append(manifest)
    return written


__all__ = [
    "AutomatonDocument",
    "FormatError",
    "parse_automaton",
    "load_automaton",
    "render_automaton",
    "parse_term",
    "render_term",
    "render_grammar",
    "parse_grammar",
    "render_trace",
    "render_decomposition",
]
