"""Finite unions of deterministic top-down languages.

The violation grammar records where an accepting run applies transitions of
violating groups; its language is finite exactly when the tree language is a
finite union of DTA languages. When it is finite, every string (decoded as a
violation tree) yields a buffered automaton, and fixing one group transition
per violation node yields one deterministic top-down component.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from treedet.analyze import ViolationReport, canonical, conflux_groups, is_violation, rooted
from treedet.construct import (
    DEFAULT_CHECK_SIZE,
    ConstructionError,
    ViolationPresent,
    build_dta,
    eliminate_all,
    to_dta,
)
from treedet.core import (
    Address,
    BottomUpAutomaton,
    Run,
    TopDownAutomaton,
    Transition,
    Tree,
    correspond_inv,
    format_address,
    is_top_down_deterministic,
)
from treedet.minimize import MinimalDBA, StateCapExceeded, equivalent, minimal_trees, trim

OPEN, CLOSE = "[", "]"
ROOT_LABEL = "ε"
DEFAULT_COMPONENT_CAP = 4096


class InfiniteGrammarError(ValueError):
    pass


class NotFUDTError(ValueError):
    """The language is not a finite union of DTA languages."""


class DecompositionTooLarge(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"decomposition would have {count} components (cap {cap})")
        self.count = count
        self.cap = cap


def component_cap() -> int:
    return int(os.environ.get("TREEDET_CAP", DEFAULT_COMPONENT_CAP))


# --------------------------------------------------------------------------
# the violation grammar
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ViolationGrammar:
    start: str
    nonterminals: frozenset[str]
    violation_symbols: frozenset[str]
    productions: frozenset[tuple[str, tuple[str, ...]]]
    # violation symbol -> (group symbol, group target); empty for parsed grammars
    groups: dict = field(default_factory=dict, compare=False, hash=False)

    def productions_of(self, lhs: str) -> list[tuple[str, ...]]:
        return [rhs for l, rhs in self.productions if l == lhs]

    def is_terminal(self, symbol: str) -> bool:
        return symbol not in self.nonterminals

    def nonterminal_order(self) -> list[str]:
        """Start symbol, then nonterminals breadth-first in order of appearance."""
        order = [self.start]
        seen = {self.start}
        i = 0
        while i < len(order):
            for rhs in sorted(self.productions_of(order[i])):
                for s in rhs:
                    if s in self.nonterminals and s not in seen:
                        seen.add(s)
                        order.append(s)
            i += 1
        order.extend(sorted(self.nonterminals - seen))
        return order


def violation_symbols(reports: Iterable[ViolationReport]) -> dict[tuple[str, str], str]:
    """η, η2, η3, ... per violating group, in (symbol, target) order."""
    keys = sorted((r.group.symbol, r.group.target) for r in reports)
    return {key: "η" if k == 0 else f"η{k + 1}" for k, key in enumerate(keys)}


@dataclass(frozen=True)
class _Analysis:
    minimal: BottomUpAutomaton
    rooted: BottomUpAutomaton
    reports: list[ViolationReport]
    names: dict[tuple[str, str], str]

    def symbol_of(self, t: Transition) -> str | None:
        return self.names.get((t.symbol, t.target))


def _analyse(M: BottomUpAutomaton) -> _Analysis:
    M = canonical(M)
    R = rooted(M)
    reports = [r for r in (is_violation(g) for g in conflux_groups(R)) if r.violating]
    return _Analysis(M, R, reports, violation_symbols(reports))


def build_violation_grammar(M: BottomUpAutomaton) -> ViolationGrammar:
    info = _analyse(M)
    R = info.rooted
    start = "S"
    while start in R.states:
        start += "'"
    prods: set[tuple[str, tuple[str, ...]]] = set()
    for t in R.transitions:
        nu = info.symbol_of(t)
        if nu is None:
            prods.add((t.target, t.args))
        else:
            prods.add((t.target, (nu, OPEN, *t.args, CLOSE)))
    for q in R.finals:
        prods.add((start, (OPEN, q, CLOSE)))
    return ViolationGrammar(
        start=start,
        nonterminals=frozenset(R.states | {start}),
        violation_symbols=frozenset(info.names.values()),
        productions=frozenset(prods),
        groups={v: k for k, v in info.names.items()},
    )


def _rooted_run(info: _Analysis, run: Run) -> Run:
    states = dict(run.states)
    R = info.rooted
    if states[()] not in R.finals:
        if states[()] in info.minimal.finals and len(R.finals) == 1:
            (states[()],) = R.finals
        else:
            raise ValueError("run is not accepting")
    return Run(run.tree, states)


def corresponding_string(M: BottomUpAutomaton, run: Run) -> tuple[str, ...]:
    """Terminal string derived by the productions of the run's transitions."""
    info = _analyse(M)
    run = _rooted_run(info, run)
    valid = info.rooted.transitions

    def emit(address: Address) -> list[str]:
        t = run.transition_at(address)
        if t not in valid:
            raise ValueError(f"{t} is not a transition of the automaton")
        inner: list[str] = []
        for i in range(1, len(t.args) + 1):
            inner.extend(emit(address + (i,)))
        nu = info.symbol_of(t)
        return inner if nu is None else [nu, OPEN, *inner, CLOSE]

    return (OPEN, *emit(()), CLOSE)


def format_string(tokens: Iterable[str]) -> str:
    return "".join(tokens)


def count_violating(M: BottomUpAutomaton, run: Run) -> int:
    info = _analyse(M)
    run = _rooted_run(info, run)
    return sum(
        1 for a in run.tree.addresses() if info.symbol_of(run.transition_at(a)) is not None
    )


# --------------------------------------------------------------------------
# finiteness
# --------------------------------------------------------------------------


def nullable_nonterminals(G: ViolationGrammar) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in G.productions:
            if lhs not in nullable and all(s in nullable for s in rhs):
                nullable.add(lhs)
                changed = True
    return nullable


def eliminate_epsilon(G: ViolationGrammar) -> ViolationGrammar:
    """Equivalent grammar (up to the empty word) without deleting rules, reduced."""
    nullable = nullable_nonterminals(G)
    prods: set[tuple[str, tuple[str, ...]]] = set()
    for lhs, rhs in G.productions:
        optional = [i for i, s in enumerate(rhs) if s in nullable]
        for drop in itertools.chain.from_iterable(
            itertools.combinations(optional, n) for n in range(len(optional) + 1)
        ):
            new = tuple(s for i, s in enumerate(rhs) if i not in drop)
            if new and new != (lhs,):
                prods.add((lhs, new))

    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in prods:
            if lhs not in productive and all(
                s in productive or s not in G.nonterminals for s in rhs
            ):
                productive.add(lhs)
                changed = True
    prods = {
        (l, r) for l, r in prods
        if l in productive and all(s in productive or s not in G.nonterminals for s in r)
    }
    reachable = {G.start}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in prods:
            if lhs in reachable:
                for s in rhs:
                    if s in G.nonterminals and s not in reachable:
                        reachable.add(s)
                        changed = True
    prods = {(l, r) for l, r in prods if l in reachable}
    return ViolationGrammar(
        G.start, frozenset(reachable & (productive | {G.start})), G.violation_symbols,
        frozenset(prods), G.groups,
    )


def strongly_connected_components(nodes: Iterable[str], edges: dict[str, list[str]]) -> list[list[str]]:
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = 0

    for root in sorted(nodes):
        if root in index:
            continue
        work = [(root, iter(sorted(edges.get(root, ()))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ())))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


@dataclass(frozen=True)
class FinitenessVerdict:
    finite: bool
    component: tuple[str, ...] = ()
    marked_edge: tuple[str, str] | None = None
    production: tuple[str, tuple[str, ...]] | None = None

    def __bool__(self) -> bool:
        return self.finite

    def explain(self) -> str:
        if self.finite:
            return "finite: no strongly connected component contains a marked edge"
        lhs, rhs = self.production
        return (
            f"infinite: marked edge {self.marked_edge[0]} -> {self.marked_edge[1]} "
            f"(from {lhs} -> {' '.join(rhs)}) lies inside the component "
            f"{{{', '.join(self.component)}}}"
        )


def grammar_is_finite(G: ViolationGrammar) -> FinitenessVerdict:
    """Cycle test on the production graph after removing deleting rules.

    Chain productions give plain edges, longer right-hand sides give marked
    edges; a marked edge inside a strongly connected component means some
    lengthening production can repeat without bound.
    """
    H = eliminate_epsilon(G)
    edges: dict[str, list[str]] = {}
    marked: list[tuple[str, str, tuple[str, tuple[str, ...]]]] = []
    for lhs, rhs in sorted(H.productions):
        targets = [s for s in rhs if s in H.nonterminals]
        edges.setdefault(lhs, []).extend(targets)
        if len(rhs) > 1:
            marked.extend((lhs, s, (lhs, rhs)) for s in targets)
    comp_of = {}
    comps = strongly_connected_components(H.nonterminals, edges)
    for n, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = n
    for a, b, prod in marked:
        if comp_of[a] == comp_of[b]:
            return FinitenessVerdict(False, tuple(comps[comp_of[a]]), (a, b), prod)
    return FinitenessVerdict(True)


def enumerate_grammar_language(G: ViolationGrammar) -> set[tuple[str, ...]]:
    """The whole (finite) language, as token tuples."""
    if not grammar_is_finite(G):
        raise InfiniteGrammarError("the violation grammar generates an infinite language")
    lang: dict[str, set[tuple[str, ...]]] = {n: set() for n in G.nonterminals}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in sorted(G.productions):
            pools = [lang[s] if s in G.nonterminals else {(s,)} for s in rhs]
            for combo in itertools.product(*pools):
                word = tuple(itertools.chain.from_iterable(combo))
                if word not in lang[lhs]:
                    lang[lhs].add(word)
                    changed = True
    return lang[G.start]


# --------------------------------------------------------------------------
# violation trees
# --------------------------------------------------------------------------


def violation_tree_of(tokens: Iterable[str] | str) -> Tree:
    """Decode ``[ v[ ] w[ v[ ] ] ]`` into the tree ε(v, w(v))."""
    if isinstance(tokens, str):
        tokens = tokenize_string(tokens)
    toks = list(tokens)
    pos = 0

    def bracket() -> list[Tree]:
        nonlocal pos
        if pos >= len(toks) or toks[pos] != OPEN:
            raise ValueError(f"malformed bracketing at token {pos}")
        pos += 1
        kids = []
        while pos < len(toks) and toks[pos] != CLOSE:
            label = toks[pos]
            if label == OPEN:
                raise ValueError(f"bracket without violation symbol at token {pos}")
            pos += 1
            kids.append(Tree(label, tuple(bracket())))
        if pos >= len(toks):
            raise ValueError("unclosed bracket")
        pos += 1
        return kids

    root = Tree(ROOT_LABEL, tuple(bracket()))
    if pos != len(toks):
        raise ValueError("trailing tokens after the outer bracket")
    return root


def tokenize_string(text: str) -> list[str]:
    """Split ``[η[]η2[]]`` (spaces optional) into tokens."""
    out: list[str] = []
    word = ""
    for ch in text:
        if ch in "[] \t":
            if word:
                out.append(word)
                word = ""
            if ch in "[]":
                out.append(ch)
        else:
            word += ch
    if word:
        out.append(word)
    return out


def positions(vt: Tree, symbol: str | None = None) -> list[Address]:
    """Non-root positions of a violation tree, optionally only those labeled ``symbol``."""
    return [
        a for a in vt.addresses()
        if a and (symbol is None or vt.subtree(a).label == symbol)
    ]


# --------------------------------------------------------------------------
# buffered automata
# --------------------------------------------------------------------------


def buffered_name(q: str, buffer: tuple[Address, ...]) -> str:
    return f"{q}@[{','.join('.'.join(map(str, u)) for u in buffer)}]"


@dataclass(frozen=True)
class BufferedAutomaton:
    automaton: BottomUpAutomaton
    violation_tree: Tree
    origin: dict = field(hash=False, compare=False)        # state -> (q, buffer)
    source: dict = field(hash=False, compare=False)        # transition -> original transition
    pinned: dict = field(hash=False, compare=False)        # transition -> violation position

    def buffer(self, state: str) -> tuple[Address, ...]:
        return self.origin[state][1]


def _same_depth_in_order(buffer: tuple[Address, ...]) -> bool:
    depth = len(buffer[0])
    return all(len(u) == depth for u in buffer) and all(
        a < b for a, b in zip(buffer, buffer[1:])
    )


def buffered_automaton(M: BottomUpAutomaton, vt: Tree) -> BufferedAutomaton:
    """States of ``M`` paired with ordered lists of violation-tree positions.

    Violating transitions either guess a leaf position labeled with their
    group's symbol, or close off the complete child list of a position so
    labeled. Other transitions concatenate their children's buffers. The
    only final state is the root state holding the level-one positions.
    """
    info = _analyse(M)
    R = info.rooted
    labels = {u: vt.subtree(u).label for u in positions(vt)}
    kids_of = {
        u: tuple(u + (i,) for i in range(1, len(vt.subtree(u).children) + 1))
        for u in [()] + positions(vt)
    }
    leaves_of: dict[str, list[Address]] = {}
    for u, lab in labels.items():
        if not kids_of[u]:
            leaves_of.setdefault(lab, []).append(u)

    def results(t: Transition, bufs: tuple[tuple[Address, ...], ...]) -> list[tuple[Address, ...]]:
        concat = tuple(itertools.chain.from_iterable(bufs))
        nu = info.symbol_of(t)
        if concat and not _same_depth_in_order(concat):
            return []
        if nu is None:
            return [concat]
        if not concat:
            return [(u,) for u in leaves_of.get(nu, [])]
        parent = concat[0][:-1]
        if parent and labels.get(parent) == nu and kids_of[parent] == concat:
            return [(parent,)]
        return []

    reach: dict[str, set[tuple[Address, ...]]] = {q: set() for q in R.states}
    edges: dict[tuple[Transition, tuple], set[tuple[Address, ...]]] = {}
    changed = True
    while changed:
        changed = False
        for t in sorted(R.transitions):
            pools = [sorted(reach[q]) for q in t.args]
            for bufs in itertools.product(*pools):
                key = (t, bufs)
                if key in edges:
                    continue
                out = results(t, bufs)
                edges[key] = set(out)
                for b in out:
                    if b not in reach[t.target]:
                        reach[t.target].add(b)
                        changed = True

    origin = {}
    source = {}
    pinned = {}
    trs = set()
    for (t, bufs), outs in edges.items():
        for b in outs:
            tr = Transition(
                t.symbol,
                tuple(buffered_name(q, bq) for q, bq in zip(t.args, bufs)),
                buffered_name(t.target, b),
            )
            trs.add(tr)
            source[tr] = t
            if info.symbol_of(t) is not None:
                pinned[tr] = b[0]
            for q, bq in zip((*t.args, t.target), (*bufs, b)):
                origin[buffered_name(q, bq)] = (q, bq)
    level_one = kids_of[()]
    finals = {buffered_name(q, level_one) for q in R.finals if level_one in reach[q]}
    for q in finals:
        origin.setdefault(q, (q.split("@", 1)[0], level_one))
    A = trim(BottomUpAutomaton(R.alphabet, frozenset(origin), frozenset(finals), frozenset(trs)))
    keep = A.transitions
    return BufferedAutomaton(
        A,
        vt,
        {q: v for q, v in origin.items() if q in A.states},
        {t: s for t, s in source.items() if t in keep},
        {t: u for t, u in pinned.items() if t in keep},
    )


# --------------------------------------------------------------------------
# decisions and decomposition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FudtVerdict:
    in_fudt: bool
    grammar: ViolationGrammar
    finiteness: FinitenessVerdict
    violations: list[ViolationReport]
    minimal: MinimalDBA

    def __bool__(self) -> bool:
        return self.in_fudt


def decide_fudt(A: BottomUpAutomaton, cap: int | None = None) -> FudtVerdict:
    M = canonical(A, cap)
    info = _analyse(M)
    G = build_violation_grammar(M)
    fin = grammar_is_finite(G)
    return FudtVerdict(fin.finite, G, fin, info.reports, M)


@dataclass(frozen=True)
class Component:
    automaton: TopDownAutomaton
    string: tuple[str, ...]
    choices: tuple[tuple[Address, Transition], ...]

    def provenance_lines(self) -> list[str]:
        lines = [f"string {format_string(self.string)}"]
        for u, t in self.choices:
            lines.append(f"position {format_address(u)}: {t}")
        return lines


@dataclass(frozen=True)
class Decomposition:
    components: list[Component]
    strings: list[tuple[str, ...]]
    minimal: MinimalDBA

    def __len__(self) -> int:
        return len(self.components)


def _language_key(B: TopDownAutomaton) -> tuple:
    # minimal automata of equal languages agree once each class is named by its least tree
    C = canonical(correspond_inv(B))
    name = {q: str(t) for q, t in minimal_trees(C).items()}
    trs = frozenset((t.symbol, tuple(name[q] for q in t.args), name[t.target]) for t in C.transitions)
    return frozenset(name[q] for q in C.finals), trs


def union(parts: Iterable[TopDownAutomaton]) -> BottomUpAutomaton:
    """Disjoint union of the components as one bottom-up automaton."""
    alphabet, states, finals, trs = None, set(), set(), set()
    for i, B in enumerate(parts, 1):
        A = correspond_inv(B)
        alphabet = A.alphabet
        ren = {q: f"c{i}_{q}" for q in A.states}
        states.update(ren.values())
        finals.update(ren[q] for q in A.finals)
        trs.update(Transition(t.symbol, tuple(ren[q] for q in t.args), ren[t.target])
                   for t in A.transitions)
    return BottomUpAutomaton(alphabet, frozenset(states), frozenset(finals), frozenset(trs))


def _component_dta(part: BottomUpAutomaton, check_size: int | None) -> TopDownAutomaton:
    try:
        free, _ = eliminate_all(part, require_violation_free=False, check_size=check_size)
        B = to_dta(free)
        if is_top_down_deterministic(B):
            return B
    except ConstructionError:
        pass
    # buffered state names are lost here, the language is not
    try:
        return build_dta(part, check_size=check_size).dta
    except ViolationPresent as exc:
        raise ConstructionError(f"component is not top-down deterministic: {exc}") from None


def decompose(
    A: BottomUpAutomaton,
    cap: int | None = None,
    check_size: int | None = DEFAULT_CHECK_SIZE,
) -> Decomposition:
    """One DTA per violation string and per choice of a group transition at
    each violation node; their union is L(A)."""
    cap = component_cap() if cap is None else cap
    verdict = decide_fudt(A, cap=None)
    if not verdict:
        raise NotFUDTError(verdict.finiteness.explain())
    M = verdict.minimal
    info = _analyse(M)
    by_symbol: dict[str, list[Transition]] = {}
    for r in info.reports:
        by_symbol[info.names[(r.group.symbol, r.group.target)]] = r.group.transitions()

    strings = sorted(enumerate_grammar_language(verdict.grammar))
    trees = [violation_tree_of(s) for s in strings]
    total = sum(
        math.prod(len(by_symbol[vt.subtree(u).label]) for u in positions(vt)) for vt in trees
    )
    if total > cap:
        raise DecompositionTooLarge(total, cap)

    components: list[Component] = []
    seen: set[tuple] = set()
    for s, vt in zip(strings, trees):
        B = buffered_automaton(M, vt)
        nodes = positions(vt)
        options = [by_symbol[vt.subtree(u).label] for u in nodes]
        for pick in itertools.product(*options):
            chosen = dict(zip(nodes, pick))
            trs = frozenset(
                t for t in B.automaton.transitions
                if t not in B.pinned or B.source[t] == chosen[B.pinned[t]]
            )
            part = trim(BottomUpAutomaton(
                B.automaton.alphabet, B.automaton.states, B.automaton.finals, trs
            ))
            if not part.finals:
                continue
            dta = _component_dta(part, check_size)
            key = _language_key(dta)
            if key in seen:
                continue
            seen.add(key)
            components.append(Component(dta, s, tuple(zip(nodes, pick))))
    D = Decomposition(components, strings, M)
    _verify(D, check_size)
    return D


def _verify(D: Decomposition, check_size: int | None) -> None:
    M = D.minimal
    if not D.components:
        if M.finals:
            raise ConstructionError("no components for a nonempty language")
        return
    U = union(c.automaton for c in D.components)
    try:
        same = equivalent(U, M)
    except StateCapExceeded:
        if check_size is None:
            return
        from treedet.oracle import bounded_equivalence

        same = bool(bounded_equivalence(U, M, check_size))
    if not same:
        raise ConstructionError("the components do not union to the input language")


def iter_runs_with_counts(M: BottomUpAutomaton, trees: Iterable[Tree]) -> Iterator[tuple[Run, tuple[str, ...], int]]:
    """Accepting runs of ``M`` with their corresponding strings and violation counts."""
    from treedet.core import RunRejected, run_of

    M = canonical(M)
    for t in trees:
        try:
            run = run_of(M, t)
        except RunRejected:
            continue
        if run.root in M.finals:
            yield run, corresponding_string(M, run), count_violating(M, run)
