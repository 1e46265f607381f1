"""Brute-force reference semantics at desk scale.

Everything here works by enumeration and membership tests only, never by
the minimization or conflux machinery it is used to check. Verdicts carry
the bound they were computed at: "holds" means "holds up to that bound".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from treedet.core import (
    HOLE,
    AlphabetError,
    BottomUpAutomaton,
    Context,
    Evaluator,
    RankedAlphabet,
    TopDownAutomaton,
    Tree,
    is_top_down_deterministic,
)

DEFAULT_SLACK = 4

Path = tuple  # alternating symbol, child index, ..., leaf symbol


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered ways to write ``total`` as ``parts`` positive integers."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if total < parts:
        return
    for cut in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cut + (total,)
        yield tuple(b - a for a, b in zip(bounds, bounds[1:]))


@lru_cache(maxsize=None)
def _trees_of_size(alphabet: RankedAlphabet, n: int) -> tuple[Tree, ...]:
    out = []
    for sym, k in alphabet.ranks.items():
        if k == 0:
            if n == 1:
                out.append(Tree(sym))
            continue
        for sizes in _compositions(n - 1, k):
            pools = [_trees_of_size(alphabet, s) for s in sizes]
            for kids in itertools.product(*pools):
                out.append(Tree(sym, kids))
    out.sort(key=str)
    return tuple(out)


def enumerate_trees(alphabet: RankedAlphabet, max_size: int) -> Iterator[Tree]:
    """All trees with at most ``max_size`` nodes, by size then by text."""
    for n in range(1, max_size + 1):
        yield from _trees_of_size(alphabet, n)


def enumerate_contexts(alphabet: RankedAlphabet, max_size: int) -> Iterator[Context]:
    """All contexts with at most ``max_size`` nodes (the hole counts as one)."""
    extended = alphabet.with_hole()
    for t in enumerate_trees(extended, max_size):
        if str(t).count(HOLE) == 1:
            yield Context(t)


# --------------------------------------------------------------------------
# path languages
# --------------------------------------------------------------------------


def path_language(t: Tree) -> frozenset[Path]:
    if not t.children:
        return frozenset({(t.label,)})
    out = set()
    for i, child in enumerate(t.children, 1):
        for w in path_language(child):
            out.add((t.label, i) + w)
    return frozenset(out)


def format_path(path: Path) -> str:
    return "".join(map(str, path))


@dataclass(frozen=True)
class PathClosedVerdict:
    closed: bool
    bound: int
    counterexample: Tree | None = None

    def __bool__(self) -> bool:
        return self.closed


def bounded_path_closed(A: BottomUpAutomaton, max_size: int, slack: int = DEFAULT_SLACK) -> PathClosedVerdict:
    """Look for a tree outside L(A) all of whose paths are paths of L(A).

    The path language is approximated from below by accepted trees up to
    ``max_size + slack``, so any counterexample found is genuine.
    """
    member = Evaluator(A)
    paths: set[Path] = set()
    for t in enumerate_trees(A.alphabet, max_size + slack):
        if member.accepts(t):
            paths |= path_language(t)
    for t in enumerate_trees(A.alphabet, max_size):
        if not member.accepts(t) and path_language(t) <= paths:
            return PathClosedVerdict(False, max_size, t)
    return PathClosedVerdict(True, max_size)


# --------------------------------------------------------------------------
# exchange property
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExchangeCounterexample:
    tree: Tree          # t = C[f(t1..tk)], accepted
    address: tuple      # u
    position: int       # i, 1-based
    other: Tree         # C[f(s1..sk)], accepted
    mixed: Tree         # C[f(t1..s_i..tk)], rejected


@dataclass(frozen=True)
class ExchangeVerdict:
    holds: bool
    bound: int
    counterexample: ExchangeCounterexample | None = None

    def __bool__(self) -> bool:
        return self.holds


def bounded_exchange(A: BottomUpAutomaton, max_size: int) -> ExchangeVerdict:
    """Check the single-position subtree exchange on accepted trees up to ``max_size``."""
    member = Evaluator(A)
    accepted = [t for t in enumerate_trees(A.alphabet, max_size) if member.accepts(t)]
    buckets: dict[tuple[str, str], list[tuple[Tree, tuple]]] = {}
    for t in accepted:
        for u in t.addresses():
            node = t.subtree(u)
            if node.children:
                key = (str(Context.around(t, u)), node.label)
                buckets.setdefault(key, []).append((t, u))
    for key in sorted(buckets, key=lambda k: min(str(t) for t, _ in buckets[k])):
        members = buckets[key]
        for (t, u), (s, _) in itertools.product(members, repeat=2):
            if t == s:
                continue
            node, other = t.subtree(u), s.subtree(u)
            for i in range(1, len(node.children) + 1):
                if node.children[i - 1] == other.children[i - 1]:
                    continue
                mixed = t.replace(u + (i,), other.children[i - 1])
                if not member.accepts(mixed):
                    return ExchangeVerdict(
                        False, max_size, ExchangeCounterexample(t, u, i, s, mixed)
                    )
    return ExchangeVerdict(True, max_size)


# --------------------------------------------------------------------------
# equivalence and congruence
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceVerdict:
    equal: bool
    bound: int
    tree: Tree | None = None

    def __bool__(self) -> bool:
        return self.equal


def bounded_equivalence(A: BottomUpAutomaton, B: BottomUpAutomaton, max_size: int) -> EquivalenceVerdict:
    if A.alphabet != B.alphabet:
        raise AlphabetError("automata over different alphabets")
    ma, mb = Evaluator(A), Evaluator(B)
    for t in enumerate_trees(A.alphabet, max_size):
        if ma.accepts(t) != mb.accepts(t):
            return EquivalenceVerdict(False, max_size, t)
    return EquivalenceVerdict(True, max_size)


def bounded_language(A: BottomUpAutomaton, max_size: int) -> list[Tree]:
    member = Evaluator(A)
    return [t for t in enumerate_trees(A.alphabet, max_size) if member.accepts(t)]


@dataclass(frozen=True)
class NerodeClasses:
    classes: list[frozenset[Tree]]
    bottom: frozenset[Tree]
    bounds: tuple[int, int]

    def __len__(self) -> int:
        return len(self.classes)


def nerode_classes_bounded(A: BottomUpAutomaton, tree_bound: int, context_bound: int) -> NerodeClasses:
    """Group trees by the set of contexts (up to ``context_bound``) accepting them."""
    member = Evaluator(A)
    contexts = list(enumerate_contexts(A.alphabet, context_bound))
    groups: dict[frozenset[int], set[Tree]] = {}
    for t in enumerate_trees(A.alphabet, tree_bound):
        behaviour = frozenset(i for i, c in enumerate(contexts) if member.accepts(c.plug(t)))
        groups.setdefault(behaviour, set()).add(t)
    bottom = frozenset(groups.pop(frozenset(), set()))
    classes = sorted((frozenset(g) for g in groups.values()), key=lambda g: min(map(str, g)))
    return NerodeClasses(classes, bottom, (tree_bound, context_bound))


# --------------------------------------------------------------------------
# deterministic top-down automata: exact counting
# --------------------------------------------------------------------------


def dta_trees(B: TopDownAutomaton, max_size: int) -> list[Tree]:
    """All trees of size <= max_size accepted by a DTA.

    A DTA has at most one run per tree, so generating runs top-down yields
    each accepted tree exactly once.
    """
    if not is_top_down_deterministic(B):
        raise ValueError("dta_trees needs a deterministic top-down automaton")
    table = B.rule_table()

    @lru_cache(maxsize=None)
    def gen(state: str, n: int) -> tuple[Tree, ...]:
        out = []
        for (q, sym), options in table.items():
            if q != state:
                continue
            (kids,) = options
            if not kids:
                if n == 1:
                    out.append(Tree(sym))
                continue
            for sizes in _compositions(n - 1, len(kids)):
                pools = [gen(c, s) for c, s in zip(kids, sizes)]
                out.extend(Tree(sym, combo) for combo in itertools.product(*pools))
        return tuple(out)

    (root,) = B.initials
    return [t for n in range(1, max_size + 1) for t in gen(root, n)]


def max_violation_count(A: BottomUpAutomaton, marked, max_size: int) -> int:
    """Largest number of ``marked`` transitions in one accepting run on a tree of size <= max_size.

    Dynamic programming over runs: best[q][n] is the maximum over trees of size
    n reaching q. Returns -1 when nothing of that size is accepted.
    """
    marked = set(marked)
    best: dict[tuple[str, int], int] = {}
    for n in range(1, max_size + 1):
        for t in A.transitions:
            k = len(t.args)
            if k == 0:
                if n != 1:
                    continue
                value = int(t in marked)
            else:
                value = -1
                for sizes in _compositions(n - 1, k):
                    parts = [best.get((q, s), -1) for q, s in zip(t.args, sizes)]
                    if min(parts) >= 0:
                        value = max(value, sum(parts) + int(t in marked))
            if value >= 0 and value > best.get((t.target, n), -1):
                best[(t.target, n)] = value
    return max((v for (q, _), v in best.items() if q in A.finals), default=-1)
