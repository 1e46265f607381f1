"""Ranked alphabets, trees, contexts and tree automata in both directions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

Address = tuple[int, ...]
HOLE = "□"


class AlphabetError(ValueError):
    """A tree or transition does not fit the ranked alphabet."""


class AutomatonError(ValueError):
    """Structurally invalid automaton."""


class NotDeterministicError(ValueError):
    pass


class RunRejected(Exception):
    """No transition applies at ``address`` (first failure in post-order)."""

    def __init__(self, address: Address):
        super().__init__(f"no applicable transition at {format_address(address)}")
        self.address = address


def format_address(address: Address) -> str:
    return ".".join(map(str, address)) if address else "ε"


# --------------------------------------------------------------------------
# alphabets and trees
# --------------------------------------------------------------------------


class RankedAlphabet:
    """Symbol names with fixed ranks; immutable."""

    __slots__ = ("ranks",)

    def __init__(self, ranks: Mapping[str, int] | Iterable[tuple[str, int]]):
        items = dict(ranks.items() if isinstance(ranks, Mapping) else ranks)
        for name, rank in items.items():
            if not isinstance(rank, int) or rank < 0:
                raise AlphabetError(f"bad rank for {name!r}: {rank!r}")
        object.__setattr__(self, "ranks", dict(sorted(items.items())))

    def __setattr__(self, name, value):
        raise AttributeError("RankedAlphabet is immutable")

    def __repr__(self) -> str:
        return f"RankedAlphabet({self.ranks!r})"

    def __hash__(self) -> int:
        return hash(tuple(self.ranks.items()))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RankedAlphabet) and self.ranks == other.ranks

    def __contains__(self, name: object) -> bool:
        return name in self.ranks

    def __iter__(self) -> Iterator[str]:
        return iter(self.ranks)

    def __len__(self) -> int:
        return len(self.ranks)

    def rank(self, name: str) -> int:
        try:
            return self.ranks[name]
        except KeyError:
            raise AlphabetError(f"unknown symbol {name!r}") from None

    def of_rank(self, k: int) -> list[str]:
        return [s for s, r in self.ranks.items() if r == k]

    @property
    def symbols(self) -> frozenset[tuple[str, int]]:
        return frozenset(self.ranks.items())

    @property
    def max_rank(self) -> int:
        return max(self.ranks.values(), default=0)

    def with_hole(self) -> "RankedAlphabet":
        return RankedAlphabet({**self.ranks, HOLE: 0})


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple["Tree", ...] = ()

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    def __str__(self) -> str:
        if not self.children:
            return self.label
        return f"{self.label}({','.join(map(str, self.children))})"

    def __repr__(self) -> str:
        return f"Tree<{self}>"

    @property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    @property
    def height(self) -> int:
        return 1 + max((c.height for c in self.children), default=0)

    def addresses(self) -> list[Address]:
        """N(t) in pre-order; the root is the empty tuple."""
        out: list[Address] = [()]
        for i, child in enumerate(self.children, 1):
            out.extend((i,) + a for a in child.addresses())
        return out

    def postorder(self) -> list[Address]:
        out: list[Address] = []
        for i, child in enumerate(self.children, 1):
            out.extend((i,) + a for a in child.postorder())
        out.append(())
        return out

    def subtree(self, address: Address) -> "Tree":
        node = self
        for i in address:
            if not 1 <= i <= len(node.children):
                raise KeyError(format_address(address))
            node = node.children[i - 1]
        return node

    def replace(self, address: Address, new: "Tree") -> "Tree":
        if not address:
            return new
        i, rest = address[0], address[1:]
        if not 1 <= i <= len(self.children):
            raise KeyError(format_address(address))
        kids = list(self.children)
        kids[i - 1] = kids[i - 1].replace(rest, new)
        return Tree(self.label, tuple(kids))

    def leaves(self) -> int:
        return 1 if not self.children else sum(c.leaves() for c in self.children)

    def check(self, alphabet: RankedAlphabet) -> None:
        rank = alphabet.rank(self.label)
        if rank != len(self.children):
            raise AlphabetError(
                f"symbol {self.label!r} has rank {rank} but {len(self.children)} children"
            )
        for child in self.children:
            child.check(alphabet)

    def sort_key(self) -> tuple:
        """Fixed term order: size first, then label, then children."""
        return (self.size, self.label, tuple(c.sort_key() for c in self.children))


def leaf(name: str) -> Tree:
    return Tree(name)


@dataclass(frozen=True)
class Context:
    """A tree with exactly one hole leaf."""

    tree: Tree

    def __post_init__(self):
        holes = [a for a in self.tree.addresses() if self.tree.subtree(a).label == HOLE]
        if len(holes) != 1:
            raise AlphabetError(f"a context needs exactly one hole, found {len(holes)}")
        object.__setattr__(self, "_hole", holes[0])

    @property
    def hole(self) -> Address:
        return self._hole  # type: ignore[attr-defined]

    def plug(self, t: Tree) -> Tree:
        return self.tree.replace(self.hole, t)

    @classmethod
    def around(cls, t: Tree, address: Address) -> "Context":
        return cls(t.replace(address, Tree(HOLE)))

    def __str__(self) -> str:
        return str(self.tree)


# --------------------------------------------------------------------------
# automata
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Transition:
    """Bottom-up transition ``symbol(args) -> target``."""

    symbol: str
    args: tuple[str, ...]
    target: str

    def __str__(self) -> str:
        lhs = self.symbol if not self.args else f"{self.symbol}({','.join(self.args)})"
        return f"{lhs} -> {self.target}"


@dataclass(frozen=True, order=True)
class Rule:
    """Top-down rule ``state(symbol) -> (children)``."""

    state: str
    symbol: str
    children: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.state}({self.symbol}) -> ({','.join(self.children)})"


def _check_symbol(alphabet: RankedAlphabet, symbol: str, arity: int) -> None:
    if alphabet.rank(symbol) != arity:
        raise AlphabetError(
            f"symbol {symbol!r} has rank {alphabet.rank(symbol)}, used with {arity} states"
        )


@dataclass(frozen=True)
class BottomUpAutomaton:
    alphabet: RankedAlphabet
    states: frozenset[str]
    finals: frozenset[str]
    transitions: frozenset[Transition]

    def __post_init__(self):
        for name in ("states", "finals", "transitions"):
            value = getattr(self, name)
            if not isinstance(value, frozenset):
                object.__setattr__(self, name, frozenset(value))
        unknown = self.finals - self.states
        if unknown:
            raise AutomatonError(f"final states not declared: {sorted(unknown)}")
        for tr in self.transitions:
            _check_symbol(self.alphabet, tr.symbol, len(tr.args))
            for q in (*tr.args, tr.target):
                if q not in self.states:
                    raise AutomatonError(f"undeclared state {q!r} in {tr}")

    @classmethod
    def build(
        cls,
        alphabet: RankedAlphabet | Mapping[str, int],
        transitions: Iterable[Transition | tuple],
        finals: Iterable[str],
        states: Iterable[str] | None = None,
    ) -> "BottomUpAutomaton":
        """Convenience constructor; states default to those mentioned."""
        if not isinstance(alphabet, RankedAlphabet):
            alphabet = RankedAlphabet(alphabet)
        trs = frozenset(
            t if isinstance(t, Transition) else Transition(t[0], tuple(t[1]), t[2])
            for t in transitions
        )
        finals = frozenset(finals)
        if states is None:
            mentioned = set(finals)
            for t in trs:
                mentioned.update(t.args)
                mentioned.add(t.target)
            states = mentioned
        return cls(alphabet, frozenset(states), finals, trs)

    @property
    def is_deterministic(self) -> bool:
        seen = set()
        for t in self.transitions:
            key = (t.symbol, t.args)
            if key in seen:
                return False
            seen.add(key)
        return True

    def restrict_finals(self, finals: Iterable[str]) -> "BottomUpAutomaton":
        """A_q for a single state, or any other choice of final states."""
        return BottomUpAutomaton(self.alphabet, self.states, frozenset(finals), self.transitions)

    def by_symbol(self) -> dict[str, list[Transition]]:
        table: dict[str, list[Transition]] = {s: [] for s in self.alphabet}
        for t in self.transitions:
            table[t.symbol].append(t)
        return table

    def lookup(self) -> dict[tuple[str, tuple[str, ...]], list[str]]:
        table: dict[tuple[str, tuple[str, ...]], list[str]] = {}
        for t in self.transitions:
            table.setdefault((t.symbol, t.args), []).append(t.target)
        return table

    def __str__(self) -> str:
        lines = [str(t) for t in sorted(self.transitions)]
        return "\n".join(lines + [f"final {' '.join(sorted(self.finals))}"])


@dataclass(frozen=True)
class TopDownAutomaton:
    alphabet: RankedAlphabet
    states: frozenset[str]
    initials: frozenset[str]
    rules: frozenset[Rule]

    def __post_init__(self):
        for name in ("states", "initials", "rules"):
            value = getattr(self, name)
            if not isinstance(value, frozenset):
                object.__setattr__(self, name, frozenset(value))
        unknown = self.initials - self.states
        if unknown:
            raise AutomatonError(f"initial states not declared: {sorted(unknown)}")
        for r in self.rules:
            _check_symbol(self.alphabet, r.symbol, len(r.children))
            for q in (r.state, *r.children):
                if q not in self.states:
                    raise AutomatonError(f"undeclared state {q!r} in {r}")

    def rule_table(self) -> dict[tuple[str, str], list[tuple[str, ...]]]:
        table: dict[tuple[str, str], list[tuple[str, ...]]] = {}
        for r in self.rules:
            table.setdefault((r.state, r.symbol), []).append(r.children)
        return table


@dataclass(frozen=True)
class Run:
    """State labelling of every node of ``tree``."""

    tree: Tree
    states: Mapping[Address, str] = field(hash=False)

    @property
    def root(self) -> str:
        return self.states[()]

    def transition_at(self, address: Address) -> Transition:
        node = self.tree.subtree(address)
        args = tuple(self.states[address + (i,)] for i in range(1, len(node.children) + 1))
        return Transition(node.label, args, self.states[address])

    def transitions(self) -> list[Transition]:
        """tau(beta(u)) for every node, in pre-order."""
        return [self.transition_at(a) for a in self.tree.addresses()]


# --------------------------------------------------------------------------
# semantics
# --------------------------------------------------------------------------


def evaluate(A: BottomUpAutomaton, t: Tree) -> frozenset[str]:
    """All states some run of ``A`` assigns to the root of ``t``."""
    t.check(A.alphabet)
    return _evaluate(A.lookup(), A.by_symbol(), t)


def _evaluate(table, by_symbol, t: Tree) -> frozenset[str]:
    if not t.children:
        return frozenset(table.get((t.label, ()), ()))
    kids = [_evaluate(table, by_symbol, c) for c in t.children]
    if not all(kids):
        return frozenset()
    out = set()
    for tr in by_symbol[t.label]:
        if all(q in ks for q, ks in zip(tr.args, kids)):
            out.add(tr.target)
    return frozenset(out)


class Evaluator:
    """Reusable membership tester; caches the transition index of one automaton."""

    def __init__(self, A: BottomUpAutomaton):
        self.A = A
        self._table = A.lookup()
        self._by_symbol = A.by_symbol()

    def states_of(self, t: Tree) -> frozenset[str]:
        return _evaluate(self._table, self._by_symbol, t)

    def accepts(self, t: Tree) -> bool:
        return not self.states_of(t).isdisjoint(self.A.finals)


def accepts(A: BottomUpAutomaton, t: Tree) -> bool:
    return not evaluate(A, t).isdisjoint(A.finals)


def run_of(A: BottomUpAutomaton, t: Tree) -> Run:
    """The unique run of a deterministic automaton; raises RunRejected."""
    if not A.is_deterministic:
        raise NotDeterministicError("run_of needs a deterministic automaton")
    t.check(A.alphabet)
    table = A.lookup()
    states: dict[Address, str] = {}
    for address in t.postorder():
        node = t.subtree(address)
        args = tuple(states[address + (i,)] for i in range(1, len(node.children) + 1))
        targets = table.get((node.label, args))
        if not targets:
            raise RunRejected(address)
        states[address] = targets[0]
    return Run(t, states)


def runs(A: BottomUpAutomaton, t: Tree, roots: Iterable[str] | None = None) -> Iterator[Run]:
    """Every run of ``A`` on ``t`` whose root state lies in ``roots`` (default: finals)."""
    t.check(A.alphabet)
    roots = A.finals if roots is None else frozenset(roots)
    table = A.by_symbol()

    reach: dict[Address, frozenset[str]] = {}
    for address in t.postorder():
        node = t.subtree(address)
        kids = [reach[address + (i,)] for i in range(1, len(node.children) + 1)]
        reach[address] = frozenset(
            tr.target for tr in table[node.label] if all(q in k for q, k in zip(tr.args, kids))
        )

    def expand(address: Address, state: str) -> Iterator[dict[Address, str]]:
        node = t.subtree(address)
        for tr in sorted(table[node.label]):
            if tr.target != state:
                continue
            if not all(q in reach[address + (i,)] for i, q in enumerate(tr.args, 1)):
                continue
            parts = [list(expand(address + (i,), q)) for i, q in enumerate(tr.args, 1)]
            for combo in itertools.product(*parts):
                out = {address: state}
                for piece in combo:
                    out.update(piece)
                yield out

    for q in sorted(reach[()] & roots):
        for mapping in expand((), q):
            yield Run(t, mapping)


def correspond(A: BottomUpAutomaton) -> TopDownAutomaton:
    rules = frozenset(Rule(t.target, t.symbol, t.args) for t in A.transitions)
    return TopDownAutomaton(A.alphabet, A.states, A.finals, rules)


def correspond_inv(B: TopDownAutomaton) -> BottomUpAutomaton:
    trs = frozenset(Transition(r.symbol, r.children, r.state) for r in B.rules)
    return BottomUpAutomaton(B.alphabet, B.states, B.initials, trs)


def is_top_down_deterministic(B: TopDownAutomaton) -> bool:
    if len(B.initials) != 1:
        return False
    seen = set()
    for r in B.rules:
        if (r.state, r.symbol) in seen:
            return False
        seen.add((r.state, r.symbol))
    return True


def td_accepts(B: TopDownAutomaton, t: Tree) -> bool:
    """Top-down membership; equals ``accepts(correspond_inv(B), t)``."""
    t.check(B.alphabet)
    table = B.rule_table()

    def go(state: str, node: Tree) -> bool:
        for kids in table.get((state, node.label), ()):
            if all(go(q, c) for q, c in zip(kids, node.children)):
                return True
        return False

    return any(go(q, t) for q in B.initials)


class FreshNames:
    """Deterministic fresh-state supply: prefix plus a counter, skipping taken names."""

    def __init__(self, taken: Iterable[str], prefix: str = "p"):
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = 0

    def __call__(self) -> str:
        while True:
            self.counter += 1
            name = f"{self.prefix}{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name
