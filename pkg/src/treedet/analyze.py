"""Conflux groups, violations and the top-down determinism decision."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from treedet.core import BottomUpAutomaton, FreshNames, Transition
from treedet.minimize import MinimalDBA, StateCapExceeded, determinize, minimize, state_cap

ROOT_PREFIX = "_top"


@dataclass(frozen=True, order=True)
class ConfluxGroup:
    symbol: str
    target: str
    lhs_tuples: frozenset[tuple[str, ...]] = field(compare=False)

    @property
    def rank(self) -> int:
        return len(next(iter(self.lhs_tuples)))

    def transitions(self) -> list[Transition]:
        return [Transition(self.symbol, args, self.target) for args in sorted(self.lhs_tuples)]

    def projections(self) -> list[set[str]]:
        return [{args[j] for args in self.lhs_tuples} for j in range(self.rank)]

    def __str__(self) -> str:
        return f"({self.symbol},{self.target})"


@dataclass(frozen=True, order=True)
class PositionGroup:
    """All transitions of ``symbol`` into a set of states that share tree positions.

    ``states`` is the set of classes whose trees occur at one position of
    the language, read top-down from the final states. For a singleton set
    this is an ordinary group (possibly of one transition).
    """

    symbol: str
    states: tuple[str, ...]
    members: frozenset[Transition] = field(compare=False)

    @property
    def lhs_tuples(self) -> frozenset[tuple[str, ...]]:
        return frozenset(t.args for t in self.members)

    @property
    def target(self) -> str:
        return "{" + ",".join(self.states) + "}"

    @property
    def rank(self) -> int:
        return len(next(iter(self.members)).args)

    def transitions(self) -> list[Transition]:
        return sorted(self.members)

    def projections(self) -> list[set[str]]:
        return [{t.args[j] for t in self.members} for j in range(self.rank)]

    def __str__(self) -> str:
        return f"({self.symbol},{self.target})"


@dataclass(frozen=True)
class ViolationReport:
    group: ConfluxGroup
    witness: tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]] | None = None

    @property
    def violating(self) -> bool:
        return self.witness is not None

    def explain(self) -> str:
        g = self.group
        if not self.violating:
            return f"group {g}: {len(g.lhs_tuples)} transitions, closed under mixing"
        first, second, missing = self.witness
        arrow = "into" if isinstance(g, PositionGroup) else "->"
        return (
            f"group {g}: {len(g.lhs_tuples)} transitions; "
            f"{g.symbol}({','.join(first)}) and {g.symbol}({','.join(second)}) "
            f"lack the mixture {g.symbol}({','.join(missing)}) {arrow} {g.target}"
        )


def conflux_groups(A: BottomUpAutomaton) -> list[ConfluxGroup]:
    """Maximal same-symbol, same-target transition sets of size >= 2, sorted."""
    buckets: dict[tuple[str, str], set[tuple[str, ...]]] = {}
    for t in A.transitions:
        buckets.setdefault((t.symbol, t.target), set()).add(t.args)
    groups = []
    for (sym, target), tuples in sorted(buckets.items()):
        if len(tuples) >= 2:
            assert A.alphabet.rank(sym) > 0, "rank-0 transitions cannot form a conflux"
            groups.append(ConfluxGroup(sym, target, frozenset(tuples)))
    return groups


def mixtures(first: tuple[str, ...], second: tuple[str, ...]):
    """All tuples picking each position from one of the two."""
    return itertools.product(*({a, b} for a, b in zip(first, second)))


def pairwise_violation(group: ConfluxGroup):
    """Literal definition: the least missing mixture over all pairs, or None."""
    tuples = sorted(group.lhs_tuples)
    best = None
    for first, second in itertools.combinations(tuples, 2):
        for mixed in mixtures(first, second):
            if mixed not in group.lhs_tuples:
                cand = (mixed, first, second)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return None
    mixed, first, second = best
    return first, second, mixed


def product_closed(group: ConfluxGroup) -> bool:
    """Violation-free iff the tuples are the product of their projections."""
    return len(group.lhs_tuples) == math.prod(len(p) for p in group.projections())


def is_violation(group: ConfluxGroup, M: BottomUpAutomaton | None = None) -> ViolationReport:
    if M is not None:
        present = {t.args for t in M.transitions if (t.symbol, t.target) == (group.symbol, group.target)}
        if present != set(group.lhs_tuples):
            raise ValueError(f"{group} is not a maximal group of the automaton")
    if product_closed(group):
        return ViolationReport(group)
    witness = pairwise_violation(group)
    assert witness is not None
    return ViolationReport(group, witness)


def violations(A: BottomUpAutomaton) -> list[ViolationReport]:
    return [r for r in (is_violation(g) for g in conflux_groups(A)) if r.violating]


def rooted(M: BottomUpAutomaton) -> BottomUpAutomaton:
    """Single-final form of ``M``.

    With two or more final states a fresh root state receives a copy of every
    transition into a final state and becomes the only final state. The root
    then exposes the exchange constraints between trees accepted in different
    final classes as an ordinary conflux group.
    """
    if len(M.finals) <= 1:
        return M
    top = FreshNames(M.states, ROOT_PREFIX)()
    extra = {Transition(t.symbol, t.args, top) for t in M.transitions if t.target in M.finals}
    return BottomUpAutomaton(
        M.alphabet, M.states | {top}, frozenset({top}), M.transitions | extra
    )


def canonical(A: BottomUpAutomaton, cap: int | None = None) -> MinimalDBA:
    """Minimal DBA of any input, determinizing first when needed."""
    if isinstance(A, MinimalDBA):
        return A
    if not A.is_deterministic:
        A = determinize(A, cap)
    return minimize(A)


@dataclass(frozen=True)
class DtaVerdict:
    """``violations`` holds the conflux-group violations of the rooted minimal
    automaton, or, when there are none, the violations at shared positions."""

    is_dta: bool
    violations: list[ViolationReport]
    minimal: MinimalDBA
    rooted: BottomUpAutomaton
    groups: list[ConfluxGroup]
    positions: list[PositionGroup] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.is_dta


def position_groups(M: BottomUpAutomaton, cap: int | None = None) -> list[PositionGroup]:
    """Groups for every set of classes reachable top-down from the final states.

    Starting from the finals, a set S and a symbol f give the transitions of
    f into S; their per-position projections are the sets reached below.
    The language is top-down deterministic iff every such group is closed
    under mixing: a passing check makes the sets the states of a DTA, and a
    failing one puts a missing tree in the path closure.
    """
    if not M.finals:
        return []
    cap = state_cap() if cap is None else cap
    by_symbol = M.by_symbol()
    start = tuple(sorted(M.finals))
    seen = {start}
    queue = [start]
    groups: list[PositionGroup] = []
    for S in queue:
        members_of = set(S)
        for f in sorted(by_symbol):
            members = frozenset(t for t in by_symbol[f] if t.target in members_of)
            if not members:
                continue
            g = PositionGroup(f, S, members)
            groups.append(g)
            for proj in g.projections():
                key = tuple(sorted(proj))
                if key not in seen:
                    seen.add(key)
                    queue.append(key)
                    if len(seen) > cap:
                        raise StateCapExceeded(f"more than {cap} position sets")
    return groups


def decide_dta(A: BottomUpAutomaton, cap: int | None = None) -> DtaVerdict:
    """Minimize, check conflux groups, then check the groups at shared positions."""
    M = canonical(A, cap)
    R = rooted(M)
    groups = conflux_groups(R)
    reports = [r for r in (is_violation(g) for g in groups) if r.violating]
    positions = position_groups(M, cap)
    if not reports:
        # a conflux violation implies a violation at some position set, so
        # position sets are only reported when the conflux groups look clean
        reports = [
            r for r in (is_violation(g) for g in positions)
            if r.violating and len(r.group.states) > 1
        ]
    return DtaVerdict(not reports, reports, M, R, groups, positions)
