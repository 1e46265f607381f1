"""Conflux elimination and reversal into a deterministic top-down automaton."""

from __future__ import annotations

from dataclasses import dataclass, field

from treedet.analyze import (
    ConfluxGroup,
    conflux_groups,
    decide_dta,
    position_groups,
    violations,
)
from treedet.core import (
    BottomUpAutomaton,
    FreshNames,
    TopDownAutomaton,
    Transition,
    Rule,
    correspond,
    correspond_inv,
    is_top_down_deterministic,
)
from treedet.minimize import equivalent, subset_name

DEFAULT_CHECK_SIZE = 8


class ViolationPresent(ValueError):
    """The language is not top-down deterministic."""


class ConstructionError(RuntimeError):
    """A construction invariant failed (bounded check, leftover conflux, ...)."""


@dataclass(frozen=True)
class EliminationStep:
    group: ConfluxGroup
    fresh: tuple[str, ...]
    substitute: Transition
    adapters: tuple[Transition, ...]
    phase: int
    result: BottomUpAutomaton = field(repr=False, compare=False)


@dataclass(frozen=True)
class EliminationTrace:
    steps: tuple[EliminationStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def phase(self, n: int) -> list[EliminationStep]:
        return [s for s in self.steps if s.phase == n]


def eliminate_conflux_group(
    A: BottomUpAutomaton, g: ConfluxGroup, fresh: FreshNames | None = None, phase: int = 1
) -> tuple[BottomUpAutomaton, EliminationStep]:
    """Replace one conflux group by a substitute transition over fresh states.

    Order matters: the group is removed and the substitute added before the
    adapter copies are computed, so a member reading its own target q yields
    the adapter ``f(p1..pk) -> pj``.
    """
    current = {t.args for t in A.transitions if (t.symbol, t.target) == (g.symbol, g.target)}
    if len(g.lhs_tuples) < 2 or current != set(g.lhs_tuples):
        raise ValueError(f"{g} is not a conflux group of the automaton")
    fresh = fresh or FreshNames(A.states)
    ps = tuple(fresh() for _ in range(g.rank))

    trs = set(A.transitions) - set(g.transitions())
    substitute = Transition(g.symbol, ps, g.target)
    trs.add(substitute)

    feeds: dict[str, list[str]] = {}
    for args in g.lhs_tuples:
        for j, q in enumerate(args):
            if ps[j] not in feeds.setdefault(q, []):
                feeds[q].append(ps[j])
    adapters = sorted(
        {Transition(t.symbol, t.args, p) for t in trs for p in feeds.get(t.target, ())}
    )
    trs.update(adapters)

    result = BottomUpAutomaton(A.alphabet, A.states | set(ps), A.finals, frozenset(trs))
    return result, EliminationStep(g, ps, substitute, tuple(adapters), phase, result)


def eliminate_all(
    A: BottomUpAutomaton,
    require_violation_free: bool = True,
    check_size: int | None = DEFAULT_CHECK_SIZE,
) -> tuple[BottomUpAutomaton, EliminationTrace]:
    """Remove every conflux group: originals first, then the copies they spawned.

    With ``check_size`` set, each step is compared against the input on all
    trees up to that size and a ConstructionError is raised on any difference.
    """
    if require_violation_free:
        found = violations(A)
        if found:
            raise ViolationPresent("; ".join(r.explain() for r in found))

    from treedet.oracle import bounded_equivalence

    fresh = FreshNames(A.states)
    steps: list[EliminationStep] = []

    def checked(B: BottomUpAutomaton, step: EliminationStep) -> BottomUpAutomaton:
        steps.append(step)
        if check_size is not None:
            verdict = bounded_equivalence(A, B, check_size)
            if not verdict.equal:
                raise ConstructionError(
                    f"elimination of {step.group} changed the language: {verdict.tree}"
                )
        return B

    current = A
    for g in conflux_groups(A):
        current = checked(*eliminate_conflux_group(current, g, fresh, phase=1))

    remaining = conflux_groups(current)
    budget = len(remaining)
    while remaining:
        before = len(remaining)
        current = checked(*eliminate_conflux_group(current, remaining[0], fresh, phase=2))
        remaining = conflux_groups(current)
        if len(remaining) >= before:
            raise ConstructionError("conflux count did not decrease after the original groups")
    if len([s for s in steps if s.phase == 2]) > budget:
        raise ConstructionError("more copy eliminations than copies")
    return current, EliminationTrace(tuple(steps))


def to_dta(A: BottomUpAutomaton) -> TopDownAutomaton:
    """Reverse a conflux-free automaton with at most one final state."""
    if conflux_groups(A):
        raise ConstructionError("automaton still has conflux groups")
    if len(A.finals) > 1:
        raise ConstructionError(
            f"{len(A.finals)} final states; reverse the rooted automaton instead"
        )
    if not A.finals:
        top = FreshNames(A.states, "_top")()
        return TopDownAutomaton(A.alphabet, frozenset({top}), frozenset({top}), frozenset())
    B = correspond(A)
    if not is_top_down_deterministic(B):
        raise ConstructionError("reversal is not deterministic")
    return B


def position_dta(M: BottomUpAutomaton, cap: int | None = None) -> TopDownAutomaton:
    """DTA whose states are the sets of classes met at one position.

    Only meaningful when every position group is closed under mixing; the
    caller checks that (``decide_dta``) and the result is verified anyway.
    """
    if not M.finals:
        return to_dta(M)
    start = subset_name(M.finals)
    states, rules = {start}, set()
    for g in position_groups(M, cap):
        kids = tuple(subset_name(p) for p in g.projections())
        states.update(kids)
        rules.add(Rule(subset_name(g.states), g.symbol, kids))
    return TopDownAutomaton(M.alphabet, frozenset(states), frozenset({start}), frozenset(rules))


@dataclass(frozen=True)
class DtaConstruction:
    dta: TopDownAutomaton
    minimal: BottomUpAutomaton
    rooted: BottomUpAutomaton
    conflux_free: BottomUpAutomaton
    trace: EliminationTrace
    method: str = "elimination"   # or "positions" when elimination stalls
    note: str = ""


def build_dta(
    A: BottomUpAutomaton, cap: int | None = None, check_size: int | None = DEFAULT_CHECK_SIZE
) -> DtaConstruction:
    """Full pipeline: minimize, decide, eliminate confluxes, reverse.

    Copy groups can regenerate forever on some deterministic languages; the
    elimination then stops with a ConstructionError and the position-set
    automaton is returned instead. Either result is checked for exact
    equivalence with the minimal automaton.
    """
    verdict = decide_dta(A, cap)
    if not verdict:
        raise ViolationPresent("; ".join(r.explain() for r in verdict.violations))
    M, R = verdict.minimal, verdict.rooted
    try:
        free, trace = eliminate_all(R, require_violation_free=False, check_size=check_size)
        built = DtaConstruction(to_dta(free), M, R, free, trace)
    except ConstructionError as exc:
        dta = position_dta(M, cap)
        built = DtaConstruction(
            dta, M, R, correspond_inv(dta), EliminationTrace(), "positions", str(exc)
        )
    if not is_top_down_deterministic(built.dta):
        raise ConstructionError("result is not deterministic")
    if not equivalent(correspond_inv(built.dta), M, cap):
        raise ConstructionError(f"{built.method} result is not equivalent to the input")
    return built
