"""Trimming, subset construction and minimization of bottom-up automata."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

from treedet.core import (
    Address,
    BottomUpAutomaton,
    Context,
    HOLE,
    NotDeterministicError,
    Transition,
    Tree,
    evaluate,
    run_of,
)

DEFAULT_STATE_CAP = 10_000


class StateCapExceeded(RuntimeError):
    """Subset construction produced more states than allowed."""


def state_cap() -> int:
    return int(os.environ.get("TREEDET_CAP", DEFAULT_STATE_CAP))


class MinimalDBA(BottomUpAutomaton):
    """A bottom-up automaton produced by :func:`minimize`.

    The type itself is the certificate: instances are only created after
    partition refinement on a trimmed deterministic input.
    """

    certified = True


def productive_states(A: BottomUpAutomaton) -> set[str]:
    """States q with L(A_q) non-empty."""
    done: set[str] = set()
    changed = True
    while changed:
        changed = False
        for t in A.transitions:
            if t.target not in done and all(q in done for q in t.args):
                done.add(t.target)
                changed = True
    return done


def useful_states(A: BottomUpAutomaton, productive: set[str]) -> set[str]:
    """Productive states that occur in some accepting run."""
    useful = set(A.finals & productive)
    changed = True
    while changed:
        changed = False
        for t in A.transitions:
            if t.target in useful and all(q in productive for q in t.args):
                for q in t.args:
                    if q not in useful:
                        useful.add(q)
                        changed = True
    return useful


def trim(A: BottomUpAutomaton) -> BottomUpAutomaton:
    keep = useful_states(A, productive_states(A))
    trs = frozenset(
        t for t in A.transitions if t.target in keep and all(q in keep for q in t.args)
    )
    return BottomUpAutomaton(A.alphabet, frozenset(keep), A.finals & keep, trs)


def subset_name(states) -> str:
    return "|".join(sorted(states))


def determinize(A: BottomUpAutomaton, cap: int | None = None) -> BottomUpAutomaton:
    """Bottom-up subset construction over the reachable subsets only.

    A deterministic input comes back with the same states and transitions
    (restricted to productive states).
    """
    cap = state_cap() if cap is None else cap
    if A.is_deterministic:
        keep = productive_states(A)
        trs = frozenset(t for t in A.transitions if t.target in keep)
        return BottomUpAutomaton(A.alphabet, frozenset(keep), A.finals & keep, trs)

    by_symbol = A.by_symbol()
    subsets: list[frozenset[str]] = []
    index: dict[frozenset[str], int] = {}
    delta: dict[tuple[str, tuple[int, ...]], int] = {}

    def add(s: frozenset[str]) -> int:
        if s not in index:
            if len(subsets) >= cap:
                raise StateCapExceeded(f"subset construction exceeded {cap} states")
            index[s] = len(subsets)
            subsets.append(s)
        return index[s]

    for sym in A.alphabet.of_rank(0):
        targets = frozenset(t.target for t in by_symbol[sym])
        if targets:
            delta[(sym, ())] = add(targets)

    # masks[sym][(i, j)]: bitmask of the symbol's transitions whose j-th
    # argument lies in subset i
    ordered = {sym: sorted(trs) for sym, trs in by_symbol.items()}
    masks: dict[str, dict[tuple[int, int], int]] = {sym: {} for sym in ordered}

    def mask(sym: str, i: int, j: int) -> int:
        m = masks[sym].get((i, j))
        if m is None:
            s = subsets[i]
            m = 0
            for bit, t in enumerate(ordered[sym]):
                if t.args[j] in s:
                    m |= 1 << bit
            masks[sym][(i, j)] = m
        return m

    done_upto = 0
    while done_upto < len(subsets):
        frontier = len(subsets)
        for sym, trs in ordered.items():
            k = A.alphabet.rank(sym)
            if k == 0 or not trs:
                continue
            # only tuples that use at least one subset discovered in the last round
            for combo in itertools.product(range(frontier), repeat=k):
                if max(combo) < done_upto:
                    continue
                m = mask(sym, combo[0], 0)
                for j in range(1, k):
                    if not m:
                        break
                    m &= mask(sym, combo[j], j)
                if m:
                    targets = frozenset(t.target for bit, t in enumerate(trs) if m >> bit & 1)
                    delta[(sym, combo)] = add(targets)
        done_upto = frontier

    names = [subset_name(s) for s in subsets]
    trs_out = frozenset(
        Transition(sym, tuple(names[i] for i in combo), names[target])
        for (sym, combo), target in delta.items()
    )
    finals = frozenset(names[i] for i, s in enumerate(subsets) if s & A.finals)
    return BottomUpAutomaton(A.alphabet, frozenset(names), finals, trs_out)


def _refine(A: BottomUpAutomaton) -> dict[str, int]:
    """Coarsest congruence on a trimmed DBA that refines final/non-final.

    A missing transition leads to the implicit sink, which is its own class
    (every trimmed state has an accepting context, the sink has none).
    """
    occurrences: dict[str, list[tuple[str, int, tuple[str, ...], str]]] = {q: [] for q in A.states}
    for t in A.transitions:
        for i, q in enumerate(t.args):
            occurrences[q].append((t.symbol, i, t.args[:i] + t.args[i + 1:], t.target))

    block = {q: int(q in A.finals) for q in A.states}
    count = len(set(block.values()))
    while True:
        signatures: dict[tuple, int] = {}
        new_block = {}
        for q in sorted(A.states):
            sig = (
                block[q],
                frozenset((f, i, rest, block[target]) for f, i, rest, target in occurrences[q]),
            )
            new_block[q] = signatures.setdefault(sig, len(signatures))
        new_count = len(signatures)
        block = new_block
        if new_count == count:
            return block
        count = new_count


def minimal_trees(A: BottomUpAutomaton) -> dict[str, Tree]:
    """Least member of L(A_q) per productive state, under Tree.sort_key."""
    return _least_trees(A)[0]


def _least_trees(A: BottomUpAutomaton) -> tuple[dict[str, Tree], dict[str, tuple]]:
    best: dict[str, Tree] = {}
    keys: dict[str, tuple] = {}
    changed = True
    while changed:
        changed = False
        for t in A.transitions:
            if not all(q in best for q in t.args):
                continue
            kids = tuple(keys[q] for q in t.args)
            key = (1 + sum(k[0] for k in kids), t.symbol, kids)
            if t.target not in keys or key < keys[t.target]:
                best[t.target] = Tree(t.symbol, tuple(best[q] for q in t.args))
                keys[t.target] = key
                changed = True
    return best, keys


def minimize(A: BottomUpAutomaton) -> MinimalDBA:
    """The minimal deterministic bottom-up automaton of L(A), without sink.

    Each class is named after its member whose least accepted tree is
    smallest, so fixtures keep their state names and the result does not
    depend on iteration order.
    """
    if not A.is_deterministic:
        raise NotDeterministicError("minimize needs a deterministic automaton; determinize first")
    T = trim(A)
    if not T.finals:
        return MinimalDBA(A.alphabet, frozenset(), frozenset(), frozenset())
    block = _refine(T)
    _, witness = _least_trees(T)
    members: dict[int, list[str]] = {}
    for q, b in block.items():
        members.setdefault(b, []).append(q)
    rep = {}
    for qs in members.values():
        leader = min(qs, key=lambda q: (witness[q], q))
        for q in qs:
            rep[q] = leader
    trs = frozenset(
        Transition(t.symbol, tuple(rep[q] for q in t.args), rep[t.target]) for t in T.transitions
    )
    return MinimalDBA(
        A.alphabet,
        frozenset(rep.values()),
        frozenset(rep[q] for q in T.finals),
        trs,
    )


def minimal_contexts(A: BottomUpAutomaton) -> dict[str, Context]:
    """A context C per state q such that C[t] is accepted for every t reaching q."""
    trees = minimal_trees(A)
    best: dict[str, Context] = {q: Context(Tree(HOLE)) for q in sorted(A.finals) if q in trees}
    keys = {q: c.tree.sort_key() for q, c in best.items()}
    changed = True
    while changed:
        changed = False
        for t in sorted(A.transitions):
            if t.target not in best or not all(q in trees for q in t.args):
                continue
            for i, q in enumerate(t.args):
                kids = tuple(
                    Tree(HOLE) if j == i else trees[p] for j, p in enumerate(t.args)
                )
                cand = Context(best[t.target].plug(Tree(t.symbol, kids)))
                key = cand.tree.sort_key()
                if q not in keys or key < keys[q]:
                    best[q] = cand
                    keys[q] = key
                    changed = True
    return best


class CertificationError(AssertionError):
    """An automaton claimed to be minimal violates one of its properties."""


@dataclass(frozen=True)
class PropertyCertificate:
    """Constructive evidence for the three MDBA properties."""

    members: dict[str, Tree]
    usage: dict[Transition, tuple[Tree, Address]]
    unique_state: bool

    @property
    def ok(self) -> bool:
        return self.unique_state


def certify(M: BottomUpAutomaton) -> PropertyCertificate:
    """Exhibit a member tree per state and an accepting run per transition.

    Raises CertificationError if a state is empty or a transition is unused.
    """
    members = minimal_trees(M)
    missing = M.states - members.keys()
    if missing:
        raise CertificationError(f"states with empty language: {sorted(missing)}")
    contexts = minimal_contexts(M)
    usage: dict[Transition, tuple[Tree, Address]] = {}
    for t in sorted(M.transitions):
        if t.target not in contexts:
            raise CertificationError(f"transition {t} has no accepting context")
        ctx = contexts[t.target]
        tree = ctx.plug(Tree(t.symbol, tuple(members[q] for q in t.args)))
        run = run_of(M, tree)
        if run.root not in M.finals:
            raise CertificationError(f"witness for {t} is not accepted")
        if run.transition_at(ctx.hole) != t:
            raise CertificationError(f"witness for {t} uses another transition")
        usage[t] = (tree, ctx.hole)
    unique = all(evaluate(M, tree) == {q} for q, tree in members.items())
    return PropertyCertificate(members, usage, unique)


def isomorphic(A: BottomUpAutomaton, B: BottomUpAutomaton) -> bool:
    """Isomorphism test for small trimmed DBAs, matching states via least trees."""
    if len(A.states) != len(B.states) or len(A.transitions) != len(B.transitions):
        return False
    ta, tb = minimal_trees(A), minimal_trees(B)
    if len(ta) != len(A.states) or len(tb) != len(B.states):
        return A == B
    inv_b = {t: q for q, t in tb.items()}
    mapping = {}
    for q, t in ta.items():
        if t not in inv_b:
            return False
        mapping[q] = inv_b[t]
    renamed = {
        Transition(t.symbol, tuple(mapping[q] for q in t.args), mapping[t.target])
        for t in A.transitions
    }
    return renamed == set(B.transitions) and {mapping[q] for q in A.finals} == set(B.finals)


def equivalent(A: BottomUpAutomaton, B: BottomUpAutomaton, cap: int | None = None) -> bool:
    """Exact language equivalence: minimal automata are unique up to renaming."""
    if A.alphabet != B.alphabet:
        return False
    ma = minimize(A if A.is_deterministic else determinize(A, cap))
    mb = minimize(B if B.is_deterministic else determinize(B, cap))
    return isomorphic(ma, mb)


def rename_states(A: BottomUpAutomaton, mapping: dict[str, str]) -> BottomUpAutomaton:
    return BottomUpAutomaton(
        A.alphabet,
        frozenset(mapping[q] for q in A.states),
        frozenset(mapping[q] for q in A.finals),
        frozenset(
            Transition(t.symbol, tuple(mapping[q] for q in t.args), mapping[t.target])
            for t in A.transitions
        ),
    )
