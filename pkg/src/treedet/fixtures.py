"""Small reference languages used in tests, the README and the CLI docs."""

from __future__ import annotations

from treedet.core import BottomUpAutomaton

ABF = {"a": 0, "b": 0, "f": 2}

_LEAVES = [("a", (), "qa"), ("b", (), "qb")]
_SWAP = [("f", ("qa", "qb"), "p"), ("f", ("qb", "qa"), "p")]


def f1() -> BottomUpAutomaton:
    """{f(a,b), f(b,a)}."""
    return BottomUpAutomaton.build(
        ABF,
        _LEAVES + [("f", ("qa", "qb"), "qf"), ("f", ("qb", "qa"), "qf")],
        finals={"qf"},
    )


def f2() -> BottomUpAutomaton:
    """{f(a,f(x,y)) | x, y in {a,b}}: top-down deterministic, with a conflux."""
    return BottomUpAutomaton.build(
        ABF,
        _LEAVES
        + [("f", args, "q") for args in [("qa", "qb"), ("qb", "qa"), ("qa", "qa"), ("qb", "qb")]]
        + [("f", ("qa", "q"), "qf")],
        finals={"qf"},
    )


def f3() -> BottomUpAutomaton:
    """The eight trees f(x, f(y, z)) with x, y, z in {f(a,b), f(b,a)}."""
    return BottomUpAutomaton.build(
        ABF,
        _LEAVES + _SWAP + [("f", ("p", "p"), "p'"), ("f", ("p", "p'"), "qf")],
        finals={"qf"},
    )


def f4(m: int) -> BottomUpAutomaton:
    """Right comb of depth m+1 whose m+2 left leaves are f(a,b) or f(b,a)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    trs = _LEAVES + _SWAP + [("f", ("p", "p"), "p1")]
    trs += [("f", ("p", f"p{i}"), f"p{i + 1}") for i in range(1, m)]
    trs += [("f", ("p", f"p{m}"), "qf")]
    return BottomUpAutomaton.build(ABF, trs, finals={"qf"})


def comb() -> BottomUpAutomaton:
    """Right combs of any depth >= 1 whose left children are f(a,b) or f(b,a)."""
    return BottomUpAutomaton.build(
        ABF,
        _LEAVES + _SWAP + [("f", ("p", "s"), "s"), ("f", ("p", "p"), "s")],
        finals={"s"},
    )


def singleton() -> BottomUpAutomaton:
    """{f(a,b)}."""
    return BottomUpAutomaton.build(ABF, _LEAVES + [("f", ("qa", "qb"), "qf")], finals={"qf"})


ALL = {"F1": f1, "F2": f2, "F3": f3, "comb": comb, "singleton": singleton}
