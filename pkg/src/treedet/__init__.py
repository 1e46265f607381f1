"""Deciding top-down determinism of regular tree languages."""

from treedet.analyze import ConfluxGroup, ViolationReport, conflux_groups, decide_dta, is_violation
from treedet.construct import build_dta, eliminate_all, eliminate_conflux_group, to_dta
from treedet.core import (
    BottomUpAutomaton,
    Context,
    RankedAlphabet,
    Run,
    TopDownAutomaton,
    Transition,
    Rule,
    Tree,
    accepts,
    correspond,
    correspond_inv,
    evaluate,
    is_top_down_deterministic,
    run_of,
)
from treedet.fudt import (
    build_violation_grammar,
    decide_fudt,
    decompose,
    enumerate_grammar_language,
    grammar_is_finite,
    violation_tree_of,
)
from treedet.minimize import MinimalDBA, determinize, minimize, trim

__version__ = "0.1.0"
