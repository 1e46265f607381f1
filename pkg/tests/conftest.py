import itertools
import random

import pytest

from treedet import fixtures
from treedet.core import BottomUpAutomaton
from treedet.minimize import trim


def random_alphabet(rng: random.Random, max_symbols: int = 2, max_rank: int = 2) -> dict[str, int]:
    """Up to ``max_symbols`` symbols, always with at least one leaf symbol."""
    n = rng.randint(1, max_symbols)
    ranks = [0] + [rng.randint(0, max_rank) for _ in range(n - 1)]
    rng.shuffle(ranks)
    return {name: k for name, k in zip("abcdefgh", ranks)}


def random_dba(rng: random.Random, max_states: int = 4, max_symbols: int = 2,
               max_rank: int = 2, density: float = 0.5, trimmed: bool = True) -> BottomUpAutomaton:
    """A random deterministic bottom-up automaton, trimmed unless asked otherwise.

    Retries until the trimmed automaton is non-empty.
    """
    while True:
        alphabet = random_alphabet(rng, max_symbols, max_rank)
        states = [f"q{i}" for i in range(rng.randint(1, max_states))]
        trs = []
        for sym, k in alphabet.items():
            for args in itertools.product(states, repeat=k):
                if k == 0 or rng.random() < density:
                    trs.append((sym, args, rng.choice(states)))
        finals = {s for s in states if rng.random() < 0.4} or {rng.choice(states)}
        A = BottomUpAutomaton.build(alphabet, trs, finals, states)
        if not trimmed:
            return A
        T = trim(A)
        if T.finals:
            return T


@pytest.fixture
def rng():
    return random.Random(20261015)


@pytest.fixture(params=sorted(fixtures.ALL))
def fixture_automaton(request):
    return request.param, fixtures.ALL[request.param]()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results.values():
            terminalreporter.write_line(line)
