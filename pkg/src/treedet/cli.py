"""Command-line entry point: ``treedet <command> ...``.

Exit codes: 0 affirmative, 1 negative decision, 2 usage or input error,
3 internal guard (caps, failed construction checks).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from treedet import io
from treedet.analyze import ViolationReport, canonical, decide_dta
from treedet.construct import ConstructionError, ViolationPresent, build_dta
from treedet.core import AlphabetError, AutomatonError, BottomUpAutomaton, accepts, correspond_inv
from treedet.fudt import (
    DecompositionTooLarge,
    NotFUDTError,
    build_violation_grammar,
    decide_fudt,
    decompose,
)
from treedet.minimize import StateCapExceeded
from treedet.oracle import bounded_equivalence, bounded_exchange, bounded_path_closed

OK, NEGATIVE, USAGE, GUARD = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def _bottom_up(path: str) -> tuple[str, BottomUpAutomaton]:
    doc = io.load_automaton(path)
    A = doc.automaton
    if doc.kind == "topdown":
        A = correspond_inv(A)
    return doc.name, A


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_minimize(args) -> int:
    name, A = _bottom_up(args.input)
    _write(io.render_automaton(canonical(A), name), args.output)
    return OK


def cmd_decide(args) -> int:
    _, A = _bottom_up(args.input)
    if args.question == "dta":
        verdict = decide_dta(A)
        print("YES" if verdict else "NO")
        if args.explain:
            reports = {r.group: r for r in verdict.violations}
            for g in verdict.groups:
                print(reports.get(g, ViolationReport(g)).explain())
            for r in verdict.violations:
                if r.group not in verdict.groups:
                    print(r.explain())
        return OK if verdict else NEGATIVE
    verdict = decide_fudt(A)
    print("YES" if verdict else "NO")
    if args.explain:
        sys.stdout.write(io.render_grammar(verdict.grammar))
        print(verdict.finiteness.explain())
    return OK if verdict else NEGATIVE


def cmd_to_dta(args) -> int:
    name, A = _bottom_up(args.input)
    try:
        built = build_dta(A)
    except ViolationPresent as exc:
        print(f"not top-down deterministic: {exc}", file=sys.stderr)
        return NEGATIVE
    Path(args.output).write_text(io.render_automaton(built.dta, name), encoding="utf-8")
    if built.method != "elimination":
        print(f"elimination stalled ({built.note}); wrote the position-set automaton",
              file=sys.stderr)
    if args.trace:
        sys.stdout.write(io.render_trace(built.trace))
    return OK


def cmd_decompose(args) -> int:
    _, A = _bottom_up(args.input)
    try:
        D = decompose(A, cap=args.cap)
    except NotFUDTError as exc:
        print(f"not a finite union of DTA languages: {exc}", file=sys.stderr)
        return NEGATIVE
    io.render_decomposition(D, args.output)
    print(f"{len(D)} components written to {args.output}")
    return OK


def cmd_grammar(args) -> int:
    _, A = _bottom_up(args.input)
    _write(io.render_grammar(build_violation_grammar(canonical(A))), args.output)
    return OK


def cmd_member(args) -> int:
    _, A = _bottom_up(args.input)
    t = io.parse_term(args.term, A.alphabet)
    ok = accepts(A, t)
    print("YES" if ok else "NO")
    return OK if ok else NEGATIVE


def cmd_equiv(args) -> int:
    _, A = _bottom_up(args.first)
    _, B = _bottom_up(args.second)
    verdict = bounded_equivalence(A, B, args.max_size)
    if verdict:
        print(f"EQUAL up to size {args.max_size}")
        return OK
    print(f"DIFFERENT on {verdict.tree}")
    return NEGATIVE


def cmd_oracle(args) -> int:
    _, A = _bottom_up(args.input)
    if args.check == "path-closed":
        verdict = bounded_path_closed(A, args.max_size)
        if verdict:
            print(f"CLOSED up to size {args.max_size}")
            return OK
        print(f"NOT CLOSED: {verdict.counterexample} has only paths of the language")
        return NEGATIVE
    verdict = bounded_exchange(A, args.max_size)
    if verdict:
        print(f"HOLDS up to size {args.max_size}")
        return OK
    c = verdict.counterexample
    print(f"FAILS: {c.tree} and {c.other} accepted, {c.mixed} rejected "
          f"(node {'.'.join(map(str, c.address)) or 'ε'}, child {c.position})")
    return NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treedet", description="Top-down determinism of regular tree languages.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("minimize", help="minimal deterministic bottom-up automaton")
    s.add_argument("input")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("decide", help="decide dta or fudt membership")
    s.add_argument("question", choices=["dta", "fudt"])
    s.add_argument("input")
    s.add_argument("--explain", action="store_true")
    s.set_defaults(func=cmd_decide)

    s = sub.add_parser("to-dta", help="construct an equivalent deterministic top-down automaton")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_to_dta)

    s = sub.add_parser("decompose", help="write a finite union of DTAs")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--cap", type=int, default=None)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("grammar", help="print the violation grammar")
    s.add_argument("input")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_grammar)

    s = sub.add_parser("member", help="membership of a term")
    s.add_argument("input")
    s.add_argument("term")
    s.set_defaults(func=cmd_member)

    s = sub.add_parser("equiv", help="bounded language equivalence")
    s.add_argument("first")
    s.add_argument("second")
    s.add_argument("--max-size", type=int, required=True)
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("oracle", help="brute-force property checks")
    s.add_argument("check", choices=["path-closed", "exchange"])
    s.add_argument("input")
    s.add_argument("--max-size", type=int, required=True)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (io.FormatError, AlphabetError, AutomatonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (StateCapExceeded, DecompositionTooLarge, ConstructionError) as exc:
        print(f"guard: {exc}", file=sys.stderr)
        return GUARD


if __name__ == "__main__":
    sys.exit(main())
