"""Command-line front end.

Reports go to stdout as ``key=value`` lines (or the formats documented per
command); commentary goes to stderr.  Exit status is 0 on success, 1 on a
semantic negative (asymmetric circuit, disagreement, violations) and 2 on
usage or parse errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from typing import Sequence

from . import __version__
from .circuit import (
    BASES,
    BRUTE_FORCE_MAX_N,
    CircuitError,
    all_assignments,
    format_circuit,
    naive_evaluate,
    parse_assignment,
    parse_circuit,
    rigidify,
    validate,
)
from .foc import CompileOptions, FormulaError, compile_formula, parse_formula
from .perm import run_lemma_check
from .relstruct import StructureError, parse_structure
from .succinct import build_ev, extract_query, succinct_evaluate
from .symmetry import NotSymmetricError, analyze_symmetry, find_asymmetry, format_supports, support_report

log = logging.getLogger("symcirc")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_circuit(path: str):
    return parse_circuit(_read(path))


def _require_valid(c) -> None:
    errs = validate(c)
    if errs:
        raise UsageError("invalid circuit: " + "; ".join(errs))


def format_query(q: int, query) -> list[str]:
    if q == 0:
        return [f"result {'true' if query else 'false'}"]
    return [" ".join(map(str, t)) for t in sorted(query, key=lambda t: tuple(map(str, t)))]


# -- commands -----------------------------------------------------------------------


def cmd_validate(args) -> int:
    errs = validate(_load_circuit(args.circuit))
    if not errs:
        print("ok")
        return EXIT_OK
    for e in errs:
        print(f"violation {e}")
    return EXIT_NEGATIVE


def cmd_rigidify(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    _write(args.output, format_circuit(rigidify(c)))
    print(f"wrote={args.output}")
    return EXIT_OK


def cmd_check_sym(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    bad = find_asymmetry(rigidify(c))
    if bad is None:
        print("symmetric")
        return EXIT_OK
    print("not-symmetric")
    print(f"transposition=({bad[0]} {bad[1]})")
    return EXIT_NEGATIVE


def _analysis(c):
    rc = rigidify(c)
    if rc.gates != c.gates:
        print("note: circuit was rigidified before analysis", file=sys.stderr)
    return rc, analyze_symmetry(rc)


def cmd_supports(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    rc, analysis = _analysis(c)
    for line in format_supports(analysis):
        print(line)
    for line in support_report(rc, analysis, args.epsilon).lines():
        print(line)
    return EXIT_OK


def cmd_bound_report(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    rc, analysis = _analysis(c)
    rep = support_report(rc, analysis, args.epsilon)
    for line in rep.lines():
        print(line)
    if not rep.hypotheses_met:
        print("theorem hypotheses unmet at this n; bound is informational", file=sys.stderr)
    return EXIT_OK


def cmd_eval_naive(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    s = parse_structure(_read(args.structure))
    gamma = parse_assignment(_read(args.bijection))
    res = naive_evaluate(c, s, gamma)
    for line in format_query(c.q, res.query):
        print(line)
    return EXIT_OK


def cmd_eval(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    s = parse_structure(_read(args.structure))
    rc, analysis = _analysis(c)
    ev = build_ev(rc, s, analysis)
    if args.dump_ev:
        for line in ev.dump():
            print(line)
    for line in format_query(c.q, extract_query(rc, analysis, ev)):
        print(line)
    return EXIT_OK


def cmd_compile(args) -> int:
    text = _read(args.formula) if os.path.isfile(args.formula) else args.formula
    phi = parse_formula(text)
    c = compile_formula(phi, CompileOptions(args.n, args.basis, not args.no_share))
    _write(args.output, format_circuit(c))
    print(f"wrote={args.output}")
    print(f"gates={len(c.gates)}")
    print(f"q={c.q}")
    return EXIT_OK


def cmd_compare(args) -> int:
    c = _load_circuit(args.circuit)
    _require_valid(c)
    s = parse_structure(_read(args.structure))
    if c.n > BRUTE_FORCE_MAX_N - 1:
        raise UsageError(f"compare enumerates all bijections; n={c.n} exceeds 7")
    succinct = succinct_evaluate(c, s)
    disagreements = 0
    checked = 0
    for gamma in all_assignments(s):
        checked += 1
        if naive_evaluate(c, s, gamma).query != succinct:
            disagreements += 1
    print(f"bijections={checked}")
    print(f"disagreements={disagreements}")
    print("agree" if disagreements == 0 else "disagree")
    return EXIT_OK if disagreements == 0 else EXIT_NEGATIVE


def cmd_lemma_check(args) -> int:
    if not 0 <= args.epsilon < 1:
        raise UsageError("--epsilon must lie in [0, 1)")
    summary = run_lemma_check(args.lemma, args.n, args.epsilon, args.samples, args.seed)
    for line in summary.lines():
        print(line)
    if not summary.global_hypothesis:
        print(f"log2(n) hypothesis unmet at n={args.n}; lemma holds vacuously, "
              f"conditional_violations checks the inequality anyway", file=sys.stderr)
    return EXIT_OK if summary.violations == 0 else EXIT_NEGATIVE


# -- parser -----------------------------------------------------------------------------


def _epsilon(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError("epsilon must be finite")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symcirc", description="Symmetric circuit analysis and evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check circuit well-formedness")
    p.add_argument("-c", "--circuit", required=True)

    p = add("rigidify", cmd_rigidify, "write an equivalent rigid circuit")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("-o", "--output", required=True)

    p = add("check-sym", cmd_check_sym, "decide symmetry (after rigidifying)")
    p.add_argument("-c", "--circuit", required=True)

    p = add("supports", cmd_supports, "per-gate orbits, supporting partitions and supports")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("--epsilon", type=_epsilon, default=2 / 3)

    p = add("eval-naive", cmd_eval_naive, "evaluate under one bijection")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("-s", "--structure", required=True)
    p.add_argument("-b", "--bijection", required=True)

    p = add("eval", cmd_eval, "evaluate via supports, without choosing a bijection")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("-s", "--structure", required=True)
    p.add_argument("--dump-ev", action="store_true")

    p = add("compile", cmd_compile, "compile a formula into a circuit")
    p.add_argument("-f", "--formula", required=True, help="formula text or a file containing it")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--basis", choices=BASES, default="standard")
    p.add_argument("--no-share", action="store_true", help="one gate per subformula occurrence")
    p.add_argument("-o", "--output", required=True)

    p = add("compare", cmd_compare, "succinct evaluation vs. naive under every bijection")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("-s", "--structure", required=True)

    p = add("lemma-check", cmd_lemma_check, "sample partitions and test a part-size inequality")
    p.add_argument("--lemma", choices=("small-large", "largepart"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=_epsilon, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = add("bound-report", cmd_bound_report, "support-size bound diagnostics")
    p.add_argument("-c", "--circuit", required=True)
    p.add_argument("--epsilon", type=_epsilon, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NotSymmetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (UsageError, StructureError, FormulaError, CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
