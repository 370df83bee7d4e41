"""Command-line entry point: run, check, compare, stats, verify-rules and fuzz.

Exit codes depend only on what happened:

* ``run``/``stats``: 0 value, 2 blame, 3 out of fuel;
* ``check``: 0 well typed;
* ``compare``/``fuzz``: 0 when the two semantics agree (or a run is inconclusive);
* ``verify-rules``: 0 when every axiom holds;
* 1 for unreadable input (parse, type, arity or usage errors, diagnostics on stderr);
* 4 for a failed verdict (disagreement or failed axiom).
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .machine import DEFAULT_FUEL, Blame, OutOfFuel, StuckTerm, Value, run as run_machine
from .metering import format_summary, write_series_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLAME = 2
EXIT_FUEL = 3
EXIT_FAILED = 4

TRACE_LIMIT = 400


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with "blame".
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def outcome_exit_code(outcome) -> int:
    if isinstance(outcome, Value):
        return EXIT_OK
    if isinstance(outcome, Blame):
        return EXIT_BLAME
    if isinstance(outcome, OutOfFuel):
        return EXIT_FUEL
    raise TypeError(f"not an outcome: {outcome!r}")


def format_trace_line(step: int, rule: str, term, full: bool = False) -> str:
    from .surface import print_term

    text = print_term(term)
    if not full and len(text) > TRACE_LIMIT:
        text = text[:TRACE_LIMIT] + f" ...[{len(text) - TRACE_LIMIT} more chars]"
    return f"[step {step}] {rule}: {text}"


# ---------------------------------------------------------------------------
# Loading


def _load_program(path: str):
    from .surface import SourceText, parse_term
    from .types import typecheck

    e = parse_term(SourceText.from_file(path))
    ty = typecheck(e)
    return e, ty


def _load_engine(rules: Optional[str], program=None):
    if rules is None:
        return None
    from .implication import load_rules, predicate_catalog

    catalog = predicate_catalog(program) if program is not None else None
    return load_rules(rules, catalog)


def _check_mode_flags(args) -> None:
    if args.mode == "classic":
        if getattr(args, "rules", None) is not None:
            raise UsageError("--rules only applies to --mode eff")
        if getattr(args, "drop_key", None) is not None:
            raise UsageError("--drop-key only applies to --mode eff")


# ---------------------------------------------------------------------------
# Commands


def _execute(args, out, want_series: bool):
    _check_mode_flags(args)
    e, _ = _load_program(args.file)
    engine = _load_engine(args.rules, e) if args.mode == "eff" else None
    tracing = args.trace or args.trace_full
    result = run_machine(e, mode=args.mode, engine=engine, fuel=args.fuel, trace=tracing,
                         drop_key=args.drop_key or "removed")
    if tracing:
        for k, rule, term in result.trace:
            print(format_trace_line(k, rule, term, args.trace_full), file=out)
    print(str(result.outcome), file=out)
    print(format_summary(result.stats.summary()), file=out)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8", newline="") as fh:
            write_series_csv(result.stats, fh)
    elif want_series:
        write_series_csv(result.stats, out)
    return outcome_exit_code(result.outcome)


def cmd_run(args, out) -> int:
    return _execute(args, out, want_series=False)


def cmd_stats(args, out) -> int:
    return _execute(args, out, want_series=True)


def cmd_check(args, out) -> int:
    from .surface import print_type

    _, ty = _load_program(args.file)
    print(print_type(ty), file=out)
    return EXIT_OK


def _describe(outcome) -> str:
    return str(outcome).replace(":", "", 1)


def cmd_compare(args, out) -> int:
    from .harness import compare_program

    e, _ = _load_program(args.file)
    engine = _load_engine(args.rules, e)
    c, f, verdict = compare_program(e, engine, args.fuel, args.drop_key or "removed")
    print(f"classic {c}", file=out)
    print(f"eff {f}", file=out)
    if verdict is None:
        print("inconclusive", file=out)
        return EXIT_OK
    if verdict:
        print(f"agree: {_describe(c)}", file=out)
        return EXIT_OK
    print("disagree", file=out)
    return EXIT_FAILED


def cmd_verify_rules(args, out) -> int:
    from .implication import ImplicationEngine, load_rules, verify_axioms
    from .surface import SourceText, parse_pool

    pool = parse_pool(SourceText.from_file(args.pool))
    engine = ImplicationEngine() if args.rules == "equality" else load_rules(args.rules)
    report = verify_axioms(engine, pool, triple_samples=args.samples, seed=args.seed, fuel=args.fuel)
    print(report.format(), file=out)
    print("verdict=" + ("pass" if report.passed else "fail"), file=out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_fuzz(args, out) -> int:
    from .harness import GenConfig, diff_test

    engine = _load_engine(args.rules)
    cfg = GenConfig(seed=args.seed, dependent_contracts=args.dependent, fuel=args.fuel,
                    max_depth=args.depth)
    report = diff_test(cfg, args.n, engine)
    print(report.format(), file=out)
    print(f"inconclusiveRate={report.inconclusive_rate:.4f}", file=out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
    return EXIT_OK if not report.disagreements else EXIT_FAILED


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cpcf", description="Evaluate and test programs with higher-order contracts.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def evaluation(name: str, help_: str):
        s = sub.add_parser(name, help=help_)
        s.add_argument("file")
        s.add_argument("--mode", choices=("classic", "eff"), default="classic")
        s.add_argument("--rules", help="implication rule file (eff mode)")
        s.add_argument("--drop-key", choices=("removed", "probe"), default=None,
                       help="which predicate keys the rest of a drop scan (eff mode)")
        s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
        s.add_argument("--trace", action="store_true", help="print every step, terms truncated")
        s.add_argument("--trace-full", action="store_true", help="print every step, terms in full")
        s.add_argument("--stats", metavar="OUT.csv", help="write the per-step series to a file")
        return s

    evaluation("run", "evaluate a program").set_defaults(func=cmd_run)
    evaluation("stats", "evaluate and print the per-step series as CSV").set_defaults(func=cmd_stats)

    s = sub.add_parser("check", help="typecheck a program and print its type")
    s.add_argument("file")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("compare", help="run both semantics and compare their outcomes")
    s.add_argument("file")
    s.add_argument("--rules")
    s.add_argument("--drop-key", choices=("removed", "probe"), default=None)
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("verify-rules", help="check an implication rule file against the axioms")
    s.add_argument("rules", help="rule file, or 'equality' for the syntactic baseline")
    s.add_argument("--pool", required=True, help="file of closed predicates to check over")
    s.add_argument("--samples", type=int, default=5000, help="sampled triples for transitivity")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fuel", type=int, default=10_000)
    s.set_defaults(func=cmd_verify_rules)

    s = sub.add_parser("fuzz", help="differential test on generated programs")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dependent", action="store_true", help="generate dependent contracts")
    s.add_argument("--rules")
    s.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--csv", metavar="OUT.csv", help="write one line per trial")
    s.set_defaults(func=cmd_fuzz)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    from .implication import RuleEvalError
    from .surface import ArityError, ParseError
    from .types import TypeCheckError

    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, TypeCheckError, ArityError, RuleEvalError, UsageError, StuckTerm,
            OSError) as exc:
        print(f"cpcf {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
