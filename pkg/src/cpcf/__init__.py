"""Higher-order contracts over a small PCF: classic and space-efficient semantics.

Programs are parsed with :func:`parse_term`, typed with :func:`typecheck` and
run with :func:`run` under ``mode="classic"`` or ``mode="eff"``.
"""

import sys

from .ast import alpha_eq, is_simple, is_source_program
from .eval_classic import eval_classic
from .eval_space import drop, eval_eff, join, label_contract, wrap
from .implication import EQUALITY, ImplicationEngine, load_rules, verify_axioms
from .machine import Blame, OutOfFuel, RunResult, StuckTerm, Value, run, step
from .surface import parse_contract, parse_term, print_contract, print_term
from .types import TypeCheckError, typecheck

# Terms are trees walked recursively; classic runs nest one proxy per call.
if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)

__version__ = "0.1.0"

__all__ = [
    "Blame", "EQUALITY", "ImplicationEngine", "OutOfFuel", "RunResult", "StuckTerm",
    "TypeCheckError", "Value", "alpha_eq", "drop", "eval_classic", "eval_eff", "is_simple",
    "is_source_program", "join", "label_contract", "load_rules", "parse_contract", "parse_term",
    "print_contract", "print_term", "run", "step", "typecheck", "verify_axioms", "wrap",
]
