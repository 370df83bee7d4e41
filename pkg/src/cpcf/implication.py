"""Predicate implication: syntactic-equality baseline plus user rules.

A rule ``rule down implies down when x1 <= x2`` lets a stack entry named
``down`` be dropped in favour of another ``down`` entry whenever the
condition holds, where ``x1`` / ``x2`` are read from the closing
substitutions of the kept and the candidate predicate respectively.

The engine applies single rules only; it never computes a transitive
closure.  Rule files that need transitivity must spell out the composite
rules themselves (``verify_axioms`` will flag missing ones).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .ast import (
    Abs, BaseType, Closing, Const, FALSE, LPred, MonC, MonE, Node, Pred, TRUE, Var,
    pred_key, walk,
)
from .surface import ArityError, Rule, split_rule_var


class RuleEvalError(Exception):
    """A rule condition blamed or ran out of fuel."""

    def __init__(self, rule: Rule, outcome) -> None:
        super().__init__(f"rule at line {rule.line} ({rule}) did not evaluate to a boolean: {outcome}")
        self.rule = rule
        self.outcome = outcome


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def for_pair(self, left: Optional[str], right: Optional[str]) -> list[Rule]:
        if left is None or right is None:
            return []
        return [r for r in self.rules if r.left == left and r.right == right]

    def check_arity(self, catalog: Mapping[str, frozenset[str]]) -> None:
        """Every ``v1``/``v2`` must be bound by the left/right named predicate."""
        for r in self.rules:
            for v in sorted(r.condition.fv):
                base, side = split_rule_var(v)
                pname = r.left if side == 1 else r.right
                binders = catalog.get(pname)
                if binders is None:
                    continue
                if base not in binders:
                    raise ArityError(
                        f"line {r.line}: {v} refers to {base!r}, which predicate {pname!r} does not bind "
                        f"(binds: {', '.join(sorted(binders)) or 'nothing'})"
                    )


def predicate_catalog(e: Node) -> dict[str, frozenset[str]]:
    """Named predicates of a program mapped to the variables their bodies depend on."""
    out: dict[str, set[str]] = {}
    for n in walk(e):
        if isinstance(n, (Pred, LPred)) and n.name:
            out.setdefault(n.name, set()).update(n.body.fv)
    return {k: frozenset(v) for k, v in out.items()}


def _is_closed_value(t: Node) -> bool:
    return not t.fv and isinstance(t, (Const, Abs))


class ImplicationEngine:
    """Decides ``p1 implies p2`` for closed predicates."""

    def __init__(self, rules: RuleSet | Sequence[Rule] = (), condition_fuel: int = 10_000,
                 strict: bool = True) -> None:
        self.rules = rules if isinstance(rules, RuleSet) else RuleSet(tuple(rules))
        self.condition_fuel = condition_fuel
        self.strict = strict
        self.warnings = 0
        self._memo: dict = {}

    def reset(self) -> None:
        self._memo.clear()

    @property
    def is_equality_only(self) -> bool:
        return not self.rules.rules

    def implies(self, p1: Pred | LPred, p2: Pred | LPred) -> bool:
        k1, k2 = pred_key(p1), pred_key(p2)
        if k1 == k2:
            return True
        rules = self.rules.for_pair(p1.name, p2.name)
        if not rules:
            return False
        memo_key = (p1.name, p2.name, k1, k2)
        hit = self._memo.get(memo_key)
        if hit is None:
            hit = any(self._fire(r, p1, p2) for r in rules)
            self._memo[memo_key] = hit
        return hit

    def _fire(self, rule: Rule, p1, p2) -> bool:
        from .eval_classic import eval_classic
        from .machine import Blame, OutOfFuel
        from .subst import subst_many

        binding = {}
        for v in rule.condition.fv:
            base, side = split_rule_var(v)
            sigma = (p1 if side == 1 else p2).sigma
            val = sigma.get(base)
            if val is None or not _is_closed_value(val):
                return False  # the rule does not speak about this predicate instance
            binding[v] = val
        cond = subst_many(rule.condition, binding)
        result = eval_classic(cond, fuel=self.condition_fuel, stats=False)
        out = result.outcome
        if isinstance(out, (Blame, OutOfFuel)):
            if self.strict:
                raise RuleEvalError(rule, out)
            self.warnings += 1
            return False
        return out.term == TRUE


EQUALITY = ImplicationEngine()


def load_rules(path, catalog=None, **kw) -> ImplicationEngine:
    from .surface import SourceText, parse_rules

    return ImplicationEngine(parse_rules(SourceText.from_file(path), catalog), **kw)


# ---------------------------------------------------------------------------
# Axiom verification


@dataclass
class AxiomResult:
    name: str
    passed: bool = True
    checked: int = 0
    counterexample: Optional[dict] = None

    def fail(self, **witness) -> None:
        if self.passed:
            self.passed = False
            self.counterexample = witness


@dataclass
class AxiomReport:
    results: dict[str, AxiomResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name: str) -> AxiomResult:
        return self.results[name]

    def format(self) -> str:
        from .surface import print_contract, print_term

        lines = []
        for r in self.results.values():
            status = "pass" if r.passed else "FAIL"
            lines.append(f"{r.name}: {status} ({r.checked} checks)")
            if r.counterexample:
                for k, v in r.counterexample.items():
                    if isinstance(v, (Pred, LPred)):
                        v = print_contract(v)
                    elif isinstance(v, Node):
                        v = print_term(v)
                    lines.append(f"  {k} = {v}")
        return "\n".join(lines)


def _pred_base(p) -> Optional[BaseType]:
    from .metering import pred_base

    return pred_base(p)


def default_const_samples(pool: Iterable[Pred]) -> dict[BaseType, list[Const]]:
    ints = set(range(-17, 18))
    for p in pool:
        for _, v in p.sigma:
            if isinstance(v, Const) and v.base is BaseType.INT:
                ints.update(v.value + d for d in range(-2, 3))
    return {
        BaseType.INT: [Const(i) for i in sorted(ints)],
        BaseType.BOOL: [FALSE, TRUE],
    }


def _satisfies(p, k: Const, fuel: int) -> bool:
    """Does ``sigma(e) k`` evaluate to true?"""
    from .ast import App
    from .eval_classic import eval_classic
    from .machine import Value
    from .subst import apply_closing

    out = eval_classic(App(apply_closing(p.sigma, p.body), k), fuel=fuel, stats=False).outcome
    return isinstance(out, Value) and out.term == TRUE


def verify_axioms(engine: ImplicationEngine, pool: Sequence[Pred],
                  const_samples: Optional[Mapping[BaseType, Sequence[Const]]] = None,
                  triple_samples: int = 5000, seed: int = 0, fuel: int = 10_000) -> AxiomReport:
    """Sample-check that ``engine`` is a preorder that is adequate on ``pool``."""
    pool = list(pool)
    samples = const_samples if const_samples is not None else default_const_samples(pool)
    bases = [_pred_base(p) for p in pool]
    rng = random.Random(seed)
    report = AxiomReport()

    refl = report.results["reflexivity"] = AxiomResult("reflexivity")
    for p in pool:
        refl.checked += 1
        if not engine.implies(p, p):
            refl.fail(p=p)

    same_type = [(i, j) for i in range(len(pool)) for j in range(len(pool)) if bases[i] == bases[j]]
    implied = {(i, j) for i, j in same_type if engine.implies(pool[i], pool[j])}

    trans = report.results["transitivity"] = AxiomResult("transitivity")
    n = len(pool)
    if n ** 3 <= triple_samples:
        triples = itertools.product(range(n), repeat=3)
    else:
        triples = ((rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(triple_samples))
    for a, b, c in triples:
        if (a, b) in implied and (b, c) in implied:
            trans.checked += 1
            if (a, c) not in implied:
                trans.fail(p1=pool[a], p2=pool[b], p3=pool[c])

    subst_res = report.results["substitutivity"] = AxiomResult("substitutivity")
    from .subst import subst_pred

    for i, j in same_type:
        p1, p2 = pool[i], pool[j]
        shared = [x for x in p1.sigma.domain() if x in p2.sigma and isinstance(p1.sigma.get(x), Const)]
        for x in shared[:1]:
            o1 = Pred(p1.body, Closing(tuple(e for e in p1.sigma if e[0] != x)), p1.name)
            o2 = Pred(p2.body, Closing(tuple(e for e in p2.sigma if e[0] != x)), p2.name)
            if not engine.implies(o1, o2):
                continue
            for v in samples.get(p1.sigma.get(x).base, [])[::7]:
                subst_res.checked += 1
                if not engine.implies(subst_pred(o1, x, v), subst_pred(o2, x, v)):
                    subst_res.fail(p1=o1, p2=o2, var=x, value=v)

    adeq = report.results["adequacy"] = AxiomResult("adequacy")
    sat_cache: dict = {}

    def sat(idx: int, k: Const) -> bool:
        key = (idx, k)
        if key not in sat_cache:
            sat_cache[key] = _satisfies(pool[idx], k, fuel)
        return sat_cache[key]

    for i, j in sorted(implied):
        if i == j or bases[i] is None:
            continue
        for k in samples.get(bases[i], []):
            adeq.checked += 1
            if sat(i, k) and not sat(j, k):
                adeq.fail(p1=pool[i], p2=pool[j], k=k)
                break
        if not adeq.passed:
            break

    report.results["decidability"] = AxiomResult("decidability", True, len(implied))
    return report


def adequacy_witness(report: AxiomReport) -> Optional[tuple]:
    """(sigma1, sigma2, k) of a failed adequacy check, for display and re-evaluation."""
    r = report.results.get("adequacy")
    if r is None or r.passed:
        return None
    ce = r.counterexample
    return ce["p1"], ce["p2"], ce["k"]
