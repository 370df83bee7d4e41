"""Classic contract semantics: predicates are tested, function contracts become proxies.

Function proxies nest without bound, which is exactly the space leak the
efficient semantics removes.  Codomain contracts are instantiated laxly:
the bare argument, not its monitored copy, is substituted into them.
"""

from __future__ import annotations

from .ast import App, DepFun, Err, If, MonC, Node, Pred
from .machine import (
    DEFAULT_FUEL, MON_C, VALUE, RunResult, Semantics, StepResult, StuckTerm, Machine,
)
from .subst import apply_closing, subst_contract

CLASSIC_RULES = (
    "E-Beta", "E-Delta", "E-Fix", "E-IfTrue", "E-IfFalse",
    "E-AppLRaise", "E-AppRRaise", "E-OpLRaise", "E-OpRRaise", "E-IfRaise",
    "E-MonPred", "E-MonApp", "E-MonRaise",
)


def is_classic_value(t: Node) -> bool:
    from .ast import Abs, Const

    while isinstance(t, MonC):
        if not isinstance(t.contract, DepFun):
            return False
        t = t.subject
    return isinstance(t, (Const, Abs))


class ClassicSemantics(Semantics):
    name = "classic"

    def is_value(self, t: Node) -> bool:
        return is_classic_value(t)

    def classify_monitor(self, t: Node) -> tuple:
        if not isinstance(t, MonC):
            raise StuckTerm(t, "efficient monitor under the classic semantics")
        if self.is_value(t.subject):
            if isinstance(t.contract, Pred):
                return ("redex", "E-MonPred")
            return VALUE
        return ("descend", (MON_C, t.label, t.contract), t.subject)

    def classify_app(self, t: App) -> tuple:
        f = t.fn
        if isinstance(f, MonC) and isinstance(f.contract, DepFun):
            return ("redex", "E-MonApp")
        raise StuckTerm(t, "application of a non-function")

    def contract_monitor(self, t: Node, rule: str) -> Node:
        if rule == "E-MonPred":
            p = t.contract
            v = t.subject
            return If(App(apply_closing(p.sigma, p.body), v), v, Err(t.label))
        if rule == "E-MonApp":
            mon, v = t.fn, t.arg
            c = mon.contract
            return MonC(
                mon.label,
                subst_contract(c.codomain, c.param, v),
                App(mon.subject, MonC(mon.label, c.domain, v)),
            )
        raise StuckTerm(t, f"no contraction for {rule}")


def eval_classic(e: Node, fuel: int = DEFAULT_FUEL, trace: bool = False, stats: bool = True,
                 instrument: bool = False, pred_observer=None) -> RunResult:
    """Evaluate ``e`` under the classic semantics for at most ``fuel`` steps."""
    return Machine(ClassicSemantics(), e, fuel, trace=trace, stats=stats or pred_observer is not None,
                   instrument=instrument, pred_observer=pred_observer).run()


def step_classic(e: Node) -> StepResult:
    return Machine(ClassicSemantics(), e, stats=False).step_once()
