"""Space-efficient contract semantics and its contract algebra.

Monitors carry *labeled* contracts: predicates become stacks of labeled
predicates and function contracts keep their dependent shape.  When two
monitors meet they are merged with ``join``, which keeps the new checks
and uses ``drop`` to discard older ones implied by them.  Because the
merge happens before anything is evaluated underneath the outer monitor,
a function carries at most one proxy and a tail-recursive call carries at
most one pending codomain check.
"""

from __future__ import annotations

from typing import Optional

from .ast import (
    Abs, App, Closing, Const, DepFun, Err, If, LDepFun, LPred, MonC, MonE, Node, Pred, Stack, Var,
    fresh_name,
)
from .machine import (
    DEFAULT_FUEL, MON_E, VALUE, Machine, RunResult, Semantics, StepResult, StuckTerm,
)
from .subst import apply_closing, rename, subst_labeled

DROP_KEYS = ("removed", "probe")

EFF_RULES = (
    "E-Beta", "E-Delta", "E-Fix", "E-IfTrue", "E-IfFalse",
    "E-AppLRaise", "E-AppRRaise", "E-OpLRaise", "E-OpRRaise", "E-IfRaise",
    "E-MonLabel", "E-MonCJoin", "E-MonCNil", "E-MonCPred", "E-MonCApp", "E-MonCRaise",
)


class ShapeMismatch(Exception):
    """``join`` was asked to merge a predicate stack with a function contract."""


def _engine(engine):
    if engine is None:
        from .implication import EQUALITY

        return EQUALITY
    return engine


# ---------------------------------------------------------------------------
# label


def label_contract(l: str, c: Node, env=None) -> Node:
    """Attach blame label ``l`` to every predicate of source contract ``c``."""
    from .metering import pred_base
    from .types import EMPTY, type_of_contract

    env = env or EMPTY
    if isinstance(c, Pred):
        base = pred_base(c, env)
        if base is None:
            raise StuckTerm(c, "cannot determine the base type of a predicate")
        return Stack((LPred(l, c.body, c.sigma, c.name),), base)
    if isinstance(c, DepFun):
        dom_t = type_of_contract(env, c.domain)
        return LDepFun(c.param, label_contract(l, c.domain, env),
                       label_contract(l, c.codomain, env.extend(c.param, dom_t)))
    raise TypeError(f"not a contract: {c!r}")


# ---------------------------------------------------------------------------
# drop / join


def drop(preds: tuple, p, engine=None, drop_key: str = "removed") -> tuple:
    """Remove every entry of ``preds`` implied by ``p``.

    In ``removed`` mode a removed entry becomes the key for the rest of the
    scan; in ``probe`` mode the key stays ``p``.  Under syntactic equality
    the two coincide.
    """
    engine = _engine(engine)
    out = []
    key = p
    for q in preds:
        if engine.implies(key, q):
            if drop_key == "removed":
                key = q
        else:
            out.append(q)
    return tuple(out)


def _join_stacks(r1: tuple, r2: tuple, engine, drop_key) -> tuple:
    acc = r2
    for p in reversed(r1):
        acc = (p,) + drop(acc, p, engine, drop_key)
    return acc


def join(c1: Node, c2: Node, engine=None, drop_key: str = "removed") -> Node:
    """Merge inner contract ``c1`` with outer contract ``c2``."""
    engine = _engine(engine)
    if isinstance(c1, Stack) and isinstance(c2, Stack):
        if c1.base is not c2.base:
            raise ShapeMismatch(f"joining {c1.base.value} and {c2.base.value} stacks")
        return Stack(_join_stacks(c1.preds, c2.preds, engine, drop_key), c2.base)
    if isinstance(c1, LDepFun) and isinstance(c2, LDepFun):
        z, c12, c22 = _unify_binders(c1, c2)
        dom = join(c2.domain, c1.domain, engine, drop_key)
        cod = join(wrap(c12, z, c2.domain, engine, drop_key), c22, engine, drop_key)
        return LDepFun(z, dom, cod)
    raise ShapeMismatch(f"cannot join {type(c1).__name__} with {type(c2).__name__}")


def _unify_binders(c1: LDepFun, c2: LDepFun):
    """Express both codomains over one binder name."""
    x1, x2 = c1.param, c2.param
    if x1 == x2:
        return x1, c1.codomain, c2.codomain
    if x1 not in c2.codomain.fv:
        return x1, c1.codomain, rename(c2.codomain, x2, x1)
    z = fresh_name(x1, c1.codomain.fv | c2.codomain.fv | {x1, x2})
    return z, rename(c1.codomain, x1, z), rename(c2.codomain, x2, z)


# ---------------------------------------------------------------------------
# wrap


def wrap(c: Node, x: str, c_arg: Node, engine=None, drop_key: str = "removed") -> Node:
    """Record in ``c`` that every use of ``x`` must be monitored by ``c_arg``."""
    if x not in c.fv or (isinstance(c_arg, Stack) and not c_arg.preds):
        return c  # an empty stack checks nothing: mon(nil, v) reduces to v
    if isinstance(c, Stack):
        preds = tuple(_wrap_pred(p, x, c_arg, engine, drop_key) for p in c.preds)
        # Wrapping can make two entries coincide; re-drop so the stack stays
        # redundancy-free, exactly as if the entries had met in a join.
        return Stack(_join_stacks(preds, (), _engine(engine), drop_key), c.base)
    if isinstance(c, LDepFun):
        dom = wrap(c.domain, x, c_arg, engine, drop_key)
        if c.param == x:
            return LDepFun(c.param, dom, c.codomain)
        param, cod = c.param, c.codomain
        if param in c_arg.fv:
            param = fresh_name(param, cod.fv | c_arg.fv | {x})
            cod = rename(cod, c.param, param)
        return LDepFun(param, dom, wrap(cod, x, c_arg, engine, drop_key))
    raise TypeError(f"not a labeled contract: {c!r}")


def _wrap_pred(p: LPred, x: str, c_arg: Node, engine, drop_key) -> LPred:
    if x not in p.fv:
        return p
    # Occurrences of x inside other entries' ranges (e.g. in the contract of
    # an entry z -> mon(c, z) installed by an earlier wrap) are wrapped in place.
    entries = []
    for k, v in p.sigma:
        if k != x and x in v.fv:
            v = _wrap_term(v, x, c_arg, engine, drop_key)
        entries.append((k, v))
    sigma = Closing(tuple(entries))
    current = sigma.get(x)
    if isinstance(current, MonE):
        sigma = sigma.set(x, MonE(join(c_arg, current.contract, engine, drop_key), current.subject))
    elif current is not None:
        if x in current.fv:
            sigma = sigma.set(x, MonE(c_arg, current))
    elif x in p.body.fv:
        sigma = sigma.set(x, MonE(c_arg, Var(x)))
    return LPred(p.label, p.body, sigma, p.name)


def _wrap_term(t: Node, x: str, c_arg: Node, engine, drop_key) -> Node:
    """Monitor every free occurrence of ``x`` in ``t`` with ``c_arg``, merging with
    a monitor that already sits directly on it."""
    if x not in t.fv:
        return t
    if isinstance(t, Var):
        return MonE(c_arg, t)
    if isinstance(t, MonE):
        c = wrap(t.contract, x, c_arg, engine, drop_key)
        if isinstance(t.subject, Var) and t.subject.name == x:
            return MonE(join(c_arg, c, engine, drop_key), t.subject)
        return MonE(c, _wrap_term(t.subject, x, c_arg, engine, drop_key))
    from .subst import subst_many

    return subst_many(t, {x: MonE(c_arg, Var(x))})


# ---------------------------------------------------------------------------
# Reduction


def is_eff_value(t: Node) -> bool:
    if isinstance(t, (Const, Abs)):
        return True
    return isinstance(t, MonE) and isinstance(t.contract, LDepFun) and isinstance(t.subject, Abs)


class EffSemantics(Semantics):
    name = "eff"
    join_priority = True

    def __init__(self, engine=None, drop_key: str = "removed") -> None:
        if drop_key not in DROP_KEYS:
            raise ValueError(f"drop key must be one of {DROP_KEYS}")
        self.engine = _engine(engine)
        self.drop_key = drop_key

    def begin(self) -> None:
        self.engine.reset()

    def is_value(self, t: Node) -> bool:
        return is_eff_value(t)

    def classify_monitor(self, t: Node) -> tuple:
        if isinstance(t, MonC):
            return ("redex", "E-MonLabel")
        s = t.subject
        if isinstance(s, MonE):
            return ("redex", "E-MonCJoin")
        if is_eff_value(s):
            if isinstance(t.contract, Stack):
                return ("redex", "E-MonCPred" if t.contract.preds else "E-MonCNil")
            if isinstance(s, Abs):
                return VALUE
            raise StuckTerm(t, "function contract on a non-function")
        return ("descend", (MON_E, t.contract), s)

    def classify_app(self, t: App) -> tuple:
        f = t.fn
        if isinstance(f, MonE) and isinstance(f.contract, LDepFun):
            return ("redex", "E-MonCApp")
        raise StuckTerm(t, "application of a non-function")

    def contract_monitor(self, t: Node, rule: str) -> Node:
        if rule == "E-MonLabel":
            return MonE(label_contract(t.label, t.contract), t.subject)
        if rule == "E-MonCJoin":
            inner = t.subject
            return MonE(join(inner.contract, t.contract, self.engine, self.drop_key), inner.subject)
        if rule == "E-MonCNil":
            return t.subject
        if rule == "E-MonCPred":
            st = t.contract
            p = st.preds[0]
            v = t.subject
            rest = MonE(Stack(st.preds[1:], st.base), v)
            return If(App(apply_closing(p.sigma, p.body), v), rest, Err(p.label))
        if rule == "E-MonCApp":
            mon, v = t.fn, t.arg
            c = mon.contract
            return MonE(subst_labeled(c.codomain, c.param, v), App(mon.subject, MonE(c.domain, v)))
        raise StuckTerm(t, f"no contraction for {rule}")


def eval_eff(e: Node, engine=None, fuel: int = DEFAULT_FUEL, trace: bool = False, stats: bool = True,
             instrument: bool = False, pred_observer=None, drop_key: str = "removed") -> RunResult:
    """Evaluate ``e`` under the space-efficient semantics."""
    return Machine(EffSemantics(engine, drop_key), e, fuel, trace=trace,
                   stats=stats or pred_observer is not None, instrument=instrument,
                   pred_observer=pred_observer).run()


def step_eff(e: Node, engine=None, drop_key: str = "removed") -> StepResult:
    return Machine(EffSemantics(engine, drop_key), e, stats=False).step_once()
