"""Capture-avoiding substitution with delayed substitution into predicates.

Substitution into a predicate never touches its body: it rewrites the
closing substitution instead.  ``[v/x]`` is applied pointwise to every
range entry (so an entry ``x -> mon(c, x)`` installed by ``wrap`` becomes
``x -> mon(c, v)``), and ``x -> v`` is appended only when ``x`` is still free
in the body and not yet in sigma's domain.
"""

from __future__ import annotations

from typing import Mapping

from .ast import (
    Abs, App, Closing, Const, DepFun, Err, Fix, If, LDepFun, LPred, MonC, MonE,
    Node, Op, Pred, Stack, Var, fresh_name,
)


def subst_term(e: Node, x: str, v: Node) -> Node:
    """``e[v/x]``."""
    return subst_many(e, {x: v})


def subst_pred(p: Pred | LPred, x: str, v: Node) -> Pred | LPred:
    return subst_many(p, {x: v})


def subst_labeled(c: Node, x: str, v: Node) -> Node:
    """Substitution into a labeled contract.  Never joins: stack lengths are preserved."""
    return subst_many(c, {x: v})


def subst_contract(c: Node, x: str, v: Node) -> Node:
    return subst_many(c, {x: v})


def apply_closing(sigma: Closing, e: Node) -> Node:
    """Simultaneously substitute every sigma entry into ``e``."""
    if not sigma.entries:
        return e
    return subst_many(e, dict(sigma.entries))


def rename(e: Node, old: str, new: str) -> Node:
    """Alpha-rename the free variable ``old`` to ``new``.

    Unlike substitution, renaming rewrites predicate bodies directly instead
    of recording ``old -> new`` in their closing substitutions, so renamed
    contracts stay alpha-comparable with never-renamed ones.
    """
    if old == new or old not in e.fv:
        return e
    return _subst(e, {old: Var(new)}, True)


def subst_many(e: Node, mapping: Mapping[str, Node], renaming: bool = False) -> Node:
    """Simultaneous capture-avoiding substitution."""
    relevant = {k: v for k, v in mapping.items() if k in e.fv}
    if not relevant:
        return e
    return _subst(e, relevant, renaming)


def _range_fv(mapping: Mapping[str, Node]) -> set[str]:
    out: set[str] = set()
    for v in mapping.values():
        out |= v.fv
    return out


def _under_binder(param: str, body: Node, mapping: Mapping[str, Node], avoid_extra=()):
    """Prepare substitution under a binder; returns (param', body', mapping')."""
    inner = {k: v for k, v in mapping.items() if k != param and k in body.fv}
    if not inner:
        return param, body, inner
    if param in _range_fv(inner):
        new = fresh_name(param, body.fv | _range_fv(inner) | set(inner) | set(avoid_extra))
        body = rename(body, param, new)
        param = new
    return param, body, inner


def _subst(e: Node, m: Mapping[str, Node], rn: bool = False) -> Node:
    # Only called when some key of m is free in e.
    if isinstance(e, Var):
        return m.get(e.name, e)
    if isinstance(e, (Const, Err)):
        return e
    if isinstance(e, Op):
        return Op(e.op, subst_many(e.left, m, rn), subst_many(e.right, m, rn))
    if isinstance(e, App):
        return App(subst_many(e.fn, m, rn), subst_many(e.arg, m, rn))
    if isinstance(e, (Abs, Fix)):
        param, body, inner = _under_binder(e.param, e.body, m)
        if not inner:
            return e
        return type(e)(param, e.param_type, _subst(body, inner, rn))
    if isinstance(e, If):
        return If(subst_many(e.cond, m, rn), subst_many(e.then, m, rn), subst_many(e.else_, m, rn))
    if isinstance(e, MonC):
        return MonC(e.label, subst_many(e.contract, m, rn), subst_many(e.subject, m, rn))
    if isinstance(e, MonE):
        return MonE(subst_many(e.contract, m, rn), subst_many(e.subject, m, rn))
    if isinstance(e, (Pred, LPred)):
        return _subst_pred(e, m, rn)
    if isinstance(e, (DepFun, LDepFun)):
        dom = subst_many(e.domain, m, rn)
        param, cod, inner = _under_binder(e.param, e.codomain, m)
        if not inner:
            return type(e)(e.param, dom, e.codomain)
        return type(e)(param, dom, _subst(cod, inner, rn))
    if isinstance(e, Stack):
        return Stack(tuple(subst_many(p, m, rn) for p in e.preds), e.base)
    raise TypeError(f"not a syntax node: {e!r}")


def _subst_pred(p: Pred | LPred, m: Mapping[str, Node], rn: bool) -> Pred | LPred:
    sigma = p.sigma.map_values(lambda t: subst_many(t, m, rn))
    body = p.body
    open_keys = {x: v for x, v in m.items() if x in body.fv and x not in p.sigma}
    if rn and not any(v.name in p.sigma for v in open_keys.values()):
        body = subst_many(body, open_keys, True)
    else:
        for x, v in open_keys.items():
            sigma = sigma.set(x, v)
    if isinstance(p, LPred):
        return LPred(p.label, body, sigma, p.name)
    return Pred(body, sigma, p.name)
