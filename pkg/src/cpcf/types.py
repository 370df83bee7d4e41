"""Typechecker for terms, source contracts, labeled contracts and closing substitutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .ast import (
    BOOL, INT, Abs, App, Arrow, Base, BaseType, Closing, Const, DepFun, Err, Fix,
    If, LDepFun, LPred, MonC, MonE, Node, Op, Pred, Stack, Type, Var,
)

UNBOUND_VAR = "UnboundVar"
MISMATCH = "Mismatch"
NOT_A_FUNCTION = "NotAFunction"
BAD_PREDICATE_TYPE = "BadPredicateType"
BAD_SUBSTITUTION = "BadSubstitution"


class TypeCheckError(Exception):
    """A typing failure naming the offending subterm."""

    def __init__(self, kind: str, node: Node, message: str,
                 expected: Optional[Type] = None, actual: Optional[Type] = None) -> None:
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.node = node
        self.expected = expected
        self.actual = actual


class _Bottom:
    """Type of a blame error: compatible with every type (T-Blame)."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Bottom"

    __str__ = __repr__


BOTTOM = _Bottom()


class TypeEnv:
    """Immutable typing context; later bindings shadow earlier ones."""

    __slots__ = ("_map",)

    def __init__(self, bindings: Optional[Mapping[str, Type]] = None) -> None:
        self._map = dict(bindings or {})

    def extend(self, name: str, t: Type) -> "TypeEnv":
        env = TypeEnv(self._map)
        env._map[name] = t
        return env

    def lookup(self, name: str) -> Optional[Type]:
        return self._map.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._map

    def items(self):
        return self._map.items()


EMPTY = TypeEnv()


def _unify(a, b):
    """Agreement of two types where Bottom matches anything; None on mismatch."""
    if a is BOTTOM:
        return b
    if b is BOTTOM:
        return a
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        d = _unify(a.domain, b.domain)
        c = _unify(a.codomain, b.codomain)
        if d is None or c is None:
            return None
        return Arrow(d, c)
    return a if a == b else None


def compatible(a, b) -> bool:
    return _unify(a, b) is not None


def _expect(node: Node, expected, actual):
    t = _unify(expected, actual)
    if t is None:
        raise TypeCheckError(MISMATCH, node, f"expected {expected}, got {actual}", expected, actual)
    return t


def _base_of(t) -> Optional[BaseType]:
    return t.tag if isinstance(t, Base) else None


def type_of_term(env: TypeEnv, e: Node):
    """Type of ``e`` under ``env``; blame errors have the wildcard type BOTTOM."""
    if isinstance(e, Var):
        t = env.lookup(e.name)
        if t is None:
            raise TypeCheckError(UNBOUND_VAR, e, f"unbound variable {e.name}")
        return t
    if isinstance(e, Const):
        return BOOL if isinstance(e.value, bool) else INT
    if isinstance(e, Err):
        return BOTTOM
    if isinstance(e, Op):
        lt = type_of_term(env, e.left)
        rt = type_of_term(env, e.right)
        if e.op.operand is None:
            t = _expect(e.right, lt, rt)
            if t is not BOTTOM and not isinstance(t, Base):
                raise TypeCheckError(MISMATCH, e, "equality needs a base type", None, t)
        else:
            want = Base(e.op.operand)
            _expect(e.left, want, lt)
            _expect(e.right, want, rt)
        return Base(e.op.result)
    if isinstance(e, App):
        ft = type_of_term(env, e.fn)
        at = type_of_term(env, e.arg)
        if ft is BOTTOM:
            return BOTTOM
        if not isinstance(ft, Arrow):
            raise TypeCheckError(NOT_A_FUNCTION, e.fn, f"applying a non-function of type {ft}", None, ft)
        _expect(e.arg, ft.domain, at)
        return ft.codomain
    if isinstance(e, Abs):
        return Arrow(e.param_type, type_of_term(env.extend(e.param, e.param_type), e.body))
    if isinstance(e, Fix):
        bt = type_of_term(env.extend(e.param, e.param_type), e.body)
        _expect(e.body, e.param_type, bt)
        return e.param_type
    if isinstance(e, If):
        _expect(e.cond, BOOL, type_of_term(env, e.cond))
        tt = type_of_term(env, e.then)
        et = type_of_term(env, e.else_)
        return _expect(e.else_, tt, et)
    if isinstance(e, MonC):
        ct = type_of_contract(env, e.contract)
        st = type_of_term(env, e.subject)
        _expect(e.subject, ct, st)
        return ct
    if isinstance(e, MonE):
        ct = type_of_labeled(env, e.contract)
        st = type_of_term(env, e.subject)
        _expect(e.subject, ct, st)
        return ct
    raise TypeCheckError(MISMATCH, e, f"not a term: {type(e).__name__}")


def _check_closing(env: TypeEnv, sigma: Closing, node: Node) -> TypeEnv:
    """Type each sigma entry (insertion order) and extend env with its domain."""
    inner = env
    for name, value in sigma:
        try:
            t = type_of_term(env, value)
        except TypeCheckError as exc:
            raise TypeCheckError(BAD_SUBSTITUTION, node, f"entry {name}: {exc}") from exc
        if t is BOTTOM:
            raise TypeCheckError(BAD_SUBSTITUTION, node, f"entry {name} is a blame error")
        inner = inner.extend(name, t)
    return inner


def _pred_type(env: TypeEnv, p: Pred | LPred):
    inner = _check_closing(env, p.sigma, p)
    try:
        bt = type_of_term(inner, p.body)
    except TypeCheckError as exc:
        if p.sigma.entries and exc.kind in (MISMATCH, NOT_A_FUNCTION):
            raise TypeCheckError(BAD_SUBSTITUTION, p, f"body ill-typed under sigma: {exc}") from exc
        raise
    if not (isinstance(bt, Arrow) and isinstance(bt.domain, Base) and bt.codomain == BOOL):
        raise TypeCheckError(BAD_PREDICATE_TYPE, p, f"predicate body has type {bt}, not B -> Bool", None, bt)
    return bt.domain


def type_of_contract(env: TypeEnv, c: Node):
    if isinstance(c, Pred):
        return _pred_type(env, c)
    if isinstance(c, DepFun):
        t1 = type_of_contract(env, c.domain)
        t2 = type_of_contract(env.extend(c.param, t1), c.codomain)
        return Arrow(t1, t2)
    raise TypeCheckError(MISMATCH, c, f"not a contract: {type(c).__name__}")


def type_of_labeled(env: TypeEnv, c: Node):
    if isinstance(c, Stack):
        want = Base(c.base)
        for p in c.preds:
            t = _pred_type(env, p)
            if t != want:
                raise TypeCheckError(MISMATCH, p, f"stack at {want} holds a {t} predicate", want, t)
        return want
    if isinstance(c, LDepFun):
        t1 = type_of_labeled(env, c.domain)
        t2 = type_of_labeled(env.extend(c.param, t1), c.codomain)
        return Arrow(t1, t2)
    raise TypeCheckError(MISMATCH, c, f"not a labeled contract: {type(c).__name__}")


def typecheck(e: Node):
    """Type of a closed term."""
    return type_of_term(EMPTY, e)
