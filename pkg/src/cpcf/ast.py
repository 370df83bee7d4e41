"""Abstract syntax shared by both semantics.

Terms, source contracts, labeled (runtime) contracts and closing
substitutions are immutable trees.  Every node lazily caches its free
variables and its alpha-canonical form, so repeated side-condition checks
(``x in fv(sigma(e))``) and alpha comparisons stay cheap on large terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Union

# ---------------------------------------------------------------------------
# Types


class BaseType(enum.Enum):
    INT = "Int"
    BOOL = "Bool"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Base:
    tag: BaseType

    def __str__(self) -> str:
        return str(self.tag)


@dataclass(frozen=True)
class Arrow:
    domain: "Type"
    codomain: "Type"

    def __str__(self) -> str:
        dom = f"({self.domain})" if isinstance(self.domain, Arrow) else str(self.domain)
        return f"{dom} -> {self.codomain}"


Type = Union[Base, Arrow]

INT = Base(BaseType.INT)
BOOL = Base(BaseType.BOOL)


# ---------------------------------------------------------------------------
# Primitive operators


class OpTag(enum.Enum):
    """Binary primitives with their surface symbol and base-type signature."""

    ADD = ("add", "+", BaseType.INT, BaseType.INT)
    SUB = ("sub", "-", BaseType.INT, BaseType.INT)
    MUL = ("mul", "*", BaseType.INT, BaseType.INT)
    MOD = ("mod", "mod", BaseType.INT, BaseType.INT)
    EQ = ("eq", "=", None, BaseType.BOOL)  # operands: any single base type
    LT = ("lt", "<", BaseType.INT, BaseType.BOOL)
    LE = ("le", "<=", BaseType.INT, BaseType.BOOL)
    GT = ("gt", ">", BaseType.INT, BaseType.BOOL)
    GE = ("ge", ">=", BaseType.INT, BaseType.BOOL)
    OR = ("or", "or", BaseType.BOOL, BaseType.BOOL)
    AND = ("and", "and", BaseType.BOOL, BaseType.BOOL)

    def __init__(self, tag: str, symbol: str, operand, result) -> None:
        self.tag = tag
        self.symbol = symbol
        self.operand = operand
        self.result = result

    @classmethod
    def from_symbol(cls, symbol: str) -> "OpTag":
        for op in cls:
            if op.symbol == symbol:
                return op
        raise KeyError(symbol)


# ---------------------------------------------------------------------------
# Nodes


class Node:
    """Mixin giving every syntax node cached free variables / canonical form."""

    __slots__ = ()

    @property
    def fv(self) -> frozenset[str]:
        cached = self.__dict__.get("_fv")
        if cached is None:
            cached = _compute_fv(self)
            object.__setattr__(self, "_fv", cached)
        return cached

    @property
    def canon(self):
        cached = self.__dict__.get("_canon")
        if cached is None:
            cached = _canon(self, ())
            object.__setattr__(self, "_canon", cached)
        return cached


_NODE = dict(frozen=True, eq=True, repr=True)


@dataclass(**_NODE)
class Var(Node):
    name: str


@dataclass(frozen=True, eq=False)
class Const(Node):
    """Integer or boolean literal.  Equality is type-sensitive (True != 1)."""

    value: Union[int, bool]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Const)
            and type(self.value) is type(other.value)
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((type(self.value).__name__, self.value))

    @property
    def base(self) -> BaseType:
        return BaseType.BOOL if isinstance(self.value, bool) else BaseType.INT


TRUE = Const(True)
FALSE = Const(False)


@dataclass(**_NODE)
class Op(Node):
    op: OpTag
    left: "Term"
    right: "Term"


@dataclass(**_NODE)
class App(Node):
    fn: "Term"
    arg: "Term"


@dataclass(**_NODE)
class Abs(Node):
    param: str
    param_type: Type
    body: "Term"


@dataclass(**_NODE)
class Fix(Node):
    param: str
    param_type: Type
    body: "Term"


@dataclass(**_NODE)
class If(Node):
    cond: "Term"
    then: "Term"
    else_: "Term"


@dataclass(**_NODE)
class Err(Node):
    label: str


@dataclass(**_NODE)
class MonC(Node):
    """Classic monitor ``mon^l(C, e)`` over a source contract."""

    label: str
    contract: "Contract"
    subject: "Term"


@dataclass(**_NODE)
class MonE(Node):
    """Efficient monitor ``mon(c, e)`` over a labeled contract."""

    contract: "LabeledContract"
    subject: "Term"


Term = Union[Var, Const, Op, App, Abs, Fix, If, Err, MonC, MonE]


# ---------------------------------------------------------------------------
# Closing substitutions


@dataclass(frozen=True)
class Closing:
    """Finite ordered map from variable names to terms (sigma).

    The identity substitution is the empty map.
    """

    entries: tuple[tuple[str, "Term"], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, "Term"]]:
        return iter(self.entries)

    def __contains__(self, name: object) -> bool:
        return any(k == name for k, _ in self.entries)

    def get(self, name: str, default=None):
        for k, v in self.entries:
            if k == name:
                return v
        return default

    def domain(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)

    def set(self, name: str, value: "Term") -> "Closing":
        if name in self:
            return Closing(tuple((k, value if k == name else v) for k, v in self.entries))
        return Closing(self.entries + ((name, value),))

    def map_values(self, fn: Callable[["Term"], "Term"]) -> "Closing":
        changed = False
        out = []
        for k, v in self.entries:
            nv = fn(v)
            changed = changed or nv is not v
            out.append((k, nv))
        return Closing(tuple(out)) if changed else self

    def is_identity(self) -> bool:
        return not self.entries

    def as_dict(self) -> dict[str, "Term"]:
        return dict(self.entries)


IDENTITY = Closing()


# ---------------------------------------------------------------------------
# Contracts


@dataclass(**_NODE)
class Pred(Node):
    """Source predicate contract ``pred[name]_sigma(body)``."""

    body: "Term"
    sigma: Closing = IDENTITY
    name: str | None = None


@dataclass(**_NODE)
class DepFun(Node):
    """Dependent function contract ``x:C1 -> C2``."""

    param: str
    domain: "Contract"
    codomain: "Contract"


Contract = Union[Pred, DepFun]


@dataclass(**_NODE)
class LPred(Node):
    """A labeled predicate, one element of a predicate stack."""

    label: str
    body: "Term"
    sigma: Closing = IDENTITY
    name: str | None = None

    def unlabeled(self) -> Pred:
        return Pred(self.body, self.sigma, self.name)


@dataclass(**_NODE)
class Stack(Node):
    """Predicate stack ``p1; ...; pn; nil@B``; ``base`` annotates empty stacks."""

    preds: tuple[LPred, ...]
    base: BaseType

    def __len__(self) -> int:
        return len(self.preds)


@dataclass(**_NODE)
class LDepFun(Node):
    param: str
    domain: "LabeledContract"
    codomain: "LabeledContract"


LabeledContract = Union[Stack, LDepFun]

AnyNode = Union[Term, Contract, LabeledContract]


# ---------------------------------------------------------------------------
# Free variables


def _fv_closed(sigma: Closing, body: Node) -> frozenset[str]:
    """fv(sigma(body)) without materialising the substitution."""
    body_fv = body.fv
    if not sigma.entries:
        return body_fv
    out = set()
    dom = set()
    for k, v in sigma.entries:
        dom.add(k)
        if k in body_fv:
            out |= v.fv
    out |= body_fv - dom
    return frozenset(out)


def _compute_fv(n: Node) -> frozenset[str]:
    if isinstance(n, Var):
        return frozenset((n.name,))
    if isinstance(n, (Const, Err)):
        return frozenset()
    if isinstance(n, Op):
        return n.left.fv | n.right.fv
    if isinstance(n, App):
        return n.fn.fv | n.arg.fv
    if isinstance(n, (Abs, Fix)):
        return n.body.fv - {n.param}
    if isinstance(n, If):
        return n.cond.fv | n.then.fv | n.else_.fv
    if isinstance(n, MonC):
        return n.contract.fv | n.subject.fv
    if isinstance(n, MonE):
        return n.contract.fv | n.subject.fv
    if isinstance(n, (Pred, LPred)):
        return _fv_closed(n.sigma, n.body)
    if isinstance(n, (DepFun, LDepFun)):
        return n.domain.fv | (n.codomain.fv - {n.param})
    if isinstance(n, Stack):
        out: frozenset[str] = frozenset()
        for p in n.preds:
            out |= p.fv
        return out
    raise TypeError(f"not a syntax node: {n!r}")


def free_vars(n: Node) -> frozenset[str]:
    return n.fv


# ---------------------------------------------------------------------------
# Alpha-canonical (nameless) form


def _canon(n: Node, env: tuple) -> object:
    """Nameless form: bound variables become de Bruijn indices.

    ``env`` is a tuple of binder names, innermost last.  Variables bound by a
    predicate's closing substitution are kept by name (marked ``sig``) because
    sigma keys are part of the predicate's identity.
    """
    if isinstance(n, Var):
        for i in range(len(env) - 1, -1, -1):
            b = env[i]
            if b == n.name:
                return ("b", len(env) - 1 - i)
            if isinstance(b, frozenset) and n.name in b:
                return ("s", n.name)
        return ("f", n.name)
    if isinstance(n, Const):
        return ("k", type(n.value).__name__, n.value)
    if isinstance(n, Err):
        return ("err", n.label)
    if isinstance(n, Op):
        return ("op", n.op.tag, _canon(n.left, env), _canon(n.right, env))
    if isinstance(n, App):
        return ("app", _canon(n.fn, env), _canon(n.arg, env))
    if isinstance(n, Abs):
        return ("abs", n.param_type, _canon(n.body, env + (n.param,)))
    if isinstance(n, Fix):
        return ("fix", n.param_type, _canon(n.body, env + (n.param,)))
    if isinstance(n, If):
        return ("if", _canon(n.cond, env), _canon(n.then, env), _canon(n.else_, env))
    if isinstance(n, MonC):
        return ("monc", n.label, _canon(n.contract, env), _canon(n.subject, env))
    if isinstance(n, MonE):
        return ("mone", _canon(n.contract, env), _canon(n.subject, env))
    if isinstance(n, (Pred, LPred)):
        label = n.label if isinstance(n, LPred) else None
        if not n.sigma.entries:
            return ("pred", label, n.name, (), _canon(n.body, env))
        # sigma keys are binders of the body: number them by first occurrence
        body = _canon(n.body, env + (frozenset(n.sigma.domain()),))
        order: dict[str, int] = {}
        body = _number_sigma_keys(body, order)
        sig = tuple(_canon(n.sigma.get(k), env) for k in order)
        return ("pred", label, n.name, sig, body)
    if isinstance(n, (DepFun, LDepFun)):
        return ("fun", _canon(n.domain, env), _canon(n.codomain, env + (n.param,)))
    if isinstance(n, Stack):
        return ("stack", n.base.value, tuple(_canon(p, env) for p in n.preds))
    raise TypeError(f"not a syntax node: {n!r}")


def _number_sigma_keys(c: object, order: dict[str, int]) -> object:
    if isinstance(c, tuple):
        if len(c) == 2 and c[0] == "s" and isinstance(c[1], str):
            return ("s", order.setdefault(c[1], len(order)))
        return tuple(_number_sigma_keys(x, order) for x in c)
    return c


def alpha_eq(a: Node, b: Node) -> bool:
    """Equality up to consistent renaming of bound variables."""
    return a is b or a.canon == b.canon


def pred_key(p: Union[Pred, LPred]) -> tuple:
    """Identity of a predicate for implication and census purposes.

    Two keys are equal iff the bodies are alpha-equal and the closing
    substitutions agree pointwise; labels and predicate names are ignored.
    """
    cached = p.__dict__.get("_key")
    if cached is None:
        c = p.canon
        cached = (c[3], c[4])
        object.__setattr__(p, "_key", cached)
    return cached


# ---------------------------------------------------------------------------
# Structural queries


def children(n: Node) -> Iterable[Node]:
    """Immediate sub-nodes, including contracts and sigma ranges."""
    if isinstance(n, (Var, Const, Err)):
        return ()
    if isinstance(n, Op):
        return (n.left, n.right)
    if isinstance(n, App):
        return (n.fn, n.arg)
    if isinstance(n, (Abs, Fix)):
        return (n.body,)
    if isinstance(n, If):
        return (n.cond, n.then, n.else_)
    if isinstance(n, (MonC, MonE)):
        return (n.contract, n.subject)
    if isinstance(n, (Pred, LPred)):
        return tuple(v for _, v in n.sigma.entries) + (n.body,)
    if isinstance(n, (DepFun, LDepFun)):
        return (n.domain, n.codomain)
    if isinstance(n, Stack):
        return n.preds
    raise TypeError(f"not a syntax node: {n!r}")


def walk(n: Node) -> Iterator[Node]:
    """Pre-order traversal (iterative, safe on deep terms)."""
    todo = [n]
    while todo:
        cur = todo.pop()
        yield cur
        todo.extend(reversed(tuple(children(cur))))


def is_source_program(e: Node) -> bool:
    """No runtime-only forms: neither blame errors nor labeled monitors."""
    return not any(isinstance(n, (Err, MonE)) for n in walk(e))


def is_simple(e: Node, engine=None) -> bool:
    """Closed, identity-substituted predicates and redundancy-free stacks.

    ``engine`` decides redundancy inside predicate stacks; the default is
    syntactic equality.
    """
    for n in walk(e):
        if isinstance(n, (Pred, LPred)):
            if n.sigma.entries or n.body.fv:
                return False
        if isinstance(n, Stack):
            ps = n.preds
            for i, p in enumerate(ps):
                for j, q in enumerate(ps):
                    if i == j:
                        continue
                    implied = engine.implies(p, q) if engine is not None else pred_key(p) == pred_key(q)
                    if implied:
                        return False
    return True


def term_size(n: Node) -> int:
    return sum(1 for _ in walk(n))


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """Deterministic fresh variable: ``x$1``, ``x$2``, ... not in ``avoid``."""
    avoid = set(avoid)
    stem = base.split("$", 1)[0]
    i = 1
    while f"{stem}${i}" in avoid:
        i += 1
    return f"{stem}${i}"
