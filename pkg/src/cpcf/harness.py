"""Random well-typed programs and executable equivalence properties.

``gen_program`` builds closed, well-typed source programs of base type.
``diff_test`` runs each under both semantics and compares outcomes;
``congruence_test`` checks that wrapping a term and its one-step reduct in
the same efficient monitor gives the same answer.  ``join_associativity``
and ``stack_idempotence`` exercise the contract algebra directly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .ast import (
    BOOL, INT, Abs, App, Arrow, Base, BaseType, Closing, Const, DepFun, Err, FALSE, Fix, If,
    LDepFun, LPred, MonC, MonE, Node, Op, OpTag, Pred, Stack, TRUE, Type, Var, alpha_eq,
)
from .machine import DEFAULT_FUEL, Blame, OutOfFuel, Value, run
from .surface import parse_contract, print_term
from .types import TypeCheckError, typecheck

INT_INT = Arrow(INT, INT)
INT_BOOL = Arrow(INT, BOOL)
HIGHER = Arrow(INT_INT, INT)

DEFAULT_INT_POOL = (
    "pred[pos](fun x:Int => x > 0)",
    "pred[nonneg](fun x:Int => x >= 0)",
    "pred[even](fun x:Int => x mod 2 = 0)",
    "pred[small](fun x:Int => x < 10 and x > -10)",
    "pred[any](fun x:Int => true)",
    "pred[under50](fun x:Int => x < 50)",
)
DEFAULT_BOOL_POOL = (
    "pred[truthy](fun b:Bool => b)",
    "pred[anyb](fun b:Bool => true)",
    "pred[falsy](fun b:Bool => b = false)",
)


def default_pool() -> dict[BaseType, tuple[Pred, ...]]:
    return {
        BaseType.INT: tuple(parse_contract(s) for s in DEFAULT_INT_POOL),
        BaseType.BOOL: tuple(parse_contract(s) for s in DEFAULT_BOOL_POOL),
    }


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    predicate_pool: Optional[dict] = None
    dependent_contracts: bool = False
    recursion_budget: int = 6
    fuel: int = DEFAULT_FUEL

    def pool(self) -> dict:
        return self.predicate_pool if self.predicate_pool is not None else default_pool()


# ---------------------------------------------------------------------------
# Generation


class _Gen:
    def __init__(self, cfg: GenConfig, rng: random.Random) -> None:
        self.cfg = cfg
        self.rng = rng
        self.pool = cfg.pool()
        self.names = 0
        self.labels = 0

    def fresh(self, stem: str) -> str:
        self.names += 1
        return f"{stem}{self.names}"

    def label(self) -> str:
        self.labels += 1
        return f"l{self.labels}"

    def pick(self, weighted):
        total = sum(w for w, _ in weighted)
        r = self.rng.uniform(0, total)
        for w, f in weighted:
            r -= w
            if r <= 0:
                return f()
        return weighted[-1][1]()

    def vars_of(self, env, ty):
        return [n for n, t in env if t == ty]

    # -- terms ---------------------------------------------------------------

    def term(self, ty: Type, env: list, depth: int) -> Node:
        if ty == INT:
            return self.int_term(env, depth)
        if ty == BOOL:
            return self.bool_term(env, depth)
        if ty == HIGHER:
            return self.higher_fn(env, depth)
        return self.fn(ty, env, depth)

    def leaf(self, ty: Type, env: list) -> Node:
        vs = self.vars_of(env, ty)
        if vs and self.rng.random() < 0.6:
            return Var(self.rng.choice(vs))
        if ty == INT:
            return Const(self.rng.randint(-3, 12))
        return Const(self.rng.random() < 0.6)

    def int_term(self, env, depth):
        rng = self.rng
        if depth <= 0:
            return self.leaf(INT, env)
        d = depth - 1
        return self.pick([
            (2, lambda: self.leaf(INT, env)),
            (3, lambda: Op(rng.choice((OpTag.ADD, OpTag.SUB, OpTag.MUL)),
                           self.int_term(env, d), self.int_term(env, d))),
            (1, lambda: Op(OpTag.MOD, self.int_term(env, d), Const(rng.randint(0, 4)))),
            (2, lambda: If(self.bool_term(env, d), self.int_term(env, d), self.int_term(env, d))),
            (3, lambda: App(self.fn(INT_INT, env, d), self.int_term(env, d))),
            (3, lambda: MonC(self.label(), self.contract(INT, env), self.int_term(env, d))),
            (2, lambda: self.let(INT, env, d)),
            (2, lambda: self.recursion(env, d)),
            (1, lambda: App(self.higher_fn(env, d), self.fn(INT_INT, env, d))),
        ])

    def bool_term(self, env, depth):
        rng = self.rng
        if depth <= 0:
            return self.leaf(BOOL, env)
        d = depth - 1
        return self.pick([
            (2, lambda: self.leaf(BOOL, env)),
            (3, lambda: Op(rng.choice((OpTag.LT, OpTag.LE, OpTag.EQ, OpTag.GT, OpTag.GE)),
                           self.int_term(env, d), self.int_term(env, d))),
            (1, lambda: Op(rng.choice((OpTag.AND, OpTag.OR)), self.bool_term(env, d), self.bool_term(env, d))),
            (1, lambda: If(self.bool_term(env, d), self.bool_term(env, d), self.bool_term(env, d))),
            (2, lambda: App(self.fn(INT_BOOL, env, d), self.int_term(env, d))),
            (2, lambda: MonC(self.label(), self.contract(BOOL, env), self.bool_term(env, d))),
        ])

    def let(self, ty, env, depth):
        bty = self.rng.choice((INT, BOOL, INT_INT))
        x = self.fresh("v")
        bound = self.term(bty, env, depth)
        return App(Abs(x, bty, self.term(ty, env + [(x, bty)], depth)), bound)

    def fn(self, ty: Arrow, env, depth):
        vs = self.vars_of(env, ty)
        if vs and self.rng.random() < 0.3:
            return Var(self.rng.choice(vs))
        x = self.fresh("x")
        lam = Abs(x, INT, self.term(ty.codomain, env + [(x, INT)], max(depth - 1, 0)))
        r = self.rng.random()
        if r < 0.35:
            return MonC(self.label(), self.contract(ty, env), lam)
        if r < 0.5:
            inner = MonC(self.label(), self.contract(ty, env), lam)
            return MonC(self.label(), self.contract(ty, env), inner)
        return lam

    def higher_fn(self, env, depth):
        f = self.fresh("f")
        inner = env + [(f, INT_INT)]
        body = App(Var(f), self.int_term(inner, max(depth - 2, 0)))
        if self.rng.random() < 0.5:
            body = Op(OpTag.ADD, body, self.int_term(inner, max(depth - 2, 0)))
        lam = Abs(f, INT_INT, body)
        if self.rng.random() < 0.6:
            return MonC(self.label(), self.contract(HIGHER, env), lam)
        return lam

    def recursion(self, env, depth):
        """A bounded countdown, optionally under a (dependent) function contract."""
        f, n = self.fresh("rec"), self.fresh("n")
        body_env = env + [(n, INT)]
        base = self.int_term(body_env, max(depth - 2, 0))
        call = App(Var(f), Op(OpTag.SUB, Var(n), Const(1)))
        if self.rng.random() < 0.3:
            call = Op(OpTag.ADD, Var(n), call)
        lam = Abs(n, INT, If(Op(OpTag.LE, Var(n), Const(0)), base, call))
        if self.rng.random() < 0.6:
            lam = MonC(self.label(), self.contract(INT_INT, env, recursive=True), lam)
        start = Const(self.rng.randint(0, self.cfg.recursion_budget))
        return App(Fix(f, INT_INT, lam), start)

    # -- contracts ---------------------------------------------------------------

    def contract(self, ty: Type, env, recursive: bool = False) -> Node:
        if isinstance(ty, Base):
            return self.pred(ty.tag, env)
        if ty == HIGHER:
            f = self.fresh("g")
            dom = self.contract(INT_INT, env)
            cod_env = env + [(f, INT_INT)] if self.cfg.dependent_contracts else env
            return DepFun(f, dom, self.contract(INT, cod_env))
        x = self.fresh("x")
        dom = self.pred(BaseType.INT, env)
        cod_env = env + [(x, INT)] if self.cfg.dependent_contracts else env
        if recursive and self.cfg.dependent_contracts and ty.codomain == INT and self.rng.random() < 0.6:
            y = self.fresh("y")
            cod = Pred(Abs(y, INT, Op(OpTag.GE, Op(OpTag.ADD, Var(x), Const(self.rng.randint(0, 60))), Var(y))),
                       name="down")
            return DepFun(x, dom, cod)
        return DepFun(x, dom, self.contract(ty.codomain, cod_env))

    def pred(self, base: BaseType, env) -> Pred:
        rng = self.rng
        if self.cfg.dependent_contracts and rng.random() < 0.5:
            ints = self.vars_of(env, INT)
            fns = self.vars_of(env, INT_INT)
            y = self.fresh("y")
            if base is BaseType.INT:
                if fns and rng.random() < 0.4:
                    g = rng.choice(fns)
                    return Pred(Abs(y, INT, Op(OpTag.GE, App(Var(g), Const(rng.randint(-1, 3))),
                                              Op(OpTag.SUB, Var(y), Const(100)))))
                if ints:
                    v = rng.choice(ints)
                    op = rng.choice((OpTag.GE, OpTag.LE))
                    k = rng.randint(0, 30)
                    bound = Op(OpTag.ADD, Var(v), Const(k)) if op is OpTag.GE else Op(OpTag.SUB, Var(v), Const(k))
                    return Pred(Abs(y, INT, Op(op, bound, Var(y))))
            else:
                if ints:
                    v = rng.choice(ints)
                    return Pred(Abs(y, BOOL, Op(OpTag.OR, Var(y), Op(OpTag.GE, Var(v), Const(rng.randint(-5, 5))))))
        return rng.choice(self.pool[base])


def gen_program(cfg: GenConfig, index: int = 0, max_attempts: int = 20) -> Node:
    """A closed, well-typed source program of base type, deterministic in (seed, index)."""
    depth = cfg.max_depth
    for attempt in range(max_attempts):
        rng = random.Random((cfg.seed * 1_000_003 + index) * 64 + attempt)
        g = _Gen(cfg, rng)
        ty = INT if rng.random() < 0.7 else BOOL
        e = g.term(ty, [], depth)
        try:
            typecheck(e)
        except (TypeCheckError, RecursionError):
            if attempt % 4 == 3 and depth > 1:
                depth -= 1
            continue
        return e
    raise RuntimeError("could not generate a well-typed program")


# ---------------------------------------------------------------------------
# Outcome comparison


def same_outcome(a, b) -> Optional[bool]:
    """True/False for agreement; None when either side ran out of fuel."""
    if isinstance(a, OutOfFuel) or isinstance(b, OutOfFuel):
        return None
    if isinstance(a, Blame) and isinstance(b, Blame):
        return a.label == b.label
    if isinstance(a, Value) and isinstance(b, Value):
        ta, tb = a.term, b.term
        if isinstance(ta, Const) or isinstance(tb, Const):
            return ta == tb
        return True  # function results are not observable
    return False


@dataclass
class Disagreement:
    program: str
    classic: object
    efficient: object
    shrunk: Optional[str] = None
    index: int = -1


@dataclass
class DiffReport:
    total: int = 0
    agreed: int = 0
    blame_agreed: int = 0
    inconclusive: int = 0
    disagreements: list = field(default_factory=list)
    trials: list = field(default_factory=list)

    @property
    def inconclusive_rate(self) -> float:
        return self.inconclusive / self.total if self.total else 0.0

    def format(self) -> str:
        lines = [
            f"total={self.total}",
            f"agreed={self.agreed}",
            f"blameAgreed={self.blame_agreed}",
            f"inconclusive={self.inconclusive}",
            f"disagreements={len(self.disagreements)}",
        ]
        for d in self.disagreements:
            lines.append(f"-- trial {d.index}: classic {d.classic} / efficient {d.efficient}")
            lines.append(f"   program: {d.program}")
            if d.shrunk is not None:
                lines.append(f"   shrunk:  {d.shrunk}")
        return "\n".join(lines)

    def write_csv(self, fh) -> None:
        import csv

        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "classic", "efficient", "verdict"])
        w.writerows(self.trials)


def compare_program(e: Node, engine=None, fuel: int = DEFAULT_FUEL, drop_key: str = "removed"):
    c = run(e, mode="classic", fuel=fuel, stats=False).outcome
    f = run(e, mode="eff", engine=engine, fuel=fuel, stats=False, drop_key=drop_key).outcome
    return c, f, same_outcome(c, f)


def diff_test(cfg: GenConfig, n: int, engine=None, shrink_failures: bool = True) -> DiffReport:
    rep = DiffReport()
    for i in range(n):
        e = gen_program(cfg, i)
        c, f, verdict = compare_program(e, engine, cfg.fuel)
        rep.total += 1
        if verdict is None:
            rep.inconclusive += 1
            word = "inconclusive"
        elif verdict:
            rep.agreed += 1
            if isinstance(c, Blame):
                rep.blame_agreed += 1
            word = "agree"
        else:
            d = Disagreement(print_term(e), c, f, index=i)
            if shrink_failures:
                small = shrink(e, lambda t: compare_program(t, engine, cfg.fuel)[2] is False)
                d.shrunk = print_term(small)
            rep.disagreements.append(d)
            word = "disagree"
        rep.trials.append((i, str(c), str(f), word))
    return rep


# ---------------------------------------------------------------------------
# Shrinking


def _term_children(e: Node) -> list:
    if isinstance(e, Op):
        return [e.left, e.right]
    if isinstance(e, App):
        return [e.fn, e.arg]
    if isinstance(e, (Abs, Fix)):
        return [e.body]
    if isinstance(e, If):
        return [e.cond, e.then, e.else_]
    if isinstance(e, (MonC, MonE)):
        return [e.subject]
    return []


def _rebuild(e: Node, kids: list) -> Node:
    if isinstance(e, Op):
        return Op(e.op, *kids)
    if isinstance(e, App):
        return App(*kids)
    if isinstance(e, (Abs, Fix)):
        return type(e)(e.param, e.param_type, kids[0])
    if isinstance(e, If):
        return If(*kids)
    if isinstance(e, MonC):
        return MonC(e.label, e.contract, kids[0])
    if isinstance(e, MonE):
        return MonE(e.contract, kids[0])
    return e


def _positions(e: Node, path=()):
    yield path, e
    for i, ch in enumerate(_term_children(e)):
        yield from _positions(ch, path + (i,))


def _replace(e: Node, path: tuple, new: Node) -> Node:
    if not path:
        return new
    kids = _term_children(e)
    kids[path[0]] = _replace(kids[path[0]], path[1:], new)
    return _rebuild(e, kids)


def shrink(e: Node, still_fails: Callable[[Node], bool], max_rounds: int = 200) -> Node:
    """Greedy structural shrinking: replace subterms by constants or by their own subterms."""
    def ok(t: Node) -> bool:
        try:
            typecheck(t)
        except TypeCheckError:
            return False
        return t.fv == frozenset() and still_fails(t)

    from .ast import term_size

    for _ in range(max_rounds):
        improved = False
        size = term_size(e)
        for path, sub in list(_positions(e)):
            candidates = [Const(0), Const(1), TRUE, FALSE] + _term_children(sub)
            for cand in candidates:
                if cand is sub:
                    continue
                t = _replace(e, path, cand)
                if term_size(t) < size and ok(t):
                    e = t
                    improved = True
                    break
            if improved:
                break
        if not improved:
            return e
    return e


# ---------------------------------------------------------------------------
# Monitor congruence


@dataclass
class CongruenceReport:
    total: int = 0
    agreed: int = 0
    inconclusive: int = 0
    failures: list = field(default_factory=list)


def congruence_test(samples: int, cfg: GenConfig, engine=None, window: int = 40) -> CongruenceReport:
    """For sampled efficient-semantics states e1 -> e2, compare mon(c, e1) with mon(c, e2)."""
    from .eval_space import label_contract

    rep = CongruenceReport()
    i = 0
    while rep.total < samples:
        e = gen_program(cfg, i)
        rng = random.Random(cfg.seed * 7_919 + i)
        i += 1
        tr = run(e, mode="eff", engine=engine, fuel=window, trace=True, stats=False).trace
        states = [e] + [t for _, _, t in tr]
        if len(states) < 2:
            continue
        j = rng.randrange(len(states) - 1)
        e1, e2 = states[j], states[j + 1]
        ty = typecheck(e)
        g = _Gen(cfg, rng)
        c = label_contract(g.label(), g.contract(ty, []))
        a = run(MonE(c, e1), mode="eff", engine=engine, fuel=cfg.fuel, stats=False).outcome
        b = run(MonE(c, e2), mode="eff", engine=engine, fuel=cfg.fuel, stats=False).outcome
        rep.total += 1
        v = same_outcome(a, b)
        if v is None:
            rep.inconclusive += 1
        elif v:
            rep.agreed += 1
        else:
            rep.failures.append((print_term(e1), print_term(e2), a, b))
    return rep


# ---------------------------------------------------------------------------
# Contract algebra properties


def _gen_lpred(rng: random.Random, base: BaseType, binders: Sequence[str], dependent: bool) -> LPred:
    label = f"l{rng.randint(1, 3)}"
    if base is BaseType.BOOL:
        body = rng.choice(DEFAULT_BOOL_POOL)
        p = parse_contract(body)
        return LPred(label, p.body, p.sigma, p.name)
    r = rng.random()
    if dependent and binders and r < 0.4:
        x = rng.choice(binders)
        return LPred(label, Abs("y", INT, Op(OpTag.GE, Var(x), Var("y"))), name="down")
    if r < 0.7:
        k = rng.randint(0, 4)
        return LPred(label, Abs("y", INT, Op(OpTag.GE, Var("x"), Var("y"))),
                     Closing((("x", Const(k)),)), name="down")
    p = parse_contract(rng.choice(DEFAULT_INT_POOL[:4]))
    return LPred(label, p.body, p.sigma, p.name)


def gen_labeled(rng: random.Random, ty: Type, binders: Sequence[str] = (), dependent: bool = True,
                engine=None) -> Node:
    """A labeled contract of type ``ty`` whose stacks are redundancy-free under ``engine``
    (as every stack built by joins is)."""
    from .eval_space import join

    if isinstance(ty, Base):
        n = rng.randint(0, 3)
        raw = Stack(tuple(_gen_lpred(rng, ty.tag, binders, dependent) for _ in range(n)), ty.tag)
        return join(raw, Stack((), ty.tag), engine)
    x = rng.choice(("x", "z"))
    dom = gen_labeled(rng, ty.domain, binders, dependent, engine)
    inner = tuple(binders) + ((x,) if ty.domain == INT else ())
    return LDepFun(x, dom, gen_labeled(rng, ty.codomain, inner, dependent, engine))


ALGEBRA_TYPES = (INT, BOOL, INT_INT, Arrow(INT, INT_INT), Arrow(INT_INT, INT))


@dataclass
class AlgebraReport:
    total: int = 0
    failures: list = field(default_factory=list)


def join_associativity(n: int, seed: int = 0, engine=None, drop_key: str = "removed") -> AlgebraReport:
    from .eval_space import join

    rng = random.Random(seed)
    rep = AlgebraReport()
    for _ in range(n):
        ty = rng.choice(ALGEBRA_TYPES)
        c1, c2, c3 = (gen_labeled(rng, ty, engine=engine) for _ in range(3))
        left = join(c1, join(c2, c3, engine, drop_key), engine, drop_key)
        right = join(join(c1, c2, engine, drop_key), c3, engine, drop_key)
        rep.total += 1
        if not alpha_eq(left, right):
            rep.failures.append((c1, c2, c3, left, right))
    return rep


def stack_idempotence(n: int, seed: int = 0, engine=None, drop_key: str = "removed") -> AlgebraReport:
    """Checking join(r1, r2) and join(r1, drop(r2, p)) against k with p(k) gives the same outcome."""
    from .eval_space import drop, join
    from .implication import _satisfies

    rng = random.Random(seed)
    rep = AlgebraReport()
    while rep.total < n:
        r1 = gen_labeled(rng, INT, dependent=False, engine=engine)
        r2 = gen_labeled(rng, INT, dependent=False, engine=engine)
        p = _gen_lpred(rng, BaseType.INT, (), False)
        k = Const(rng.randint(-6, 8))
        if not _satisfies(p, k, 1000):
            continue
        a = Stack(join(r1, r2, engine, drop_key).preds, BaseType.INT)
        b = join(r1, Stack(drop(r2.preds, p, engine, drop_key), BaseType.INT), engine, drop_key)
        oa = run(MonE(a, k), mode="eff", engine=engine, stats=False).outcome
        ob = run(MonE(b, k), mode="eff", engine=engine, stats=False).outcome
        rep.total += 1
        if oa != ob:
            rep.failures.append((r1, r2, p, k, oa, ob))
    return rep
