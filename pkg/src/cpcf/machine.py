"""Small-step reduction machine shared by the classic and the efficient semantics.

Reduction is the usual leftmost call-by-value strategy.  Rather than
re-walking the whole term to find the next redex after every step, the
machine keeps the evaluation context as an explicit stack of frames (a
zipper) and refocuses locally: after contracting a redex it only climbs
back out as far as the new focus is a value.  The observable behaviour —
the sequence of whole terms and rule names — is exactly that of the
one-step relation; ``step`` rebuilds the whole term when a caller wants a
single step in isolation.

Each semantics supplies ``classify`` (what to do with the focused term) and
``contract`` (how to rewrite a redex); the shared PCF rules live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .ast import (
    Abs, App, BaseType, Const, Err, FALSE, Fix, If, MonC, MonE, Node, Op, OpTag, TRUE, Var,
)
from .metering import EvalStats, agg, preds
from .subst import subst_term

DEFAULT_FUEL = 100_000
DIV0 = "div0"

# ---------------------------------------------------------------------------
# Outcomes


@dataclass(frozen=True)
class Value:
    term: Node

    def __str__(self) -> str:
        from .surface import print_term

        return f"value: {print_term(self.term)}"


@dataclass(frozen=True)
class Blame:
    label: str

    def __str__(self) -> str:
        return f"blame: {self.label}"


@dataclass(frozen=True)
class OutOfFuel:
    steps: int

    def __str__(self) -> str:
        return "out-of-fuel"


Outcome = Value | Blame | OutOfFuel


class StuckTerm(Exception):
    """No rule applies to a term that is neither a value nor an error (an evaluator bug)."""

    def __init__(self, term: Node, message: str = "") -> None:
        from .surface import print_term

        text = print_term(term)
        if len(text) > 400:
            text = text[:400] + "..."
        super().__init__(f"stuck{': ' + message if message else ''}: {text}")
        self.term = term


class PreservationError(Exception):
    """A reduction step changed the type of the redex or of the whole program."""

    def __init__(self, step: int, rule: str, before, after) -> None:
        super().__init__(f"step {step} ({rule}) changed type {before} to {after}")
        self.step = step
        self.rule = rule
        self.before = before
        self.after = after


# Single-step results


@dataclass(frozen=True)
class NextTerm:
    term: Node
    rule: str


@dataclass(frozen=True)
class AlreadyValue:
    term: Node


@dataclass(frozen=True)
class AlreadyError:
    term: Err


StepResult = NextTerm | AlreadyValue | AlreadyError


# ---------------------------------------------------------------------------
# Frames
#
# Frames are tuples whose first element names the hole position.  For
# monitor frames the hole is always the monitored subject: evaluation never
# enters contracts.

APP_L, APP_R, OP_L, OP_R, IF_C, MON_C, MON_E = "AppL", "AppR", "OpL", "OpR", "If", "MonC", "MonE"

RAISE_RULE = {
    APP_L: "E-AppLRaise",
    APP_R: "E-AppRRaise",
    OP_L: "E-OpLRaise",
    OP_R: "E-OpRRaise",
    IF_C: "E-IfRaise",
    MON_C: "E-MonRaise",
    MON_E: "E-MonCRaise",
}

HOLE = Var("[]")


def plug(frame: tuple, t: Node) -> Node:
    kind = frame[0]
    if kind is APP_L:
        return App(t, frame[1])
    if kind is APP_R:
        return App(frame[1], t)
    if kind is OP_L:
        return Op(frame[1], t, frame[2])
    if kind is OP_R:
        return Op(frame[1], frame[2], t)
    if kind is IF_C:
        return If(t, frame[1], frame[2])
    if kind is MON_C:
        return MonC(frame[1], frame[2], t)
    if kind is MON_E:
        return MonE(frame[1], t)
    raise ValueError(f"unknown frame {kind!r}")


def plug_all(frames: list, t: Node) -> Node:
    for fr in reversed(frames):
        t = plug(fr, t)
    return t


# ---------------------------------------------------------------------------
# Shared PCF rules


def delta(op: OpTag, a: Const, b: Const) -> Node:
    x, y = a.value, b.value
    if op is OpTag.ADD:
        return Const(x + y)
    if op is OpTag.SUB:
        return Const(x - y)
    if op is OpTag.MUL:
        return Const(x * y)
    if op is OpTag.MOD:
        return Err(DIV0) if y == 0 else Const(x % y)
    if op is OpTag.EQ:
        return TRUE if a == b else FALSE
    if op is OpTag.LT:
        return Const(x < y)
    if op is OpTag.LE:
        return Const(x <= y)
    if op is OpTag.GT:
        return Const(x > y)
    if op is OpTag.GE:
        return Const(x >= y)
    if op is OpTag.AND:
        return Const(x and y)
    if op is OpTag.OR:
        return Const(x or y)
    raise ValueError(f"unknown operator {op}")


VALUE = ("value",)
ERROR = ("err",)


class Semantics:
    """Classification and contraction of focused terms; subclasses add monitors."""

    name = "base"
    #: when true, a monitor that surfaces directly under a monitor frame is
    #: handed back to the enclosing monitor (which then joins) instead of
    #: being evaluated in place.
    join_priority = False

    def is_value(self, t: Node) -> bool:
        raise NotImplementedError

    def begin(self) -> None:
        """Hook called at the start of each evaluation."""

    def classify_monitor(self, t: Node) -> tuple:
        raise StuckTerm(t, "unexpected monitor form")

    def classify_app(self, t: App) -> tuple:
        raise StuckTerm(t, "application of a non-function")

    def contract_monitor(self, t: Node, rule: str) -> Node:
        raise StuckTerm(t, f"no contraction for {rule}")

    def classify(self, t: Node) -> tuple:
        if isinstance(t, (Const, Abs)):
            return VALUE
        if isinstance(t, Err):
            return ERROR
        if isinstance(t, App):
            if not self.is_value(t.fn):
                return ("descend", (APP_L, t.arg), t.fn)
            if not self.is_value(t.arg):
                return ("descend", (APP_R, t.fn), t.arg)
            if isinstance(t.fn, Abs):
                return ("redex", "E-Beta")
            return self.classify_app(t)
        if isinstance(t, Op):
            if not self.is_value(t.left):
                return ("descend", (OP_L, t.op, t.right), t.left)
            if not self.is_value(t.right):
                return ("descend", (OP_R, t.op, t.left), t.right)
            if not (isinstance(t.left, Const) and isinstance(t.right, Const)):
                raise StuckTerm(t, "primitive operation on a non-constant")
            return ("redex", "E-Delta")
        if isinstance(t, If):
            if not self.is_value(t.cond):
                return ("descend", (IF_C, t.then, t.else_), t.cond)
            if t.cond == TRUE:
                return ("redex", "E-IfTrue")
            if t.cond == FALSE:
                return ("redex", "E-IfFalse")
            raise StuckTerm(t, "non-boolean condition")
        if isinstance(t, Fix):
            return ("redex", "E-Fix")
        if isinstance(t, (MonC, MonE)):
            return self.classify_monitor(t)
        if isinstance(t, Var):
            raise StuckTerm(t, f"free variable {t.name}")
        raise StuckTerm(t, f"not a term: {type(t).__name__}")

    def contract(self, t: Node, rule: str) -> Node:
        if rule == "E-Beta":
            f = t.fn
            return subst_term(f.body, f.param, t.arg)
        if rule == "E-Delta":
            return delta(t.op, t.left, t.right)
        if rule == "E-IfTrue":
            return t.then
        if rule == "E-IfFalse":
            return t.else_
        if rule == "E-Fix":
            return subst_term(t.body, t.param, t)
        return self.contract_monitor(t, rule)


# ---------------------------------------------------------------------------
# The machine


@dataclass
class RunResult:
    outcome: Outcome
    stats: EvalStats
    trace: Optional[list] = None
    term: Optional[Node] = None

    @property
    def value(self) -> Optional[Node]:
        return self.outcome.term if isinstance(self.outcome, Value) else None


@dataclass
class _Prefix:
    """Aggregates over the evaluation context, one entry per frame depth."""

    count: list = field(default_factory=lambda: [0])
    best: list = field(default_factory=lambda: [0])
    int_max: list = field(default_factory=lambda: [0])
    bool_max: list = field(default_factory=lambda: [0])
    entries: list = field(default_factory=lambda: [0])
    run: list = field(default_factory=lambda: [0])

    def push(self, frame: tuple) -> None:
        a = agg(plug(frame, HOLE))
        is_mon = frame[0] is MON_C or frame[0] is MON_E
        run = self.run[-1] + 1 if is_mon else 0
        self.run.append(run)
        self.count.append(self.count[-1] + a.count)
        self.best.append(max(self.best[-1], a.best, run))
        self.int_max.append(max(self.int_max[-1], a.int_max))
        self.bool_max.append(max(self.bool_max[-1], a.bool_max))
        self.entries.append(self.entries[-1] + a.entries)

    def pop(self) -> None:
        for arr in (self.count, self.best, self.int_max, self.bool_max, self.entries, self.run):
            arr.pop()


class Machine:
    def __init__(self, sem: Semantics, e: Node, fuel: int = DEFAULT_FUEL, trace: bool = False,
                 stats: bool = True, instrument: bool = False,
                 pred_observer: Optional[Callable[[int, frozenset], None]] = None,
                 full_check_every: int = 64) -> None:
        if fuel < 0:
            raise ValueError("fuel must be non-negative")
        self.sem = sem
        self.fuel = fuel
        self.frames: list = []
        self.focus = e
        self.trace = [] if trace else None
        self.collect = stats
        self.stats = EvalStats()
        self.instrument = instrument
        self.pred_observer = pred_observer
        self.full_check_every = full_check_every
        self.prefix = _Prefix()
        self.census: dict = {}
        self._census_keys: list = []

    # -- context maintenance -------------------------------------------------

    def _push(self, frame: tuple) -> None:
        self.frames.append(frame)
        if self.collect:
            self.prefix.push(frame)
            keys = preds(plug(frame, HOLE))
            c = self.census
            for k in keys:
                c[k] = c.get(k, 0) + 1
            self._census_keys.append(keys)

    def _pop(self) -> tuple:
        frame = self.frames.pop()
        if self.collect:
            self.prefix.pop()
            c = self.census
            for k in self._census_keys.pop():
                n = c[k] - 1
                if n:
                    c[k] = n
                else:
                    del c[k]
        return frame

    def term(self) -> Node:
        return plug_all(self.frames, self.focus)

    # -- refocusing ------------------------------------------------------------

    def refocus(self) -> Optional[tuple]:
        """Move to the next redex.  Returns ``("redex", rule)``, ``VALUE`` or ``ERROR``
        (the latter two only once the context is empty), or ``("raise", rule)`` when an
        error must propagate through the innermost frame."""
        sem = self.sem
        frames = self.frames
        while True:
            t = self.focus
            if sem.join_priority and frames and frames[-1][0] is MON_E and isinstance(t, MonE):
                self.focus = plug(self._pop(), t)
                continue
            c = sem.classify(t)
            kind = c[0]
            if kind == "descend":
                self._push(c[1])
                self.focus = c[2]
                continue
            if kind == "value":
                if not frames:
                    return c
                self.focus = plug(self._pop(), t)
                continue
            if kind == "err":
                if not frames:
                    return c
                return ("raise", RAISE_RULE[frames[-1][0]])
            return c

    # -- metrics -----------------------------------------------------------------

    def _merge_pending(self, pending: Optional[str]) -> bool:
        """Is the next step part of merging two adjacent monitors?

        Such states are transient: the join (possibly right after labeling a
        source monitor) removes the extra layer, so they do not count towards
        the settled nesting depth.
        """
        if pending == "E-MonCJoin":
            return True
        if pending == "E-MonLabel":
            f = self.focus
            return isinstance(f.subject, (MonC, MonE)) or bool(self.frames and self.frames[-1][0] == MON_E)
        return False

    def _sample(self, step: int, pending: Optional[str]) -> None:
        p = self.prefix
        a = agg(self.focus)
        raw = max(p.best[-1], a.best)
        if self.frames and p.run[-1]:
            raw = max(raw, p.run[-1] + a.top)
        live_set = None
        if self.pred_observer is not None:
            live_set = frozenset(self.census) | preds(self.focus)
            live = len(live_set)
        else:
            c = self.census
            live = len(c) + sum(1 for k in preds(self.focus) if k not in c)
        self.stats.record(
            step,
            None if self._merge_pending(pending) else raw,
            raw,
            p.count[-1] + a.count,
            max(p.int_max[-1], a.int_max),
            max(p.bool_max[-1], a.bool_max),
            p.entries[-1] + a.entries,
            live,
        )
        if live_set is not None:
            self.pred_observer(step, live_set)

    # -- instrumentation ---------------------------------------------------------

    def _type(self, t: Node):
        from .types import EMPTY, type_of_term

        return type_of_term(EMPTY, t)

    def _check_preserved(self, step: int, rule: str, before, after_term: Node) -> None:
        from .types import compatible

        after = self._type(after_term)
        if not compatible(before, after):
            raise PreservationError(step, rule, before, after)

    # -- main loop ---------------------------------------------------------------

    def run(self) -> RunResult:
        self.sem.begin()
        steps = 0
        top_type = self._type(self.focus) if self.instrument else None
        while True:
            state = self.refocus()
            kind = state[0]
            if self.collect:
                self._sample(steps, state[1] if kind == "redex" else None)
            if kind == "value":
                outcome = Value(self.focus)
                break
            if kind == "err":
                outcome = Blame(self.focus.label)
                break
            if steps >= self.fuel:
                outcome = OutOfFuel(steps)
                break
            rule = state[1]
            if kind == "raise":
                self._pop()  # the error replaces the whole frame
            else:
                redex = self.focus
                before = self._type(redex) if self.instrument else None
                self.focus = self.sem.contract(redex, rule)
                if self.instrument:
                    self._check_preserved(steps + 1, rule, before, self.focus)
            steps += 1
            if self.trace is not None:
                self.trace.append((steps, rule, self.term()))
            if self.instrument and steps % self.full_check_every == 0:
                self._check_preserved(steps, rule, top_type, self.term())
        self.stats.steps = steps
        final = self.term()
        if self.instrument and not isinstance(outcome, OutOfFuel):
            self._check_preserved(steps, "final", top_type, final)
        return RunResult(outcome, self.stats, self.trace, final)

    def step_once(self) -> StepResult:
        state = self.refocus()
        kind = state[0]
        if kind == "value":
            return AlreadyValue(self.focus)
        if kind == "err":
            return AlreadyError(self.focus)
        rule = state[1]
        if kind == "raise":
            self._pop()
        else:
            self.focus = self.sem.contract(self.focus, rule)
        return NextTerm(self.term(), rule)


# ---------------------------------------------------------------------------
# Entry points


def semantics_for(mode: str, engine=None, drop_key: str = "removed") -> Semantics:
    if mode in ("classic", "c", "C"):
        from .eval_classic import ClassicSemantics

        return ClassicSemantics()
    if mode in ("eff", "e", "E", "efficient"):
        from .eval_space import EffSemantics

        return EffSemantics(engine, drop_key)
    raise ValueError(f"unknown mode {mode!r} (expected classic or eff)")


def run(e: Node, mode: str = "classic", engine=None, fuel: int = DEFAULT_FUEL, trace: bool = False,
        stats: bool = True, instrument: bool = False, pred_observer=None,
        drop_key: str = "removed") -> RunResult:
    """Evaluate ``e`` under the chosen semantics."""
    sem = semantics_for(mode, engine, drop_key)
    return Machine(sem, e, fuel, trace=trace, stats=stats or pred_observer is not None,
                   instrument=instrument, pred_observer=pred_observer).run()


def step(e: Node, mode: str = "classic", engine=None, drop_key: str = "removed") -> StepResult:
    """One reduction step of the whole term."""
    sem = semantics_for(mode, engine, drop_key)
    return Machine(sem, e, stats=False).step_once()
