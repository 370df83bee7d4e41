"""Predicate extraction, static contract size and runtime space statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .ast import (
    BaseType, DepFun, LDepFun, LPred, MonC, MonE, Node, Pred, Stack, children, pred_key,
)

# ---------------------------------------------------------------------------
# preds(e)


def preds(n: Node) -> frozenset:
    """The set of (body, sigma) predicate keys occurring anywhere in ``n``.

    Follows the structural definition: a predicate contributes its own key,
    plus whatever its body and its closing-substitution range contain.
    """
    cached = n.__dict__.get("_preds")
    if cached is not None:
        return cached
    out: set = set()
    if isinstance(n, (Pred, LPred)):
        out.add(pred_key(n))
    for ch in children(n):
        out |= preds(ch)
    result = frozenset(out)
    object.__setattr__(n, "_preds", result)
    return result


def pred_base(p: Pred | LPred, env=None) -> Optional[BaseType]:
    """Base type a predicate checks, or None when it cannot be determined."""
    from .ast import Abs, Base
    from .types import EMPTY, TypeCheckError, type_of_contract

    body = p.body
    if isinstance(body, Abs) and isinstance(body.param_type, Base):
        return body.param_type.tag
    try:
        t = type_of_contract(env or EMPTY, p.unlabeled() if isinstance(p, LPred) else p)
    except TypeCheckError:
        return None
    return t.tag


def source_pred_counts(e: Node) -> dict[BaseType, int]:
    """P_B: number of distinct predicates at each base type in a program."""
    seen: dict[BaseType, set] = {b: set() for b in BaseType}
    from .ast import walk

    for n in walk(e):
        if isinstance(n, (Pred, LPred)):
            b = pred_base(n)
            if b is not None:
                seen[b].add(pred_key(n))
    return {b: len(s) for b, s in seen.items()}


# ---------------------------------------------------------------------------
# Static size


@dataclass(frozen=True)
class SizeParams:
    label_bits: int = 8

    def __post_init__(self) -> None:
        if self.label_bits < 1:
            raise ValueError("label_bits must be at least 1")


def log2_bits(n: int) -> int:
    """ceil(log2 n), floored at one bit."""
    return max(1, math.ceil(math.log2(max(n, 2))))


def stack_bound_bits(p_b: int, params: SizeParams = SizeParams()) -> int:
    """S_B = L * P_B * log2 P_B."""
    return params.label_bits * p_b * log2_bits(p_b)


def size_of_contract(c: Node, counts: Mapping[BaseType, int], params: SizeParams = SizeParams(),
                     env=None) -> int:
    """Bits needed to represent contract ``c`` given the program's P_B counts."""
    if isinstance(c, (DepFun, LDepFun)):
        return size_of_contract(c.domain, counts, params) + size_of_contract(c.codomain, counts, params)
    if isinstance(c, Stack):
        return stack_bound_bits(counts.get(c.base, 0), params)
    if isinstance(c, (Pred, LPred)):
        b = pred_base(c, env)
        return stack_bound_bits(counts.get(b, 0), params)
    raise TypeError(f"not a contract: {c!r}")


# ---------------------------------------------------------------------------
# Structural space aggregates


@dataclass(frozen=True)
class Agg:
    """Space summary of a subtree.

    ``count``  monitor nodes; ``top`` length of the run of directly nested
    monitors starting at the root; ``best`` longest such run anywhere;
    ``int_max``/``bool_max`` longest predicate stack per base type;
    ``entries`` total predicate-stack entries.
    """

    count: int = 0
    top: int = 0
    best: int = 0
    int_max: int = 0
    bool_max: int = 0
    entries: int = 0


ZERO = Agg()


def agg(n: Node) -> Agg:
    cached = n.__dict__.get("_agg")
    if cached is not None:
        return cached
    count = best = int_max = bool_max = entries = 0
    top_child = 0
    subject = n.subject if isinstance(n, (MonC, MonE)) else None
    for ch in children(n):
        a = agg(ch)
        count += a.count
        best = max(best, a.best)
        int_max = max(int_max, a.int_max)
        bool_max = max(bool_max, a.bool_max)
        entries += a.entries
        if ch is subject:
            top_child = a.top
    top = 0
    if subject is not None:
        count += 1
        top = 1 + top_child
        best = max(best, top)
    if isinstance(n, Stack):
        k = len(n.preds)
        entries += k
        if n.base is BaseType.INT:
            int_max = max(int_max, k)
        else:
            bool_max = max(bool_max, k)
    result = Agg(count, top, best, int_max, bool_max, entries)
    object.__setattr__(n, "_agg", result)
    return result


# ---------------------------------------------------------------------------
# Runtime statistics


SERIES_CAP = 100_000


@dataclass
class EvalStats:
    steps: int = 0
    peak_monitor_nesting: int = 0
    peak_monitor_count: int = 0
    peak_stack_length: int = 0
    peak_stack_by_base: dict = field(default_factory=lambda: {b: 0 for b in BaseType})
    live_pred_peak: int = 0
    series: list = field(default_factory=list)
    series_stride: int = 1
    _seen: int = 0

    def record(self, step: int, nesting: Optional[int], raw_nesting: int, count: int,
               int_max: int, bool_max: int, entries: int, live: Optional[int]) -> None:
        if nesting is not None and nesting > self.peak_monitor_nesting:
            self.peak_monitor_nesting = nesting
        if count > self.peak_monitor_count:
            self.peak_monitor_count = count
        by = self.peak_stack_by_base
        if int_max > by[BaseType.INT]:
            by[BaseType.INT] = int_max
        if bool_max > by[BaseType.BOOL]:
            by[BaseType.BOOL] = bool_max
        m = max(int_max, bool_max)
        if m > self.peak_stack_length:
            self.peak_stack_length = m
        if live is not None and live > self.live_pred_peak:
            self.live_pred_peak = live
        if self._seen % self.series_stride == 0:
            self.series.append((step, raw_nesting, entries))
            if len(self.series) >= SERIES_CAP:
                self.series = self.series[::2]
                self.series_stride *= 2
        self._seen += 1

    def summary(self) -> dict[str, object]:
        return {
            "steps": self.steps,
            "peakMonitorNesting": self.peak_monitor_nesting,
            "peakMonitorCount": self.peak_monitor_count,
            "peakStackLength": self.peak_stack_length,
            "peakStackLengthInt": self.peak_stack_by_base[BaseType.INT],
            "peakStackLengthBool": self.peak_stack_by_base[BaseType.BOOL],
            "livePredPeak": self.live_pred_peak,
        }


def format_summary(summary: Mapping[str, object]) -> str:
    return "\n".join(f"{k}={v}" for k, v in summary.items())


def write_series_csv(stats: EvalStats, fh) -> None:
    import csv

    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step", "monitorNesting", "totalStackEntries"])
    w.writerows(stats.series)


# ---------------------------------------------------------------------------
# Preds monotonicity


class PreconditionError(Exception):
    pass


@dataclass
class MonotoneReport:
    holds: bool
    steps: int
    outcome: object
    violation_step: Optional[int] = None
    introduced: frozenset = frozenset()


def check_preds_monotone(e: Node, mode: str = "eff", engine=None, fuel: int = 100_000) -> MonotoneReport:
    """Step ``e`` to completion asserting preds(e_{i+1}) is a subset of preds(e_i)."""
    from .ast import is_simple
    from .machine import run

    if not is_simple(e, engine):
        raise PreconditionError("program does not use simple contracts")
    state = {"prev": None, "bad": None}

    def observe(step: int, live: frozenset) -> None:
        prev = state["prev"]
        if prev is not None and state["bad"] is None and not live <= prev:
            state["bad"] = (step, live - prev)
        state["prev"] = live

    result = run(e, mode=mode, engine=engine, fuel=fuel, pred_observer=observe)
    bad = state["bad"]
    if bad is None:
        return MonotoneReport(True, result.stats.steps, result.outcome)
    return MonotoneReport(False, result.stats.steps, result.outcome, bad[0], frozenset(bad[1]))
