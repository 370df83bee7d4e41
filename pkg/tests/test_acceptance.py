"""Acceptance criteria 1-10.

Each test measures its criterion, prints one ``criterion N: PASS|FAIL``
line (also repeated in the pytest summary) and then asserts.  Thresholds,
sample sizes and time limits are pinned constants below; none is relaxed
to make a criterion pass.
"""

import time

import pytest

from cpcf.ast import BaseType, Const, is_simple
from cpcf.harness import (
    GenConfig, congruence_test, diff_test, gen_program, join_associativity, stack_idempotence,
)
from cpcf.implication import EQUALITY, adequacy_witness, load_rules, verify_axioms
from cpcf.machine import Blame, PreservationError, StuckTerm, Value, run
from cpcf.metering import (
    SizeParams, check_preds_monotone, size_of_contract, source_pred_counts, stack_bound_bits,
)
from cpcf.surface import SourceText, parse_contract, parse_pool

from conftest import ACCEPTANCE_LINES, CORPUS, PROGRAMS, expectations, load

# -- pinned parameters -------------------------------------------------------
C1_LIMIT_S = 1.0
C2_LIMIT_S = 1.0
C3_SIZES = (10, 100, 1000)
C3_MAX_STACK = 2
C3_LIMIT_S = 5.0
C4_N = 1000
C4_MAX_INCONCLUSIVE = 0.20
C4_LIMIT_S = 120.0
C5_TRIPLES = 10_000
C5_IDEMPOTENCE = 1000
C5_LIMIT_S = 60.0
C6_PAIRS = 10_000
C6_LIMIT_S = 60.0
C7_GENERATED = 500
C7_LIMIT_S = 60.0
C8_GENERATED = 500
C8_LIMIT_S = 60.0
C9_LIMIT_S = 30.0
C10_GENERATED = 500
C10_LIMIT_S = 60.0


def record(n: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    in_time = elapsed < limit
    verdict = "PASS" if ok and in_time else "FAIL"
    line = f"criterion {n}: {verdict} - {title} ({detail}; {elapsed:.2f}s of {limit:.0f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok and in_time


def engine_for(name: str):
    want = expectations(name)
    return load_rules(CORPUS / want["rules"]) if "rules" in want else None


def test_criterion_1_odd_golden_trace():
    e = load("odd5")
    t = time.perf_counter()
    c = run(e, mode="classic")
    f = run(e, mode="eff")
    g = run(e, mode="eff", engine=load_rules(CORPUS / "evenodd.impl"))
    elapsed = time.perf_counter() - t
    false = Value(Const(False))
    checks = {
        "classic value": c.outcome == false,
        "classic nesting == 3": c.stats.peak_monitor_nesting == 3,
        "eff value": f.outcome == false,
        "eff monitor count == 1": f.stats.peak_monitor_nesting == 1,
        "eff stack == 3": f.stats.peak_stack_length == 3,
        "rules value": g.outcome == false,
        "rules stack <= 2": g.stats.peak_stack_length <= 2,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"classic {c.outcome} nesting {c.stats.peak_monitor_nesting}; eff {f.outcome} "
              f"monitors {f.stats.peak_monitor_nesting} stack {f.stats.peak_stack_length}; "
              f"rules {g.outcome} stack {g.stats.peak_stack_length}; expected value false; "
              f"failed: {', '.join(failed) or 'none'}")
    assert record(1, "odd 5 golden trace", not failed, detail, elapsed, C1_LIMIT_S), detail


def test_criterion_2_abusive_proxies():
    e = load("abusive")
    t = time.perf_counter()
    c = run(e, mode="classic").outcome
    f = run(e, mode="eff").outcome
    elapsed = time.perf_counter() - t
    ok = c == Blame("l2") and f == Blame("l2")
    detail = f"classic {c}, eff {f}, expected blame: l2 in both"
    assert record(2, "abusive proxies", ok, detail, elapsed, C2_LIMIT_S), detail


def test_criterion_3_downto_scaling():
    engine = load_rules(CORPUS / "down.impl")
    t = time.perf_counter()
    rows = []
    for n in C3_SIZES:
        e = load(f"downTo{n}")
        c = run(e, mode="classic")
        f = run(e, mode="eff", engine=engine)
        rows.append((n, c.stats.peak_monitor_nesting, f.stats.peak_stack_length,
                     c.outcome == f.outcome == Value(Const(0))))
    elapsed = time.perf_counter() - t
    ok = all(nest >= n - 1 and stack <= C3_MAX_STACK and agree for n, nest, stack, agree in rows)
    detail = "; ".join(f"n={n}: nesting {nest}, stack {stack}" for n, nest, stack, _ in rows)
    assert record(3, "downTo scaling", ok, detail, elapsed, C3_LIMIT_S), detail


def test_criterion_4_differential_equivalence():
    t = time.perf_counter()
    simple = diff_test(GenConfig(seed=0), C4_N)
    dependent = diff_test(GenConfig(seed=0, dependent_contracts=True), C4_N)
    elapsed = time.perf_counter() - t
    ok = all(not r.disagreements and r.inconclusive_rate < C4_MAX_INCONCLUSIVE
             for r in (simple, dependent))
    detail = (f"simple: {len(simple.disagreements)} disagreements, "
              f"{simple.inconclusive_rate:.1%} inconclusive, {simple.blame_agreed} blame; "
              f"dependent: {len(dependent.disagreements)} disagreements, "
              f"{dependent.inconclusive_rate:.1%} inconclusive, {dependent.blame_agreed} blame")
    assert record(4, "differential equivalence", ok, detail, elapsed, C4_LIMIT_S), \
        detail + "\n" + simple.format() + "\n" + dependent.format()


def test_criterion_5_join_algebra():
    t = time.perf_counter()
    assoc = join_associativity(C5_TRIPLES, seed=0)
    idem = stack_idempotence(C5_IDEMPOTENCE, seed=0)
    elapsed = time.perf_counter() - t
    ok = not assoc.failures and not idem.failures
    detail = (f"associativity failures {len(assoc.failures)}/{assoc.total}, "
              f"idempotence failures {len(idem.failures)}/{idem.total}")
    assert record(5, "join algebra", ok, detail, elapsed, C5_LIMIT_S), detail


def test_criterion_6_monitor_congruence():
    t = time.perf_counter()
    rep = congruence_test(C6_PAIRS, GenConfig(seed=0))
    elapsed = time.perf_counter() - t
    ok = rep.total == C6_PAIRS and not rep.failures
    detail = f"{len(rep.failures)} failures, {rep.inconclusive} inconclusive of {rep.total}"
    assert record(6, "monitor congruence", ok, detail, elapsed, C6_LIMIT_S), detail


def test_criterion_7_preds_monotone():
    t = time.perf_counter()
    simple_corpus = [n for n in PROGRAMS if is_simple(load(n))]
    programs = [load(n) for n in simple_corpus]
    programs += [gen_program(GenConfig(seed=1), i) for i in range(C7_GENERATED)]
    violations = []
    for i, e in enumerate(programs):
        for mode in ("classic", "eff"):
            rep = check_preds_monotone(e, mode=mode)
            if not rep.holds:
                violations.append((i, mode, rep.violation_step))
    elapsed = time.perf_counter() - t
    ok = bool(simple_corpus) and not violations
    detail = (f"{len(violations)} violations over {len(simple_corpus)} corpus + "
              f"{C7_GENERATED} generated programs, both modes")
    assert record(7, "preds monotonicity", ok, detail, elapsed, C7_LIMIT_S), (detail, violations[:5])


def test_criterion_8_space_bound():
    t = time.perf_counter()
    over = []
    for i in range(C8_GENERATED):
        e = gen_program(GenConfig(seed=2), i)
        counts = source_pred_counts(e)
        by = run(e, mode="eff").stats.peak_stack_by_base
        over += [(i, b, by[b], counts[b]) for b in BaseType if by[b] > counts[b]]
    for name in PROGRAMS:
        e = load(name)
        if is_simple(e):
            counts = source_pred_counts(e)
            by = run(e, mode="eff").stats.peak_stack_by_base
            over += [(name, b, by[b], counts[b]) for b in BaseType if by[b] > counts[b]]
    l8 = SizeParams(label_bits=8)
    hand = {
        "P=4,L=8": stack_bound_bits(4, l8) == 64,
        "P=8,L=8": stack_bound_bits(8, l8) == 192,
        "P=2,L=8": stack_bound_bits(2, l8) == 16,
        "Int->Int at P_Int=4": size_of_contract(
            parse_contract("pred(fun x:Int => true) -> pred(fun x:Int => x > 0)"),
            {BaseType.INT: 4, BaseType.BOOL: 0}, l8) == 128,
    }
    elapsed = time.perf_counter() - t
    ok = not over and all(hand.values())
    detail = (f"{len(over)} stacks above P_B in {C8_GENERATED} generated programs; "
              f"size checks {sum(hand.values())}/{len(hand)}")
    assert record(8, "space bound", ok, detail, elapsed, C8_LIMIT_S), (detail, over[:5], hand)


def test_criterion_9_implication_axioms():
    def pool(name):
        return parse_pool(SourceText.from_file(CORPUS / f"{name}.pool"))

    t = time.perf_counter()
    runs = {
        "equality/down": verify_axioms(EQUALITY, pool("down")),
        "equality/evenodd": verify_axioms(EQUALITY, pool("evenodd")),
        "down.impl": verify_axioms(load_rules(CORPUS / "down.impl"), pool("down")),
        "evenodd.impl": verify_axioms(load_rules(CORPUS / "evenodd.impl"), pool("evenodd")),
    }
    bogus = verify_axioms(load_rules(CORPUS / "bogus.impl"), pool("down"))
    elapsed = time.perf_counter() - t
    witness = adequacy_witness(bogus)
    ok = all(r.passed for r in runs.values()) and not bogus["adequacy"].passed and witness is not None
    shown = "none"
    if witness is not None:
        from cpcf.surface import print_contract, print_term

        p1, p2, k = witness
        shown = f"{print_contract(p1)} vs {print_contract(p2)} at {print_term(k)}"
    detail = (", ".join(f"{k} {'pass' if r.passed else 'FAIL'}" for k, r in runs.items())
              + f"; bogus adequacy witness: {shown}")
    assert record(9, "implication axioms", ok, detail, elapsed, C9_LIMIT_S), detail


def test_criterion_10_type_soundness():
    t = time.perf_counter()
    failures = []
    cases = [(n, load(n), engine_for(n)) for n in PROGRAMS]
    cases += [(f"gen{i}", gen_program(GenConfig(seed=3, dependent_contracts=i % 2 == 1), i), None)
              for i in range(C10_GENERATED)]
    for name, e, engine in cases:
        for mode in ("classic", "eff"):
            try:
                run(e, mode=mode, engine=engine if mode == "eff" else None, instrument=True,
                    stats=False)
            except (StuckTerm, PreservationError) as exc:
                failures.append((name, mode, str(exc)[:200]))
    elapsed = time.perf_counter() - t
    detail = f"{len(failures)} stuck/preservation failures over {len(cases)} programs, both modes"
    assert record(10, "type soundness smoke", not failures, detail, elapsed, C10_LIMIT_S), \
        (detail, failures[:5])
