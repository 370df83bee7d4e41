import io

from hypothesis import given, strategies as st

from cpcf.ast import Const, is_simple
from cpcf.harness import (
    GenConfig, compare_program, congruence_test, diff_test, gen_program, same_outcome, shrink,
)
from cpcf.machine import Blame, OutOfFuel, Value
from cpcf.surface import parse_term, print_term

from conftest import PROGRAMS, load


def test_generation_is_deterministic():
    cfg = GenConfig(seed=7)
    assert gen_program(cfg, 3) == gen_program(cfg, 3)
    assert gen_program(cfg, 3) != gen_program(cfg, 4)


@given(st.integers(0, 10**5))
def test_simple_configuration_yields_simple_programs(index):
    assert is_simple(gen_program(GenConfig(), index))


def test_same_outcome():
    assert same_outcome(Value(Const(1)), Value(Const(1)))
    assert same_outcome(Blame("a"), Blame("b")) is False
    assert same_outcome(Value(Const(1)), OutOfFuel(5)) is None


def test_corpus_programs_agree():
    for name in PROGRAMS:
        c, f, verdict = compare_program(load(name))
        assert verdict, (name, c, f)


def test_diff_report_totals_add_up():
    rep = diff_test(GenConfig(seed=11, dependent_contracts=True), 100)
    assert rep.total == rep.agreed + rep.inconclusive + len(rep.disagreements)
    assert not rep.disagreements
    buf = io.StringIO()
    rep.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "trial,classic,efficient,verdict"
    assert "disagreements=0" in rep.format()


def test_shrinker_finds_small_failing_term():
    e = parse_term("(fun x:Int => x * 3 + 1) (if true then 5 - 2 else 4)")

    def fails(t):
        return "*" in print_term(t)

    small = shrink(e, fails)
    assert fails(small)
    assert len(print_term(small)) < len(print_term(e))


def test_congruence_small_sample():
    rep = congruence_test(200, GenConfig(seed=5))
    assert rep.total == 200 and not rep.failures


def test_congruence_on_nil_monitor_square():
    from cpcf.ast import BaseType, MonE, Stack
    from cpcf.eval_space import step_eff
    from cpcf.machine import run

    e1 = MonE(Stack((), BaseType.INT), Const(5))
    e2 = step_eff(e1).term
    c = Stack((), BaseType.INT)
    assert run(MonE(c, e1), mode="eff").outcome == run(MonE(c, e2), mode="eff").outcome
