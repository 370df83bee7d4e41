import pytest
from hypothesis import given, strategies as st

from cpcf.implication import (
    EQUALITY, ImplicationEngine, RuleEvalError, adequacy_witness, load_rules, predicate_catalog,
    verify_axioms,
)
from cpcf.surface import ArityError, SourceText, parse_contract, parse_pool, parse_rules

from conftest import CORPUS, load


def pool(name):
    return parse_pool(SourceText.from_file(CORPUS / f"{name}.pool"))


def down(k):
    return parse_contract(f"pred[down]{{x := {k}}}(fun y:Int => x >= y)")


DOWN = load_rules(CORPUS / "down.impl")


def test_equality_baseline_is_alpha_equality():
    p = parse_contract("pred(fun x:Int => x > 0)")
    q = parse_contract("pred[other](fun z:Int => z > 0)")
    assert EQUALITY.implies(p, q)
    assert not EQUALITY.implies(down(1), down(2))


@given(st.integers(-20, 20), st.integers(-20, 20))
def test_down_rule_matches_its_condition(a, b):
    assert DOWN.implies(down(a), down(b)) == (a <= b)


def test_rules_ignore_predicates_with_open_bindings():
    open_p = parse_contract("pred[down](fun y:Int => x >= y)")
    assert not DOWN.implies(open_p, down(3))


def test_evenodd_table():
    eng = load_rules(CORPUS / "evenodd.impl")
    odd = lambda k: parse_contract(f"pred[odd]{{x := {k}}}(fun b:Bool => b or (x mod 2 = 0))")
    even = lambda k: parse_contract(f"pred[even]{{x := {k}}}(fun b:Bool => b or ((x + 1) mod 2 = 0))")
    assert eng.implies(odd(1), odd(3))
    assert eng.implies(odd(2), even(3))
    assert not eng.implies(odd(3), odd(1))


def test_rule_arity_checked_against_program_catalog():
    catalog = predicate_catalog(load("downTo5"))
    assert "down" in catalog
    with pytest.raises(ArityError):
        parse_rules("rule down implies down when z1 <= z2", catalog)


def test_failing_condition_is_an_error_in_strict_mode():
    rules = parse_rules("rule down implies down when x1 mod 0 = 0")
    with pytest.raises(RuleEvalError):
        ImplicationEngine(rules).implies(down(1), down(2))
    lax = ImplicationEngine(rules, strict=False)
    assert not lax.implies(down(1), down(2)) and lax.warnings == 1


@pytest.mark.parametrize("rules, pool_name", [
    (None, "down"), (None, "evenodd"), ("down.impl", "down"), ("evenodd.impl", "evenodd"),
])
def test_shipped_rule_files_satisfy_the_axioms(rules, pool_name):
    eng = EQUALITY if rules is None else load_rules(CORPUS / rules)
    report = verify_axioms(eng, pool(pool_name))
    assert report.passed, report.format()


def test_bogus_rules_fail_adequacy_with_witness():
    report = verify_axioms(load_rules(CORPUS / "bogus.impl"), pool("down"))
    assert not report["adequacy"].passed
    p1, p2, k = adequacy_witness(report)
    # the witness really separates the two predicates
    from cpcf.implication import _satisfies

    assert _satisfies(p1, k, 1000) and not _satisfies(p2, k, 1000)
    assert load_rules(CORPUS / "bogus.impl").implies(p1, p2)
