import pytest
from hypothesis import given, strategies as st

from cpcf.ast import App, Const, DepFun, Pred, Var
from cpcf.harness import GenConfig, gen_program
from cpcf.surface import (
    ParseError, parse_contract, parse_pool, parse_rules, parse_term, parse_type, print_contract,
    print_term, print_type,
)

from conftest import PROGRAMS, load


def test_let_desugars_to_application():
    e = parse_term("let f = fun x:Int => x in f 3")
    assert isinstance(e, App)
    assert print_term(e) == "(fun f:Int -> Int => f 3) (fun x:Int => x)"


def test_arrow_types_associate_right():
    t = parse_type("Int -> Int -> Bool")
    assert print_type(t) == "Int -> Int -> Bool"
    assert print_type(parse_type("(Int -> Int) -> Int")) == "(Int -> Int) -> Int"


def test_dependent_contract_binds_domain_name():
    c = parse_contract("x : pred(fun x:Int => x > 0) -> pred(fun y:Int => x >= y)")
    assert isinstance(c, DepFun) and c.param == "x"
    assert "x" in c.codomain.fv


def test_nondependent_contract_arrow():
    c = parse_contract("pred(fun x:Int => true) -> pred(fun x:Int => true)")
    assert isinstance(c, DepFun)
    assert not c.codomain.fv


def test_named_predicate_with_closing_substitution():
    p = parse_contract("pred[down]{x := 3}(fun y:Int => x >= y)")
    assert isinstance(p, Pred) and p.name == "down"
    assert p.sigma.get("x") == Const(3)
    assert parse_contract(print_contract(p)) == p


def test_error_form_is_runtime_only():
    with pytest.raises(ParseError):
        parse_term("err^l")
    assert parse_term("err^l", runtime=True) is not None


def test_parse_error_reports_position_and_expectations():
    with pytest.raises(ParseError) as info:
        parse_term("fun x:Int => ")
    assert info.value.line == 1 and info.value.col > 1


def test_rules_and_pool_files(corpus_dir):
    rules = parse_rules((corpus_dir / "evenodd.impl").read_text())
    assert len(rules.rules) == 8
    pool = parse_pool((corpus_dir / "down.pool").read_text())
    assert len(pool) == 11 and all(p.name == "down" for p in pool)


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_roundtrips(name):
    e = load(name)
    assert parse_term(print_term(e)) == e


@given(st.integers(0, 10_000), st.booleans())
def test_generated_programs_roundtrip(index, dependent):
    e = gen_program(GenConfig(dependent_contracts=dependent), index)
    assert parse_term(print_term(e)) == e


@given(st.integers(-10**6, 10**6))
def test_negative_and_large_constants_roundtrip(k):
    e = App(Var("f"), Const(k)) if k % 2 else Const(k)
    assert parse_term(print_term(e)) == e
