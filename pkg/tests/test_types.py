import pytest
from hypothesis import given, strategies as st

from cpcf.ast import BOOL, INT, Arrow
from cpcf.harness import GenConfig, gen_program
from cpcf.surface import parse_term
from cpcf.types import (
    BAD_PREDICATE_TYPE, MISMATCH, NOT_A_FUNCTION, UNBOUND_VAR, TypeCheckError, typecheck,
)

from conftest import PROGRAMS, load


@pytest.mark.parametrize("src, ty", [
    ("1 + 2", INT),
    ("1 < 2", BOOL),
    ("fun x:Int => x = 0", Arrow(INT, BOOL)),
    ("mu (f:Int -> Int). fun x:Int => f x", Arrow(INT, INT)),
    ("mon^l(pred(fun x:Int => x > 0), 3)", INT),
    ("mon^l(x : pred(fun x:Int => true) -> pred(fun y:Int => y > x), fun n:Int => n + 1)",
     Arrow(INT, INT)),
    ("true = false", BOOL),
])
def test_well_typed(src, ty):
    assert typecheck(parse_term(src)) == ty


@pytest.mark.parametrize("src, kind", [
    ("1 + true", MISMATCH),
    ("x", UNBOUND_VAR),
    ("(1) 2", NOT_A_FUNCTION),
    ("mon^l(pred(fun x:Int => x), 3)", BAD_PREDICATE_TYPE),
    ("if 1 then 2 else 3", MISMATCH),
    ("mon^l(pred(fun b:Bool => b), 3)", MISMATCH),
])
def test_ill_typed(src, kind):
    with pytest.raises(TypeCheckError) as info:
        typecheck(parse_term(src))
    assert info.value.kind == kind


def test_error_has_any_type():
    assert typecheck(parse_term("if true then 1 else err^l", runtime=True)) == INT


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_programs_have_base_type(name):
    assert typecheck(load(name)) in (INT, BOOL)


@given(st.integers(0, 100_000), st.booleans())
def test_generated_programs_are_closed_well_typed_source(index, dependent):
    from cpcf.ast import is_source_program

    e = gen_program(GenConfig(dependent_contracts=dependent), index)
    assert not e.fv
    assert typecheck(e) in (INT, BOOL)
    assert is_source_program(e)
