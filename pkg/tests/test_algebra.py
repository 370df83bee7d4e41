import random

import pytest
from hypothesis import given, strategies as st

from cpcf.ast import INT, BaseType, Const, LDepFun, LPred, MonE, Stack, Var, alpha_eq, pred_key
from cpcf.eval_space import ShapeMismatch, drop, join, label_contract, wrap
from cpcf.harness import ALGEBRA_TYPES, gen_labeled, join_associativity, stack_idempotence
from cpcf.implication import load_rules
from cpcf.surface import parse_contract, print_contract

from conftest import CORPUS

DOWN = load_rules(CORPUS / "down.impl")


def lp(src: str, label: str = "l") -> LPred:
    p = parse_contract(src)
    return LPred(label, p.body, p.sigma, p.name)


def stack(*ps) -> Stack:
    return Stack(tuple(ps), BaseType.INT)


POS = lp("pred[pos](fun x:Int => x > 0)")
EVEN = lp("pred[even](fun x:Int => x mod 2 = 0)")


def down(k: int, label: str = "l") -> LPred:
    return lp(f"pred[down]{{x := {k}}}(fun y:Int => x >= y)", label)


def test_label_attaches_label_everywhere():
    c = parse_contract("x : pred(fun x:Int => x > 0) -> pred(fun y:Int => x >= y)")
    lc = label_contract("m", c)
    assert isinstance(lc, LDepFun)
    assert [p.label for p in lc.domain.preds] == ["m"]
    assert [p.label for p in lc.codomain.preds] == ["m"]


def test_join_keeps_new_checks_first_and_drops_duplicates():
    inner = stack(lp("pred(fun x:Int => x > 0)", "a"), EVEN)
    outer = stack(lp("pred(fun x:Int => x > 0)", "b"))
    j = join(inner, outer)
    assert [p.label for p in j.preds] == ["a", "l"]


def test_join_with_rules_collapses_down_chain():
    j = join(stack(down(3)), stack(down(5)), DOWN)
    assert j.preds == (down(3),)
    j = join(stack(down(5)), stack(down(3)), DOWN)
    assert j.preds == (down(5), down(3))


def test_drop_modes():
    preds = (down(2), down(4), POS)
    assert drop(preds, down(1), DOWN, "removed") == (POS,)
    assert drop(preds, down(1), DOWN, "probe") == (POS,)
    assert drop(preds, POS) == (down(2), down(4))


def test_join_function_contracts_is_contravariant_in_domain():
    c1 = LDepFun("x", stack(lp("pred(fun x:Int => x > 0)", "a")), stack())
    c2 = LDepFun("x", stack(lp("pred(fun x:Int => x > 1)", "b")), stack())
    j = join(c1, c2)
    assert [p.label for p in j.domain.preds] == ["b", "a"]


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        join(stack(POS), LDepFun("x", stack(), stack()))


def test_wrap_monitors_the_dependent_variable():
    c = stack(lp("pred(fun y:Int => x >= y)"))
    w = wrap(c, "x", stack(POS))
    entry = w.preds[0].sigma.get("x")
    assert isinstance(entry, MonE) and entry.subject == Var("x")
    assert wrap(c, "z", stack(POS)) is c
    assert wrap(c, "x", stack()) is c


@given(st.integers(0, 10**6), st.sampled_from(ALGEBRA_TYPES))
def test_join_with_empty_is_identity_on_normalized_contracts(seed, ty):
    rng = random.Random(seed)
    c = gen_labeled(rng, ty, dependent=False)
    empty = gen_labeled(random.Random(0), ty, dependent=False)
    empty = _strip(empty)
    assert alpha_eq(join(c, empty), c)
    assert alpha_eq(join(empty, c), c)


def _strip(c):
    if isinstance(c, Stack):
        return Stack((), c.base)
    return LDepFun(c.param, _strip(c.domain), _strip(c.codomain))


@given(st.integers(0, 10**6), st.sampled_from(ALGEBRA_TYPES), st.sampled_from(["removed", "probe"]))
def test_joined_stacks_are_redundancy_free(seed, ty, dk):
    rng = random.Random(seed)
    c1, c2 = gen_labeled(rng, ty, dependent=False), gen_labeled(rng, ty, dependent=False)
    assert _no_duplicates(join(c1, c2, None, dk))


def _no_duplicates(c) -> bool:
    if isinstance(c, Stack):
        keys = [pred_key(p) for p in c.preds]
        return len(keys) == len(set(keys))
    return _no_duplicates(c.domain) and _no_duplicates(c.codomain)


@given(st.integers(0, 10**6), st.sampled_from(ALGEBRA_TYPES))
def test_join_is_associative_for_closed_contracts(seed, ty):
    rng = random.Random(seed)
    c1, c2, c3 = (gen_labeled(rng, ty, dependent=False) for _ in range(3))
    assert alpha_eq(join(c1, join(c2, c3)), join(join(c1, c2), c3))


@given(st.integers(0, 10**6))
def test_join_is_idempotent_on_stacks(seed):
    c = gen_labeled(random.Random(seed), INT, dependent=False)
    assert join(c, c) == c


@given(st.lists(st.integers(-3, 8), max_size=6), st.integers(-3, 8))
def test_drop_keeps_an_ordered_subsequence(ks, k):
    preds = tuple(down(i) for i in ks)
    for dk in ("removed", "probe"):
        out = drop(preds, down(k), DOWN, dk)
        it = iter(preds)
        assert all(any(q == p for p in it) for q in out)
    # probing with the key itself removes every entry it implies
    out = drop(preds, down(k), DOWN, "probe")
    assert all(not DOWN.implies(down(k), q) for q in out)
    # with a shifting key the scan can only remove less than with the fixed key
    assert len(drop(preds, down(k), DOWN, "removed")) >= len(out)


def test_stack_idempotence_outcomes():
    assert not stack_idempotence(200, seed=3).failures
    assert not stack_idempotence(200, seed=3, engine=DOWN).failures


def test_associativity_report_counts_triples():
    rep = join_associativity(50, seed=1)
    assert rep.total == 50
    for c1, c2, c3, left, right in rep.failures:
        assert isinstance(c1, LDepFun)
        print(print_contract(left), print_contract(right))
