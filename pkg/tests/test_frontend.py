from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradver.frontend import ast as A
from gradver.frontend.parser import ParseError, parse_expr, parse_gformula, parse_program
from gradver.frontend.printer import print_expr, print_program
from gradver.frontend.selfframe import Framed, NotFramed, check_self_framing
from gradver.frontend.wellformed import check_well_formed
from gradver.harness import CORPUS, corpus_text, load_corpus
from gradver.harness.gen import GenBounds, generate

MINIMAL = "int main() requires true ensures true { result = 0; }"

LIST_DEFS = """
struct List { int value; List next }
predicate acyclic(List l) =
  acc(l.value) * acc(l.next) *
  (if l.next == NULL then true else acyclic(l.next))
"""


def clauses(text: str) -> list:
    return [d.clause for d in check_well_formed(parse_program(text))]


# --- parse_program -----------------------------------------------------------


def test_append_shape():
    p = load_corpus("append")
    assert len(p.structs) == 1
    assert len(p.predicates) == 1
    assert [m.name for m in p.methods] == ["singleton", "append"]


def test_minimal_program():
    p = parse_program(MINIMAL)
    assert p.methods == () and p.structs == ()
    assert isinstance(p.entry, A.Assign) and p.entry.target == "result"
    assert check_well_formed(p) == []


def test_exclusion_unsound_imprecise_predicate():
    p = load_corpus("exclusion_unsound")
    pred = p.predicate("imprecise")
    assert pred is not None and pred.params == ()
    assert pred.body.imprecise
    # `void set` is desugared into a method that still assigns result
    assert p.method("set").ret == "int"


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as ei:
        parse_program("int main() { result = ; }")
    assert ei.value.line == 1 and ei.value.col > 1


def test_result_parameter_rejected():
    with pytest.raises(ParseError):
        parse_program("int f(int result) requires true ensures true { result = 0; }\n" + MINIMAL)


def test_nested_field_assignment_rejected():
    with pytest.raises(ParseError):
        parse_program(LIST_DEFS + "int main() { l = alloc(List); l.next.next = NULL; result = 0; }")


def test_positions_recorded():
    p = load_corpus("append")
    append = p.method("append")
    head, _ = A.split_head(append.body)
    assert isinstance(head, A.Unfold) and head.pos == (23, 3)


# --- check_well_formed -------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_corpus_well_formed(name):
    assert check_well_formed(load_corpus(name)) == []


def test_post_mentions_local():
    text = LIST_DEFS + """
int f(int a) requires true ensures n == 0 { n = 0; result = n; }
int main() { result = 0; }
"""
    assert clauses(text) == ["post-scope"]


def test_pre_mentions_result():
    text = "int f(int a) requires result == 0 ensures true { result = 0; }\nint main() { result = 0; }"
    assert clauses(text) == ["pre-scope"]


def test_precise_pre_imprecise_post_allowed():
    text = "int f() requires true ensures ? * true { result = 0; }\nint main() { result = 0; }"
    assert clauses(text) == []


def test_imprecise_pre_needs_imprecise_post():
    text = "int f() requires ? * true ensures true { result = 0; }\nint main() { result = 0; }"
    assert clauses(text) == ["imprecise-post"]


def test_parameter_assignment():
    text = "int f(int a) requires true ensures true { a = 1; result = a; }\nint main() { result = 0; }"
    assert clauses(text) == ["param-assign"]


def test_use_before_init():
    assert clauses("int main() { x = y + 1; result = x; }") == ["initialized"]


def test_result_on_every_path():
    text = "int f(int a) requires true ensures true { if (a < 0) { result = 0; } else { } }\n" \
           "int main() { result = 0; }"
    assert clauses(text) == ["result-assigned"]


def test_type_error():
    assert "typing" in clauses("int main() { x = 1 + true; result = 0; }")


def test_unresolved_method():
    assert "resolve" in clauses("int main() { x = g(); result = 0; }")


def test_duplicate_field():
    assert "names" in clauses("struct S { int a; int a; }\nint main() { result = 0; }")


def test_one_diagnostic_per_violation():
    text = "int f(int a) requires true ensures n == 0 && m == 0 { n = 0; m = 0; result = 0; }\n" \
           "int main() { result = 0; }"
    assert clauses(text) == ["post-scope", "post-scope"]


# --- check_self_framing ------------------------------------------------------


def test_framed_acc_then_read():
    assert check_self_framing(parse_gformula("acc(x.value) * x.value == 0")) == Framed()


def test_unframed_read():
    r = check_self_framing(parse_gformula("x.value == 0"))
    assert isinstance(r, NotFramed)
    assert print_expr(r.witness) == "x.value"


def test_true_framed():
    assert check_self_framing(parse_gformula("true")) == Framed()


def test_acc_order_matters():
    assert isinstance(check_self_framing(parse_gformula("x.value == 0 * acc(x.value)")), NotFramed)


def test_conditional_branch_framing():
    phi = parse_gformula("acc(x.next) * (if x.next == NULL then true else acc(x.next.value))")
    assert check_self_framing(phi) == Framed()
    phi = parse_gformula("if x == NULL then true else x.value == 1")
    assert isinstance(check_self_framing(phi), NotFramed)


def test_imprecise_always_framed():
    assert check_self_framing(parse_gformula("? * x.value == 0")) == Framed()


def test_unframed_precondition_reported():
    text = "struct C { int v; }\nint f(C c) requires c.v == 0 ensures true { result = 0; }\n" \
           "int main() { result = 0; }"
    assert clauses(text) == ["specification"]


# --- round trip ----------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_corpus_round_trip(name):
    p = parse_program(corpus_text(name))
    assert parse_program(print_program(p)) == p


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0.0, 1.0))
def test_generated_round_trip(seed, imprecision):
    p, _ = generate(random.Random(seed), GenBounds(imprecision=imprecision))
    text = print_program(p)
    q = parse_program(text)
    assert q == p
    assert print_program(q) == text


names = st.sampled_from(["a", "b", "x", "y"])
ints = st.integers(-5, 5).map(lambda k: A.Lit(k, "int"))
atoms = st.one_of(ints, names.map(A.Var),
                  names.map(lambda n: A.FieldRead(A.Var(n), "value")),
                  st.sampled_from([A.TRUE, A.FALSE, A.NULL]))
exprs = st.recursive(
    atoms,
    lambda sub: st.one_of(
        st.builds(A.BinOp, st.sampled_from(A.BINARY_OPS), sub, sub),
        st.builds(A.Not, sub)),
    max_leaves=8)


@settings(max_examples=500, deadline=None)
@given(exprs)
def test_expression_round_trip(e):
    assert parse_expr(print_expr(e)) == e
