from __future__ import annotations

import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradver.frontend import ast as A
from gradver.frontend.parser import parse_expr, parse_gformula, parse_program
from gradver.harness import load_corpus
from gradver.harness.gen import GenBounds, generate
from gradver.symbolic import terms as T
from gradver.symbolic.heap import FieldChunk, FieldPerm, PredChunk, PredPerm, SymState
from gradver.symbolic.solver import Entailment, Solver
from gradver.verifier import engine as E
from gradver.verifier.checks import BOTTOM, Bottom, CheckPerm, CheckSep, CheckValue
from gradver.verifier.execute import VState, exec_step
from gradver.verifier.verify import verify

v1, v2, v3, v4 = (T.sym(i, "ref") for i in (1, 2, 3, 4))


@pytest.fixture
def ctx():
    # fresh values start high so they cannot collide with the hand-made ones
    return E.Ctx(load_corpus("append"), fresh=T.Fresh(100))


def cell_ctx():
    p = parse_program("struct Cell { int value; }\nint main() { result = 0; }")
    return E.Ctx(p, fresh=T.Fresh(100))


# --- sym_eval ------------------------------------------------------------------------


def test_eval_imprecise_field_adds_optimistic_chunk(ctx):
    s = SymState(imprecise=True, store={"l": v1})
    outs = E.sym_eval(ctx, s, parse_expr("l.next == NULL"))
    assert len(outs) == 1
    o = outs[0]
    assert [(c.field, c.recv) for c in o.state.oheap] == [("next", v1)]
    assert o.checks == (CheckPerm(FieldPerm(v1, "next")),)


def test_eval_literal(ctx):
    s = SymState()
    [o] = E.sym_eval(ctx, s, A.Lit(0, "int"))
    assert o.value is T.lit(0, "int") and o.state is s and o.checks == ()


def test_eval_precise_field(ctx):
    s = SymState(pheap=(FieldChunk("next", v1, v4),), store={"l": v1})
    [o] = E.sym_eval(ctx, s, parse_expr("l.next"))
    assert o.value is v4 and o.state is s and o.checks == ()


def test_eval_precise_missing_field_fails(ctx):
    [o] = E.sym_eval(ctx, SymState(store={"l": v1}), parse_expr("l.next"))
    assert BOTTOM in o.checks


def test_eval_short_circuit_branches(ctx):
    b = T.sym(5, "bool")
    s = SymState(imprecise=True, store={"b": b, "l": v1})
    outs = E.sym_eval(ctx, s, parse_expr("b && l.value == 0"))
    # one branch where b is false and l.value is never read, one where it is
    assert len(outs) == 2
    assert sorted(len(o.checks) for o in outs) == [0, 1]


# --- pc_eval ----------------------------------------------------------------------------


def test_pc_eval_and(ctx):
    a, b = T.sym(1, "bool"), T.sym(2, "bool")
    o = E.pc_eval(ctx, SymState(store={"a": a, "b": b}), parse_expr("a && b"))
    assert o.value is T.and_(a, b) and o.checks == ()


def test_pc_eval_literal(ctx):
    o = E.pc_eval(ctx, SymState(), A.Lit(3, "int"))
    assert o.value is T.lit(3, "int") and o.checks == ()


def test_pc_eval_imprecise_field_keeps_state():
    c = cell_ctx()
    s = SymState(imprecise=True, store={"c": v1})
    o = E.pc_eval(c, s, parse_expr("c.value"))
    assert o.value.kind == "sym" and o.value.args[0] >= 100
    assert o.checks == (CheckPerm(FieldPerm(v1, "value")),)
    assert o.state is s and s.oheap == ()


# --- produce ------------------------------------------------------------------------------


def test_produce_predicate_and_value(ctx):
    s = SymState(store={"l": v1})
    [o] = E.produce(ctx, s, parse_gformula("acyclic(l) * l != NULL"))
    assert o.state.pheap == (PredChunk("acyclic", (v1,)),)
    assert o.state.pc == (T.neq(v1, T.NULL),)


def test_produce_true(ctx):
    s = SymState(store={"l": v1})
    [o] = E.produce(ctx, s, A.GTRUE)
    assert o.state == s


def test_produce_imprecise(ctx):
    [o] = E.produce(ctx, SymState(), parse_gformula("? * true"))
    assert o.state.imprecise and o.state.pc == ()


def test_produce_acc_fresh_value(ctx):
    [o] = E.produce(ctx, SymState(store={"l": v1}), parse_gformula("acc(l.next)"))
    [c] = o.state.pheap
    assert c.field == "next" and c.recv is v1 and c.val.args[0] >= 100


def test_produce_conditional_prunes(ctx):
    s = SymState(store={"l": v1}, pc=(T.neq(v1, T.NULL),))
    outs = E.produce(ctx, s, parse_gformula("if l == NULL then acc(l.next) else true"))
    assert len(outs) == 1 and outs[0].state.pheap == ()


# --- consume --------------------------------------------------------------------------------


def test_consume_found_predicate(ctx):
    s = SymState(pheap=(PredChunk("acyclic", (v1,)), FieldChunk("value", v2, v3)), store={"l": v1})
    [o] = E.consume(ctx, s, parse_gformula("acyclic(l)"))
    assert o.checks == ()
    assert o.state.pheap == (FieldChunk("value", v2, v3),)


def test_consume_true(ctx):
    s = SymState(store={"l": v1})
    [o] = E.consume(ctx, s, A.GTRUE)
    assert o.state == s and o.checks == ()


def test_consume_imprecise_missing_predicate(ctx):
    s = SymState(imprecise=True, oheap=(FieldChunk("next", v1, v2),), store={"result": v1})
    [o] = E.consume(ctx, s, parse_gformula("acyclic(result)"))
    assert o.checks == (CheckPerm(PredPerm("acyclic", (v1,))),)
    assert o.state.oheap == ()  # predicates may cover any field


def test_consume_precise_missing_is_bottom(ctx):
    [o] = E.consume(ctx, SymState(store={"l": v1}), parse_gformula("acyclic(l)"))
    assert BOTTOM in o.checks


def test_consume_imprecise_formula_empties_heaps(ctx):
    s = SymState(pheap=(FieldChunk("value", v1, v3), FieldChunk("next", v1, v4)), store={"l": v1})
    [o] = E.consume(ctx, s, parse_gformula("? * acc(l.value)"))
    assert o.state.imprecise and o.state.pheap == () and o.state.oheap == ()
    assert o.checks == ()


def test_consume_value_imprecise_assumes_with_check():
    c = cell_ctx()
    s = SymState(imprecise=True, pheap=(FieldChunk("value", v1, T.sym(7, "int")),), store={"c": v1})
    [o] = E.consume(c, s, parse_gformula("acc(c.value) * c.value == 0"))
    t = T.eq(T.sym(7, "int"), T.lit(0, "int"))
    assert o.checks == (CheckValue(t),)
    assert t in o.state.pc


def test_consume_sep_only_with_perm_checks():
    c = cell_ctx()
    heap = (FieldChunk("value", v1, v3), FieldChunk("value", v2, v4))
    s = SymState(pheap=heap, store={"x": v1, "y": v2}, pc=(T.neq(v1, v2),))
    [o] = E.consume(c, s, parse_gformula("acc(x.value) * acc(y.value)"))
    assert o.checks == ()
    s = SymState(imprecise=True, store={"x": v1, "y": v2})
    [o] = E.consume(c, s, parse_gformula("acc(x.value) * acc(y.value)"))
    seps = [r for r in o.checks if isinstance(r, CheckSep)]
    assert seps == [CheckSep((FieldPerm(v1, "value"),), (FieldPerm(v2, "value"),))]


# --- exec step ----------------------------------------------------------------------------------


def test_unfold_branches(ctx):
    s = SymState(pheap=(PredChunk("acyclic", (v1,)),), store={"l": v1}, pc=(T.neq(v1, T.NULL),))
    vs = VState(s, A.seq(A.Unfold("acyclic", (A.Var("l"),)), A.Skip()), A.GTRUE, "append")
    succ = exec_step(ctx, vs)
    assert len(succ) == 2
    for sc in succ:
        assert {c.field for c in sc.vstate.sigma.pheap if isinstance(c, FieldChunk)} == {"value", "next"}


def test_seq_skip_step(ctx):
    rest = A.seq(A.Assign("x", A.Lit(1, "int")), A.Skip())
    vs = VState(SymState(), A.Seq(A.Skip(), rest), A.GTRUE, "main")
    [sc] = exec_step(ctx, vs)
    assert sc.vstate.stmt == rest


def test_field_assign_replaces_chunk(ctx):
    n = T.sym(5, "ref")
    s = SymState(pheap=(FieldChunk("value", v1, v3), FieldChunk("next", v1, v4)), store={"l": v1, "n": n})
    vs = VState(s, A.seq(A.AssignField("l", "next", A.Var("n")), A.Skip()), A.GTRUE, "append")
    [sc] = exec_step(ctx, vs)
    assert set(sc.vstate.sigma.pheap) == {FieldChunk("value", v1, v3), FieldChunk("next", v1, n)}


# --- rem_frame ------------------------------------------------------------------------------------


def test_rem_frame_exclusion_unsound_call():
    c = E.Ctx(load_corpus("exclusion_unsound"))
    t1 = T.sym(1, "ref")
    s = SymState(pheap=(FieldChunk("value", t1, T.lit(0, "int")),))
    assert E.rem_frame(c, s, load_corpus("exclusion_unsound").method("set").pre) == (FieldPerm(t1, "value"),)


def test_rem_frame_precise_is_empty(ctx):
    s = SymState(pheap=(FieldChunk("value", v1, v3),))
    assert E.rem_frame(ctx, s, parse_gformula("acyclic(l)")) == ()


def test_rem_frame_empty_heaps(ctx):
    assert E.rem_frame(ctx, SymState(imprecise=True), parse_gformula("? * true")) == ()


# --- guard and verify ----------------------------------------------------------------------------------


def test_append_verifies_without_checks():
    rep = verify(load_corpus("append"))
    assert rep.verified and rep.check_count() == 0 and rep.exclusion_count() == 0
    assert rep.pruned["append@24:3 if"] == 2


def test_gradual_append_guard_entries():
    rep = verify(load_corpus("gradual_append"))
    assert rep.verified
    assert rep.checks_at("append@22:3 if") == {"acc(l.next)"}
    assert rep.checks_at("append@26:3 assignfield") == {"acc(l.next)"}
    assert rep.checks_at("append:exit") == {"acyclic(result)"}
    [if_entry] = rep.sites[("append", "22:3", "if")]
    assert if_entry.exclusion == []
    # the assignment check is needed on one branch only
    entries = rep.sites[("append", "26:3", "assignfield")]
    assert sorted(len(se.checks) for se in entries) == [0, 1]
    assert len(rep.sites[("append", "exit", "exit")]) == 2


def test_exclusion_unsound_call_exclusion():
    rep = verify(load_corpus("exclusion_unsound"))
    [se] = rep.sites[("test", "19:3", "call")]
    assert se.checks == []
    assert [str(x) for x in se.exclusion] == ["acc(c.value)"]


def test_assert_false_is_static_failure():
    rep = verify(parse_program("int main() { assert false; result = 0; }"))
    assert not rep.verified
    assert rep.failures == ["main@1:14 assert: static failure on every branch"]


def test_imprecise_assert_false_checks():
    rep = verify(parse_program(
        "int f() requires ? * true ensures ? * true { assert false; result = 0; }\n"
        "int main() { result = 0; }"))
    # imprecision turns the unprovable value into a run-time check, not a static failure
    assert rep.verified
    assert rep.checks_at("f@1:46 assert") == {"false"}


def test_translate_sep():
    rep = verify(parse_program(
        "struct C { int f; }\n"
        "int m(C x, C y) requires ? * true ensures ? * true { assert acc(x.f) * acc(y.f); result = 0; }\n"
        "int main() { result = 0; }"))
    assert rep.checks_at("m@2:54 assert") == {"acc(x.f)", "acc(y.f)", "sep({x.f}, {y.f})"}


def test_translate_tautology_elided():
    rep = verify(parse_program(
        "int f() requires ? * true ensures ? * true { assert true; result = 0; }\n"
        "int main() { result = 0; }"))
    assert rep.check_count() == 0


def test_translate_ghost_for_unanchored_value():
    rep = verify(parse_program(
        "struct C { int v; }\n"
        "int f(C c) requires ? * true ensures ? * true {\n"
        "  x = c.v; c.v = 3; assert x == 2; result = 0; }\n"
        "int main() { result = 0; }"))
    assert rep.verified
    checks = rep.checks_at("f@3:21 assert")
    assert checks == {"x == 2"}


# --- properties over generated programs ------------------------------------------------------------------


def _precise_program(seed):
    p, _ = generate(random.Random(seed), GenBounds(imprecision=0.0))
    return p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_conservative_extension(seed):
    rep = verify(_precise_program(seed))
    assert all(isinstance(r, Bottom) for r in rep.symbolic_checks())
    assert rep.exclusion_count() == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0.0, 1.0))
def test_branch_totality_and_monotone_imprecision(seed, imprecision):
    p, _ = generate(random.Random(seed), GenBounds(imprecision=imprecision))
    rep = verify(p)
    solver = Solver()
    for es in rep.sites.values():
        assert es
        for se in es:
            # the guard's state extends its source state
            assert se.entry.state.imprecise >= se.vstate.sigma.imprecise
            assert solver.implies(se.entry.branch_pc, T.conj(se.vstate.sigma.pc)) is Entailment.PROVED


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0.0, 1.0))
def test_exec_edges_strengthen_pc(seed, imprecision):
    p, _ = generate(random.Random(seed), GenBounds(imprecision=imprecision))
    ctx = E.Ctx(p)
    rep = verify(p)
    for es in rep.sites.values():
        for se in es[:1]:
            vs = se.vstate
            if vs.at_exit():
                continue
            for sc in exec_step(ctx, vs):
                s2 = sc.vstate.sigma
                assert s2.imprecise >= vs.sigma.imprecise
                assert ctx.solver.implies(s2.pc, T.conj(vs.sigma.pc)) is Entailment.PROVED


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_produce_consume_keep_store(seed):
    rng = random.Random(seed)
    c = E.Ctx(load_corpus("append"), fresh=T.Fresh(100))
    s = SymState(imprecise=rng.random() < 0.5, store={"l": v1, "n": v2},
                 pheap=(FieldChunk("next", v1, v2),) if rng.random() < 0.5 else ())
    phi = parse_gformula(rng.choice([
        "acc(l.next) * l.next == n", "acyclic(l) * l != NULL", "? * acc(l.value)",
        "if l == n then true else acc(n.next)", "l.next == NULL"]))
    phi = replace(phi, imprecise=phi.imprecise or rng.random() < 0.3)
    for o in E.produce(c, s, phi) + E.consume(c, s, phi):
        assert o.state.store == s.store
        assert o.state.imprecise >= s.imprecise
        if not o.state.imprecise:
            assert o.state.oheap == ()
