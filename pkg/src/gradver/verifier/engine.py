"""Symbolic evaluation, produce and consume.

Every judgement returns a list of outcomes, one per derivation. Outcomes
carry the run-time checks collected along the way and the fresh values
the derivation introduced. Each intro is a pair (value, recipe), where
the recipe tells the co-execution harness how to pick that value's
concrete counterpart:

    ("heap", t_e, f)   the current heap at V(t_e).f
    ("var", x)         the variable x in the relevant concrete frame
    ("result",)        the callee's result variable at call exit
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..frontend import ast as A
from ..symbolic import terms as T
from ..symbolic.heap import (FieldChunk, FieldPerm, PredChunk, PredPerm, SymState, find_field,
                             find_pred, rem_f, rem_fp)
from ..symbolic.solver import Entailment, SatResult, Solver
from .checks import BOTTOM, CheckPerm, CheckSep, CheckValue, is_perm, merge


def sort_of_type(ty: str) -> str:
    if ty in ("int", "bool", "char"):
        return ty
    return "ref"


def default_term(ty: str) -> T.Term:
    if ty == "int":
        return T.lit(0, "int")
    if ty == "bool":
        return T.FALSE
    if ty == "char":
        return T.lit("\0", "char")
    return T.NULL


@dataclass
class Stats:
    states: int = 0
    pruned: dict = field(default_factory=dict)  # site -> count
    unknown_bottoms: list = field(default_factory=list)  # (site, description)

    def total_pruned(self) -> int:
        return sum(self.pruned.values())


class Ctx:
    """Everything a derivation needs besides the state: program, solver, fresh supply."""

    def __init__(self, program: A.Program, solver: Optional[Solver] = None,
                 fresh: Optional[T.Fresh] = None, prune: bool = True):
        self.program = program
        self.solver = solver or Solver()
        self.fresh = fresh or T.Fresh()
        self.prune = prune
        self.stats = Stats()
        self.site = "?"
        self.preds = {p.name: p for p in program.predicates}
        self.methods = {m.name: m for m in program.methods}
        self.field_types = {}
        for s in program.structs:
            for ty, f in s.fields:
                self.field_types[f] = ty
        self.structs = {s.name: s for s in program.structs}
        self._precise: Optional[dict] = None

    # -- branch pruning --------------------------------------------------------

    def feasible(self, s: SymState, new: T.Term) -> bool:
        """Branch-point test; pruned branches are counted at the current site."""
        if not self.prune:
            return True
        r = self.solver.sat(s.with_pc(new).pc, focus=[new])
        if r is SatResult.UNSAT:
            self.stats.pruned[self.site] = self.stats.pruned.get(self.site, 0) + 1
            return False
        return True

    def proves(self, s: SymState, t: T.Term) -> bool:
        return self.solver.implies(s.pc, t) is Entailment.PROVED

    def note_failure(self, s: SymState, t: T.Term, what: str) -> bool:
        """Record a ⊥ caused by an Unknown rather than a real counterexample."""
        r = self.solver.sat(s.pc + (T.not_(t),), focus=[T.not_(t)])
        if r is SatResult.UNKNOWN:
            self.stats.unknown_bottoms.append((self.site, what))
            return True
        return False

    # -- complete precision ----------------------------------------------------

    def completely_precise(self, phi: A.GFormula) -> bool:
        if phi.imprecise:
            return False
        if self._precise is None:
            self._precise = _precise_preds(self.program)
        return all(self._precise[p] for p in _preds_in(phi.body))


def _preds_in(phi) -> list:
    if isinstance(phi, A.FPred):
        return [phi.name]
    if isinstance(phi, A.FConj):
        return _preds_in(phi.left) + _preds_in(phi.right)
    if isinstance(phi, A.FCond):
        return _preds_in(phi.then) + _preds_in(phi.else_)
    return []


def _precise_preds(p: A.Program) -> dict:
    # greatest fixpoint: assume precise, knock out anything reaching `?`
    ok = {d.name: not d.body.imprecise for d in p.predicates}
    changed = True
    while changed:
        changed = False
        for d in p.predicates:
            if ok[d.name] and not all(ok.get(q, False) for q in _preds_in(d.body.body)):
                ok[d.name] = False
                changed = True
    return ok


# --- outcomes -------------------------------------------------------------------


@dataclass
class Out:
    state: SymState
    value: object = None  # Term, tuple of terms, or None
    checks: tuple = ()
    theta: tuple = ()
    intros: tuple = ()
    unknown: bool = False


# --- evaluation -------------------------------------------------------------------


def lit_term(e: A.Lit) -> T.Term:
    if e.type == "null":
        return T.NULL
    return T.lit(e.value, e.type)


def sym_eval(ctx: Ctx, s: SymState, e) -> list:
    """All derivations of σ ⊢ e ⇓ t ⊣ σ', ℛ."""
    if isinstance(e, A.Lit):
        return [Out(s, lit_term(e))]
    if isinstance(e, A.Var):
        return [Out(s, s.store[e.name])]
    if isinstance(e, A.Not):
        return [replace(o, value=T.not_(o.value)) for o in sym_eval(ctx, s, e.operand)]
    if isinstance(e, A.BinOp):
        if e.op in ("&&", "||"):
            return _eval_short(ctx, s, e)
        out = []
        for o1 in sym_eval(ctx, s, e.left):
            for o2 in sym_eval(ctx, o1.state, e.right):
                out.append(Out(o2.state, T.op(e.op, o1.value, o2.value),
                               merge(o1.checks, o2.checks), intros=o1.intros + o2.intros,
                               unknown=o1.unknown or o2.unknown))
        return out
    if isinstance(e, A.FieldRead):
        out = []
        for o in sym_eval(ctx, s, e.recv):
            out.append(_eval_field(ctx, o, e.field))
        return out
    raise TypeError(e)


def _eval_short(ctx: Ctx, s: SymState, e: A.BinOp) -> list:
    out = []
    for o1 in sym_eval(ctx, s, e.left):
        t1 = o1.value
        stop = T.not_(t1) if e.op == "&&" else t1
        go = t1 if e.op == "&&" else T.not_(t1)
        # A: the left operand decides
        sA = o1.state.with_pc(stop)
        if ctx.feasible(o1.state, stop):
            out.append(Out(sA, t1, o1.checks, intros=o1.intros, unknown=o1.unknown))
        # B: evaluate the right operand as well
        if ctx.feasible(o1.state, go):
            for o2 in sym_eval(ctx, o1.state.with_pc(go), e.right):
                out.append(Out(o2.state, o2.value, merge(o1.checks, o2.checks),
                               intros=o1.intros + o2.intros, unknown=o1.unknown or o2.unknown))
    return out


def _eval_field(ctx: Ctx, o: Out, f: str) -> Out:
    s, te = o.state, o.value
    c = find_field(ctx.solver, s.pheap, s, te, f)
    if c is not None:
        return replace(o, value=c.val)
    c = find_field(ctx.solver, s.oheap, s, te, f)
    if c is not None:
        return replace(o, value=c.val)
    t = ctx.fresh(sort_of_type(ctx.field_types[f]))
    intro = ((t, ("heap", te, f)),)
    if s.imprecise:
        s2 = replace(s, oheap=s.oheap + (FieldChunk(f, te, t),))
        return Out(s2, t, merge(o.checks, (CheckPerm(FieldPerm(te, f)),)), intros=o.intros + intro,
                   unknown=o.unknown)
    unk = _lookup_unknown(ctx, s, te, f)
    return Out(s, t, (BOTTOM,), intros=o.intros + intro, unknown=o.unknown or unk)


def _lookup_unknown(ctx: Ctx, s: SymState, te: T.Term, f: str) -> bool:
    # a failed lookup is an incompleteness artefact if some chunk might be the one
    unk = False
    for c in s.pheap + s.oheap:
        if isinstance(c, FieldChunk) and c.field == f:
            unk = ctx.note_failure(s, T.eq(c.recv, te), f"lookup {T.show(te)}.{f}") or unk
    return unk


def pc_eval(ctx: Ctx, s: SymState, e) -> Out:
    """Deterministic evaluation without short-circuiting; never changes σ."""
    if isinstance(e, A.Lit):
        return Out(s, lit_term(e))
    if isinstance(e, A.Var):
        return Out(s, s.store[e.name])
    if isinstance(e, A.Not):
        o = pc_eval(ctx, s, e.operand)
        return replace(o, value=T.not_(o.value))
    if isinstance(e, A.BinOp):
        o1 = pc_eval(ctx, s, e.left)
        o2 = pc_eval(ctx, s, e.right)
        return Out(s, T.op(e.op, o1.value, o2.value), merge(o1.checks, o2.checks),
                   intros=o1.intros + o2.intros, unknown=o1.unknown or o2.unknown)
    if isinstance(e, A.FieldRead):
        o = pc_eval(ctx, s, e.recv)
        te, f = o.value, e.field
        for heap in (s.pheap, s.oheap):
            c = find_field(ctx.solver, heap, s, te, f)
            if c is not None:
                return replace(o, value=c.val)
        t = ctx.fresh(sort_of_type(ctx.field_types[f]))
        intros = o.intros + ((t, ("heap", te, f)),)
        if s.imprecise:
            return Out(s, t, merge(o.checks, (CheckPerm(FieldPerm(te, f)),)), intros=intros,
                       unknown=o.unknown)
        return Out(s, t, merge(o.checks, (BOTTOM,)), intros=intros,
                   unknown=o.unknown or _lookup_unknown(ctx, s, te, f))
    raise TypeError(e)


def pc_eval_all(ctx: Ctx, s: SymState, es) -> Out:
    vals, checks, intros, unk = [], (), (), False
    for e in es:
        o = pc_eval(ctx, s, e)
        vals.append(o.value)
        checks = merge(checks, o.checks)
        intros += o.intros
        unk = unk or o.unknown
    return Out(s, tuple(vals), checks, intros=intros, unknown=unk)


def sym_eval_all(ctx: Ctx, s: SymState, es) -> list:
    outs = [Out(s, ())]
    for e in es:
        nxt = []
        for o in outs:
            for o2 in sym_eval(ctx, o.state, e):
                nxt.append(Out(o2.state, o.value + (o2.value,), merge(o.checks, o2.checks),
                               intros=o.intros + o2.intros, unknown=o.unknown or o2.unknown))
        outs = nxt
    return outs


# --- produce ------------------------------------------------------------------


def produce(ctx: Ctx, s: SymState, phi: A.GFormula) -> list:
    """σ ⊢ produce φ̃ ⊣ σ'. Outcomes carry intros only; ℛ from pc_eval is dropped."""
    if phi.imprecise:
        s = replace(s, imprecise=True)
    return _produce(ctx, s, phi.body)


def _produce(ctx: Ctx, s: SymState, phi) -> list:
    if isinstance(phi, A.FExpr):
        o = pc_eval(ctx, s, phi.expr)
        return [Out(s.with_pc(o.value), intros=o.intros)]
    if isinstance(phi, A.FPred):
        o = pc_eval_all(ctx, s, phi.args)
        return [Out(replace(s, pheap=s.pheap + (PredChunk(phi.name, o.value),)), intros=o.intros)]
    if isinstance(phi, A.FAcc):
        o = pc_eval(ctx, s, phi.recv)
        t = ctx.fresh(sort_of_type(ctx.field_types[phi.field]))
        chunk = FieldChunk(phi.field, o.value, t)
        return [Out(replace(s, pheap=s.pheap + (chunk,)),
                    intros=o.intros + ((t, ("heap", o.value, phi.field)),))]
    if isinstance(phi, A.FConj):
        out = []
        for o1 in _produce(ctx, s, phi.left):
            for o2 in _produce(ctx, o1.state, phi.right):
                out.append(Out(o2.state, intros=o1.intros + o2.intros))
        return out
    if isinstance(phi, A.FCond):
        o = pc_eval(ctx, s, phi.cond)
        out = []
        for g, sub in ((o.value, phi.then), (T.not_(o.value), phi.else_)):
            if ctx.feasible(s, g):
                for o2 in _produce(ctx, s.with_pc(g), sub):
                    out.append(Out(o2.state, intros=o.intros + o2.intros))
        return out
    raise TypeError(phi)


# --- consume -------------------------------------------------------------------


def consume(ctx: Ctx, s: SymState, phi: A.GFormula, ref: Optional[SymState] = None) -> list:
    """σ ⊢ consume φ̃ ⊣ σ', ℛ, with σ itself as the reference state by default."""
    ref = s if ref is None else ref
    if phi.imprecise:
        out = []
        for o in _consume(ctx, s, replace(ref, imprecise=True), phi.body):
            s2 = SymState(True, (), (), o.state.store, o.state.pc)
            out.append(replace(o, state=s2))
        return out
    return _consume(ctx, s, ref, phi.body)


def _consume(ctx: Ctx, s: SymState, ref: SymState, phi) -> list:
    if isinstance(phi, A.FExpr):
        o = pc_eval(ctx, ref, phi.expr)
        t = o.value
        if ctx.proves(s, t):
            return [Out(s, checks=o.checks, intros=o.intros, unknown=o.unknown)]
        if s.imprecise:
            return [Out(s.with_pc(t), checks=merge(o.checks, _value_check(t)), intros=o.intros,
                        unknown=o.unknown)]
        unk = ctx.note_failure(s, t, f"assert {T.show(t)}")
        return [Out(s, checks=(BOTTOM,), intros=o.intros, unknown=o.unknown or unk)]

    if isinstance(phi, A.FPred):
        o = pc_eval_all(ctx, ref, phi.args)
        perm = PredPerm(phi.name, o.value)
        c = find_pred(ctx.solver, s.pheap, s, phi.name, o.value)
        if c is not None:
            heap = list(s.pheap)
            heap.remove(c)
            s2 = replace(s, pheap=tuple(heap), oheap=())
            return [Out(s2, checks=o.checks, theta=(perm,), intros=o.intros, unknown=o.unknown)]
        if s.imprecise:
            s2 = replace(s, pheap=(), oheap=())
            return [Out(s2, checks=merge(o.checks, (CheckPerm(perm),)), theta=(perm,),
                        intros=o.intros, unknown=o.unknown)]
        unk = any(ctx.note_failure(s, T.conj(T.eq(a, b) for a, b in zip(c.args, o.value)),
                                   f"find {perm}")
                  for c in s.pheap if isinstance(c, PredChunk) and c.pred == phi.name)
        return [Out(s, checks=(BOTTOM,), theta=(perm,), intros=o.intros, unknown=o.unknown or unk)]

    if isinstance(phi, A.FAcc):
        o = pc_eval(ctx, ref, phi.recv)
        te, f = o.value, phi.field
        perm = FieldPerm(te, f)
        sv = ctx.solver
        if find_field(sv, s.pheap, s, te, f) is not None:
            s2 = replace(s, pheap=rem_fp(sv, s.pheap, s, te, f), oheap=rem_f(sv, s.oheap, s, te, f))
            return [Out(s2, checks=o.checks, theta=(perm,), intros=o.intros, unknown=o.unknown)]
        if find_field(sv, s.oheap, s, te, f) is not None:
            s2 = replace(s, pheap=rem_f(sv, s.pheap, s, te, f), oheap=rem_f(sv, s.oheap, s, te, f))
            return [Out(s2, checks=o.checks, theta=(perm,), intros=o.intros, unknown=o.unknown)]
        if s.imprecise:
            s2 = replace(s, pheap=rem_f(sv, s.pheap, s, te, f), oheap=rem_f(sv, s.oheap, s, te, f))
            return [Out(s2, checks=merge(o.checks, (CheckPerm(perm),)), theta=(perm,),
                        intros=o.intros, unknown=o.unknown)]
        unk = _lookup_unknown(ctx, s, te, f)
        return [Out(s, checks=(BOTTOM,), theta=(perm,), intros=o.intros, unknown=o.unknown or unk)]

    if isinstance(phi, A.FConj):
        out = []
        for o1 in _consume(ctx, s, ref, phi.left):
            ref2 = replace(ref, pc=o1.state.pc)
            for o2 in _consume(ctx, o1.state, ref2, phi.right):
                checks = merge(o1.checks, o2.checks)
                if any(is_perm(r) for r in checks):
                    checks = merge(checks, (CheckSep(o1.theta, o2.theta),))
                out.append(Out(o2.state, checks=checks, theta=merge(o1.theta, o2.theta),
                               intros=o1.intros + o2.intros, unknown=o1.unknown or o2.unknown))
        return out

    if isinstance(phi, A.FCond):
        o = pc_eval(ctx, ref, phi.cond)
        out = []
        for g, sub in ((o.value, phi.then), (T.not_(o.value), phi.else_)):
            if not ctx.feasible(s, g):
                continue
            s1, ref1 = s.with_pc(g), ref.with_pc(g)
            for o2 in _consume(ctx, s1, ref1, sub):
                out.append(Out(o2.state, checks=merge(o.checks, o2.checks), theta=o2.theta,
                               intros=o.intros + o2.intros, unknown=o.unknown or o2.unknown))
        return out
    raise TypeError(phi)


def _value_check(t: T.Term) -> tuple:
    return () if t is T.TRUE else (CheckValue(t),)


def rem_frame(ctx: Ctx, s: SymState, phi: A.GFormula) -> tuple:
    """Exclusion frame Θ = rem(σ, φ̃)."""
    if ctx.completely_precise(phi):
        return ()
    perms = [FieldPerm(c.recv, c.field) for c in s.pheap + s.oheap if isinstance(c, FieldChunk)]
    perms += [PredPerm(c.pred, c.args) for c in s.pheap if isinstance(c, PredChunk)]
    return merge(perms)
