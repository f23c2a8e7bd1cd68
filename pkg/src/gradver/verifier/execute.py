"""Verification states, statement execution, guards and root states."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..frontend import ast as A
from ..symbolic import terms as T
from ..symbolic.heap import FieldChunk, PredChunk, SymState
from .checks import BOTTOM, CheckValue, merge
from .engine import (Ctx, Out, consume, default_term, pc_eval, produce, rem_frame, sort_of_type,
                     sym_eval, sym_eval_all)

GTRUE = A.GFormula(False, A.FExpr(A.Lit(True, "bool")))


@dataclass(frozen=True, eq=False)
class VState:
    """A triple <σ, s, φ̃>. `owner` names the method, `main`, or a loop body."""

    sigma: SymState
    stmt: A.Stmt
    post: A.GFormula
    owner: str

    def at_exit(self) -> bool:
        return isinstance(self.stmt, A.Skip)

    def head(self) -> A.Stmt:
        return A.split_head(self.stmt)[0]


def fmt_pos(p) -> str:
    return f"{p[0]}:{p[1]}"


def site_of(vs: VState) -> tuple:
    """(owner, position, kind) of the statement about to run, or of the exit."""
    if vs.at_exit():
        return (vs.owner, "exit", "exit")
    h = vs.head()
    return (vs.owner, fmt_pos(h.pos), A.stmt_kind(h))


def site_str(site: tuple) -> str:
    owner, pos, kind = site
    if pos == "exit":
        return f"{owner}:exit"
    return f"{owner}@{pos} {kind}"


@dataclass
class GuardEntry:
    site: tuple
    branch_pc: tuple
    checks: tuple
    theta: tuple
    intros: tuple
    state: SymState  # the guard's intermediate state σ'
    aux: dict = field(default_factory=dict)
    unknown: bool = False

    @property
    def failing(self) -> bool:
        return BOTTOM in self.checks


@dataclass
class Succ:
    """One derivation of an execution step."""

    vstate: VState
    intros: tuple
    aux: dict = field(default_factory=dict)


def _params_store(params, values) -> dict:
    return {name: v for (_, name), v in zip(params, values)}


def _as_imprecise(phi: A.GFormula) -> A.GFormula:
    return phi if phi.imprecise else A.GFormula(True, phi.body, pos=phi.pos)


def _havoc(ctx: Ctx, store: dict, xs) -> tuple:
    """Fresh values for the modified variables that are already bound."""
    st = dict(store)
    intros = []
    for x in xs:
        if x in st:
            t = ctx.fresh(st[x].sort)
            st[x] = t
            intros.append((t, ("var", x)))
    return st, tuple(intros)


# --- guards -------------------------------------------------------------------


def _branch_pc(base: tuple, pc: tuple, checks) -> tuple:
    """The entry's path condition without the conjuncts its value checks assume.

    Those conjuncts hold exactly when the checks pass, so selecting on them
    would turn a failing check into a missing guard."""
    assumed = {c for r in checks if isinstance(r, CheckValue) for c in T.flatten(r.term)}
    known = set(base)
    return tuple(c for c in pc if c in known or c not in assumed)


def guard(ctx: Ctx, vs: VState) -> list:
    site = site_of(vs)
    ctx.site = site_str(site)
    s = vs.sigma
    out: list = []

    def entry(o: Out, state: SymState, checks=None, theta=(), intros=None, **aux):
        checks = o.checks if checks is None else checks
        out.append(GuardEntry(site, _branch_pc(s.pc, state.pc, checks), checks, theta,
                              o.intros if intros is None else intros, state, aux, o.unknown))

    if vs.at_exit():
        for o in consume(ctx, s, vs.post):
            entry(o, o.state)
        return out
    h, _ = A.split_head(vs.stmt)
    if isinstance(h, (A.Skip, A.Alloc)):
        entry(Out(s), s)
    elif isinstance(h, (A.Assign, A.If)):
        for o in sym_eval(ctx, s, h.value if isinstance(h, A.Assign) else h.cond):
            entry(o, o.state)
    elif isinstance(h, A.AssignField):
        acc = A.GFormula(False, A.FAcc(A.Var(h.target), h.field))
        for o in sym_eval(ctx, s, h.value):
            for c in consume(ctx, o.state, acc):
                entry(c, c.state, merge(o.checks, c.checks), intros=o.intros + c.intros,
                      value=o.value)
    elif isinstance(h, A.Call):
        m = ctx.methods[h.method]
        for o in sym_eval_all(ctx, s, h.args):
            sp = o.state.with_store(_params_store(m.params, o.value))
            for c in consume(ctx, sp, m.pre):
                entry(c, c.state.with_store(s.store), merge(o.checks, c.checks),
                      rem_frame(ctx, c.state, m.pre), o.intros + c.intros,
                      args=o.value, consumed=c.state)
    elif isinstance(h, A.Assert):
        for c in consume(ctx, s, _as_imprecise(h.formula)):
            entry(c, c.state)
    elif isinstance(h, A.Fold):
        p = ctx.preds[h.pred]
        for o in sym_eval_all(ctx, s, h.args):
            sp = o.state.with_store(_params_store(p.params, o.value))
            for c in consume(ctx, sp, p.body):
                entry(c, c.state.with_store(s.store), merge(o.checks, c.checks),
                      intros=o.intros + c.intros)
    elif isinstance(h, A.Unfold):
        inst = A.GFormula(False, A.FPred(h.pred, h.args))
        for o in sym_eval_all(ctx, s, h.args):
            for c in consume(ctx, o.state, inst):
                entry(c, c.state, merge(o.checks, c.checks), intros=o.intros + c.intros)
    elif isinstance(h, A.While):
        inv = h.invariant
        for c in consume(ctx, s, inv):
            st, hv = _havoc(ctx, c.state.store, A.modified(h.body))
            theta = rem_frame(ctx, c.state, inv)
            for p in produce(ctx, c.state.with_store(st), inv):
                e = pc_eval(ctx, p.state, h.cond)
                entry(c, replace(c.state, pc=p.state.pc), merge(c.checks, e.checks), theta,
                      c.intros + hv + p.intros + e.intros, consumed=c.state, havoc=hv)
    else:
        raise TypeError(h)
    return out


# --- execution -----------------------------------------------------------------


def exec_step(ctx: Ctx, vs: VState) -> list:
    """All derivations σ ⊢ s → s' ⊣ σ' for the head of a non-skip statement."""
    site = site_of(vs)
    ctx.site = site_str(site)
    s = vs.sigma
    h, rest = A.split_head(vs.stmt)

    def nxt(state: SymState, stmt=rest, intros=(), **aux) -> Succ:
        return Succ(VState(state, stmt, vs.post, vs.owner), tuple(intros), aux)

    if isinstance(h, A.Skip):
        return [nxt(s)]
    if isinstance(h, A.Assign):
        return [nxt(o.state.set_var(h.target, o.value), intros=o.intros, eval_state=o.state)
                for o in sym_eval(ctx, s, h.value)]
    if isinstance(h, A.AssignField):
        acc = A.GFormula(False, A.FAcc(A.Var(h.target), h.field))
        out = []
        for o in sym_eval(ctx, s, h.value):
            for c in consume(ctx, o.state, acc):
                chunk = FieldChunk(h.field, c.state.store[h.target], o.value)
                out.append(nxt(replace(c.state, pheap=c.state.pheap + (chunk,)),
                               intros=o.intros + c.intros, eval_state=c.state))
        return out
    if isinstance(h, A.Alloc):
        t = ctx.fresh("ref")
        chunks = tuple(FieldChunk(f, t, default_term(ty)) for ty, f in ctx.structs[h.struct].fields)
        s2 = replace(s, pheap=s.pheap + chunks).set_var(h.target, t).with_pc(T.neq(t, T.NULL))
        return [nxt(s2, intros=((t, ("var", h.target)),))]
    if isinstance(h, A.Call):
        m = ctx.methods[h.method]
        out = []
        for o in sym_eval_all(ctx, s, h.args):
            ps = _params_store(m.params, o.value)
            for c in consume(ctx, o.state.with_store(ps), m.pre):
                out.extend(call_exit(ctx, vs, c.state, o.value, o.intros + c.intros))
        return out
    if isinstance(h, A.Assert):
        phi = _as_imprecise(h.formula)
        out = []
        for c in consume(ctx, s, phi):
            for p in produce(ctx, c.state, phi):
                out.append(nxt(replace(s, pc=p.state.pc), intros=c.intros + p.intros,
                               eval_state=p.state))
        return out
    if isinstance(h, A.Fold):
        p = ctx.preds[h.pred]
        out = []
        for o in sym_eval_all(ctx, s, h.args):
            sp = o.state.with_store(_params_store(p.params, o.value))
            for c in consume(ctx, sp, p.body):
                s3 = replace(c.state, pheap=c.state.pheap + (PredChunk(h.pred, o.value),))
                out.append(nxt(s3.with_store(s.store), intros=o.intros + c.intros,
                               eval_state=c.state))
        return out
    if isinstance(h, A.Unfold):
        p = ctx.preds[h.pred]
        inst = A.GFormula(False, A.FPred(h.pred, h.args))
        out = []
        for o in sym_eval_all(ctx, s, h.args):
            for c in consume(ctx, o.state, inst):
                sp = c.state.with_store(_params_store(p.params, o.value))
                for q in produce(ctx, sp, p.body):
                    out.append(nxt(q.state.with_store(s.store),
                                   intros=o.intros + c.intros + q.intros, eval_state=q.state))
        return out
    if isinstance(h, A.If):
        out = []
        for o in sym_eval(ctx, s, h.cond):
            for g, branch in ((o.value, h.then), (T.not_(o.value), h.else_)):
                if ctx.feasible(o.state, g):
                    out.append(nxt(o.state.with_pc(g), A.Seq(branch, rest, pos=h.pos),
                                   intros=o.intros))
        return out
    if isinstance(h, A.While):
        inv = h.invariant
        out = []
        for c in consume(ctx, s, inv):
            st, hv = _havoc(ctx, c.state.store, A.modified(h.body))
            for p in produce(ctx, c.state.with_store(st), inv):
                e = pc_eval(ctx, p.state, h.cond)
                out.append(nxt(p.state.with_pc(T.not_(e.value)),
                               intros=c.intros + hv + p.intros + e.intros))
        return out
    raise TypeError(h)


def call_exit(ctx: Ctx, vs: VState, consumed: SymState, args: tuple, intros: tuple) -> list:
    """Second half of SExecCall: fresh result, produce the post, restore the caller store."""
    h, rest = A.split_head(vs.stmt)
    m = ctx.methods[h.method]
    t = ctx.fresh(sort_of_type(m.ret))
    ps = _params_store(m.params, args)
    ps[A.RESERVED_RESULT] = t
    out = []
    for q in produce(ctx, consumed.with_store(ps), m.post):
        s3 = q.state.with_store(vs.sigma.store).set_var(h.target, t)
        out.append(Succ(VState(s3, rest, vs.post, vs.owner),
                        intros + ((t, ("result",)),) + q.intros, {"eval_state": q.state}))
    return out


# --- roots ----------------------------------------------------------------------


def entry_root(ctx: Ctx) -> VState:
    """SVerifyInit. The entry statement is wrapped as `entry; skip` like method bodies."""
    return VState(SymState(), A.seq(ctx.program.entry, A.Skip()), GTRUE, "main")


def method_roots(ctx: Ctx, m: A.MethodDef) -> list:
    """SVerifyMethod: (VState, intros) per produce branch of the precondition."""
    ctx.site = f"{m.name}:entry"
    store = {}
    intros = []
    for ty, x in m.params:
        t = ctx.fresh(sort_of_type(ty))
        store[x] = t
        intros.append((t, ("var", x)))
    out = []
    for p in produce(ctx, SymState(store=store), m.pre):
        out.append((VState(p.state, A.seq(m.body, A.Skip()), m.post, m.name),
                    tuple(intros) + p.intros))
    return out


def loop_owner(w: A.While) -> str:
    return f"loop@{fmt_pos(w.pos)}"


def loop_roots(ctx: Ctx, vs: VState) -> list:
    """SVerifyLoopBody for a while-state."""
    w = vs.head()
    ctx.site = f"{loop_owner(w)}:entry"
    s0 = vs.sigma
    st, hv = _havoc(ctx, s0.store, A.modified(w.body))
    out = []
    for p in produce(ctx, SymState(store=st, pc=s0.pc), w.invariant):
        e = pc_eval(ctx, p.state, w.cond)
        if not ctx.feasible(p.state, e.value):
            continue
        out.append((VState(p.state.with_pc(e.value), A.seq(w.body, A.Skip()), w.invariant,
                           loop_owner(w)), hv + p.intros + e.intros))
    return out


def loop_resume(ctx: Ctx, vs: VState, consumed: SymState) -> list:
    """SVerifyLoop: the while-state after one more iteration, from a consumed invariant."""
    w = vs.head()
    ctx.site = site_str(site_of(vs))
    st, hv = _havoc(ctx, vs.sigma.store, A.modified(w.body))
    out = []
    for p in produce(ctx, consumed.with_store(st), w.invariant):
        out.append((VState(p.state, vs.stmt, vs.post, vs.owner), hv + p.intros))
    return out


def method_of_owner(ctx: Ctx, owner: str) -> Optional[A.MethodDef]:
    return ctx.methods.get(owner)
