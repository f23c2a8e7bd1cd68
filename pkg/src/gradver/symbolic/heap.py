"""Heap chunks, symbolic states and the chunk-removal helpers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import terms as T
from .solver import Entailment, SatResult, Solver
from .terms import Term


@dataclass(frozen=True)
class FieldChunk:
    field: str
    recv: Term
    val: Term

    def __str__(self) -> str:
        return f"<{self.field},{T.show(self.recv)},{T.show(self.val)}>"


@dataclass(frozen=True)
class PredChunk:
    pred: str
    args: tuple

    def __str__(self) -> str:
        inner = ",".join(T.show(a) for a in self.args)
        return f"<{self.pred}{',' if inner else ''}{inner}>"


@dataclass(frozen=True)
class FieldPerm:
    recv: Term
    field: str

    def __str__(self) -> str:
        return f"<{T.show(self.recv)},{self.field}>"


@dataclass(frozen=True)
class PredPerm:
    pred: str
    args: tuple

    def __str__(self) -> str:
        inner = ",".join(T.show(a) for a in self.args)
        return f"<{self.pred}{',' if inner else ''}{inner}>"


def perm_of(c) -> object:
    if isinstance(c, FieldChunk):
        return FieldPerm(c.recv, c.field)
    return PredPerm(c.pred, c.args)


@dataclass(frozen=True)
class SymState:
    """<iota, H, optimistic H, store, pc>. Treated as immutable; the store dict is never mutated."""

    imprecise: bool = False
    pheap: tuple = ()
    oheap: tuple = ()
    store: dict = field(default_factory=dict, hash=False, compare=False)
    pc: tuple = ()

    def with_pc(self, t: Term) -> "SymState":
        if t is T.TRUE:
            return self
        return replace(self, pc=self.pc + tuple(x for x in T.flatten(t) if x is not T.TRUE))

    def set_var(self, x: str, t: Term) -> "SymState":
        st = dict(self.store)
        st[x] = t
        return replace(self, store=st)

    def with_store(self, st: dict) -> "SymState":
        return replace(self, store=dict(st))

    def pc_term(self) -> Term:
        return T.conj(self.pc)

    def describe(self) -> str:
        h = ", ".join(str(c) for c in self.pheap)
        oh = ", ".join(str(c) for c in self.oheap)
        st = ", ".join(f"{k}->{T.show(v)}" for k, v in self.store.items())
        g = " && ".join(T.show(c) for c in self.pc) or "true"
        return f"<{'T' if self.imprecise else 'F'}, {{{h}}}, {{{oh}}}, [{st}], {g}>"


def alias(solver: Solver, s: SymState, t: Term, f: str, t2: Term, f2: str) -> bool:
    """May (imprecise) or must (precise) the two locations coincide."""
    if f != f2:
        return False
    if t is t2:
        return True
    if s.imprecise:
        return solver.sat(s.pc + (T.eq(t, t2),), focus=[T.eq(t, t2)]) is not SatResult.UNSAT
    return solver.implies(s.pc, T.eq(t, t2)) is Entailment.PROVED


def rem_f(solver: Solver, heap: tuple, s: SymState, t: Term, f: str) -> tuple:
    """Drop field chunks that may alias (t, f) and every predicate chunk."""
    return tuple(c for c in heap
                 if isinstance(c, FieldChunk) and not alias(solver, s, t, f, c.recv, c.field))


def rem_fp(solver: Solver, heap: tuple, s: SymState, t: Term, f: str) -> tuple:
    """As rem_f, but predicate chunks are kept."""
    return tuple(c for c in heap
                 if isinstance(c, PredChunk) or not alias(solver, s, t, f, c.recv, c.field))


def find_field(solver: Solver, heap: tuple, s: SymState, t: Term, f: str) -> Optional[FieldChunk]:
    """First chunk for field f whose receiver is provably t under pc."""
    for c in heap:
        if isinstance(c, FieldChunk) and c.field == f:
            if c.recv is t or solver.implies(s.pc, T.eq(c.recv, t)) is Entailment.PROVED:
                return c
    return None


def find_pred(solver: Solver, heap: tuple, s: SymState, p: str, args: tuple) -> Optional[PredChunk]:
    for c in heap:
        if isinstance(c, PredChunk) and c.pred == p and len(c.args) == len(args):
            if all(a is b for a, b in zip(c.args, args)):
                return c
            if all(a is b or solver.implies(s.pc, T.eq(a, b)) is Entailment.PROVED
                   for a, b in zip(c.args, args)):
                return c
    return None
