"""Syntactic self-framing check.

Conjuncts are scanned left to right. A dereference `e.f` is accepted only
once an `acc(e.f)` with the identical receiver has been seen earlier on the
same path through the formula. Accepting is sound; many semantically
self-framed formulas are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A


@dataclass(frozen=True)
class Framed:
    pass


@dataclass(frozen=True)
class NotFramed:
    witness: A.Expr  # the first unframed dereference


FramingResult = object  # Framed | NotFramed


def _derefs(e: A.Expr, out: list) -> list:
    """Field reads of e, innermost first."""
    if isinstance(e, A.FieldRead):
        _derefs(e.recv, out)
        out.append(e)
    elif isinstance(e, A.BinOp):
        _derefs(e.left, out)
        _derefs(e.right, out)
    elif isinstance(e, A.Not):
        _derefs(e.operand, out)
    return out


def _first_unowned(e: A.Expr, owned: frozenset) -> Optional[A.Expr]:
    for d in _derefs(e, []):
        if (d.recv, d.field) not in owned:
            return d
    return None


def _scan(phi: A.Formula, owned: frozenset):
    """Return (owned_after, witness_or_None)."""
    if isinstance(phi, A.FExpr):
        return owned, _first_unowned(phi.expr, owned)
    if isinstance(phi, A.FAcc):
        w = _first_unowned(phi.recv, owned)
        return owned | {(phi.recv, phi.field)}, w
    if isinstance(phi, A.FPred):
        for a in phi.args:
            w = _first_unowned(a, owned)
            if w is not None:
                return owned, w
        return owned, None
    if isinstance(phi, A.FConj):
        mid, w = _scan(phi.left, owned)
        if w is not None:
            return mid, w
        return _scan(phi.right, mid)
    if isinstance(phi, A.FCond):
        w = _first_unowned(phi.cond, owned)
        if w is not None:
            return owned, w
        a, wa = _scan(phi.then, owned)
        if wa is not None:
            return owned, wa
        b, wb = _scan(phi.else_, owned)
        if wb is not None:
            return owned, wb
        return a & b, None
    raise TypeError(phi)


def check_self_framing(phi) -> object:
    """Framed or NotFramed(witness) for a formula; imprecise formulas are framed."""
    if isinstance(phi, A.GFormula):
        if phi.imprecise:
            return Framed()
        phi = phi.body
    _, w = _scan(phi, frozenset())
    return Framed() if w is None else NotFramed(w)
