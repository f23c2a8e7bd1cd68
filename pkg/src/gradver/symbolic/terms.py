"""Symbolic terms.

Terms are hash-consed: building the same term twice returns the same
object, so equality is identity and hashing is O(1). Path conditions are
kept as tuples of conjuncts instead of one deep And tree.
"""
from __future__ import annotations

import itertools
import threading
import weakref
from dataclasses import dataclass

SORTS = ("int", "bool", "char", "ref")

_table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class Term:
    __slots__ = ("kind", "sort", "args", "_syms", "_key", "__weakref__")

    def __repr__(self) -> str:
        return show(self)


def _mk(kind: str, sort: str, args: tuple) -> Term:
    key = (kind, sort, args)
    with _lock:
        t = _table.get(key)
        if t is None:
            t = Term()
            t.kind, t.sort, t.args = kind, sort, args
            t._syms = None
            t._key = None
            _table[key] = t
    return t


# --- constructors ------------------------------------------------------------


def sym(ident: int, sort: str) -> Term:
    return _mk("sym", sort, (ident,))


def lit(value, sort: str) -> Term:
    if sort == "bool":
        value = bool(value)
    # bool and int hash alike, so the sort is part of the key already
    return _mk("lit", sort, (value,))


TRUE = lit(True, "bool")
FALSE = lit(False, "bool")
NULL = lit(None, "ref")


def is_lit(t: Term) -> bool:
    return t.kind == "lit"


def is_sym(t: Term) -> bool:
    return t.kind == "sym"


def not_(t: Term) -> Term:
    if t is TRUE:
        return FALSE
    if t is FALSE:
        return TRUE
    if t.kind == "not":
        return t.args[0]
    return _mk("not", "bool", (t,))


def and_(a: Term, b: Term) -> Term:
    if a is TRUE:
        return b
    if b is TRUE:
        return a
    if a is FALSE or b is FALSE:
        return FALSE
    return _mk("and", "bool", (a, b))


def or_(a: Term, b: Term) -> Term:
    if a is FALSE:
        return b
    if b is FALSE:
        return a
    if a is TRUE or b is TRUE:
        return TRUE
    return _mk("or", "bool", (a, b))


ARITH = ("+", "-", "*", "/")
RELS = ("==", "!=", "<", ">", "<=", ">=")


def op(o: str, a: Term, b: Term) -> Term:
    """Binary operator. && and || are routed to and_/or_."""
    if o == "&&":
        return and_(a, b)
    if o == "||":
        return or_(a, b)
    sort = "int" if o in ARITH else "bool"
    return _mk("op", sort, (o, a, b))


def eq(a: Term, b: Term) -> Term:
    return op("==", a, b)


def neq(a: Term, b: Term) -> Term:
    return op("!=", a, b)


def conj(items) -> Term:
    out = TRUE
    for t in reversed(list(items)):
        out = and_(t, out)
    return out


# --- inspection ----------------------------------------------------------------


def syms_of(t: Term) -> frozenset:
    """Symbolic values occurring in t (cached)."""
    if t._syms is None:
        if t.kind == "sym":
            t._syms = frozenset((t,))
        elif t.kind == "lit":
            t._syms = frozenset()
        else:
            acc = frozenset()
            for a in t.args:
                if isinstance(a, Term):
                    acc = acc | syms_of(a)
            t._syms = acc
    return t._syms


def sort_key(t: Term) -> str:
    """Stable ordering key, independent of object identity."""
    if t._key is None:
        t._key = show(t)
    return t._key


def flatten(t: Term) -> list:
    if t.kind == "and":
        return flatten(t.args[0]) + flatten(t.args[1])
    return [t]


def show(t: Term) -> str:
    k = t.kind
    if k == "sym":
        return f"v{t.args[0]}"
    if k == "lit":
        v = t.args[0]
        if t.sort == "ref":
            return "null"
        if t.sort == "bool":
            return "true" if v else "false"
        if t.sort == "char":
            return repr(v)
        return str(v)
    if k == "not":
        return f"!{_wrap(t.args[0])}"
    if k == "and":
        return f"{_wrap(t.args[0])} && {_wrap(t.args[1])}"
    if k == "or":
        return f"{_wrap(t.args[0])} || {_wrap(t.args[1])}"
    o, a, b = t.args
    return f"{_wrap(a)} {o} {_wrap(b)}"


def _wrap(t: Term) -> str:
    s = show(t)
    return s if t.kind in ("sym", "lit", "not") else f"({s})"


# --- concrete evaluation -------------------------------------------------------


class EvalError(Exception):
    """Raised for division by zero or a missing valuation entry."""


def evaluate(t: Term, val) -> object:
    """Value of t under a valuation (mapping Term(sym) -> value).

    The valuation may be any object with `get(term)`; missing entries
    raise EvalError.
    """
    k = t.kind
    if k == "lit":
        return t.args[0]
    if k == "sym":
        v = val.get(t, _MISSING)
        if v is _MISSING:
            raise EvalError(f"no value for {show(t)}")
        return v
    if k == "not":
        return not evaluate(t.args[0], val)
    if k == "and":
        return bool(evaluate(t.args[0], val)) and bool(evaluate(t.args[1], val))
    if k == "or":
        return bool(evaluate(t.args[0], val)) or bool(evaluate(t.args[1], val))
    o, a, b = t.args
    x, y = evaluate(a, val), evaluate(b, val)
    return apply_op(o, x, y)


_MISSING = object()


def apply_op(o: str, x, y):
    if o == "+":
        return x + y
    if o == "-":
        return x - y
    if o == "*":
        return x * y
    if o == "/":
        if y == 0:
            raise EvalError("division by zero")
        q = abs(x) // abs(y)  # C0 division truncates toward zero
        return q if (x >= 0) == (y >= 0) else -q
    if o == "==":
        return _same(x, y)
    if o == "!=":
        return not _same(x, y)
    if o == "<":
        return x < y
    if o == ">":
        return x > y
    if o == "<=":
        return x <= y
    if o == ">=":
        return x >= y
    if o == "&&":
        return x and y
    if o == "||":
        return x or y
    raise ValueError(o)


def _same(x, y) -> bool:
    # bools and ints never meet in well-typed terms, but keep them distinct anyway
    if isinstance(x, bool) != isinstance(y, bool):
        return False
    return x == y


class Fresh:
    """Per-run supply of fresh symbolic values."""

    def __init__(self, start: int = 1):
        self._it = itertools.count(start)
        self._lock = threading.Lock()

    def __call__(self, sort: str) -> Term:
        with self._lock:
            n = next(self._it)
        return sym(n, sort)


@dataclass(frozen=True)
class ModelRef:
    """Reference value in a solver model."""

    k: int

    def __repr__(self) -> str:
        return f"ref{self.k}"
