"""Abstract syntax for GVL_C0 programs.

Every node carries a source position that is ignored by equality, so two
trees built from different texts compare equal when their structure does.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = tuple  # (line, col)
NOPOS: Pos = (0, 0)

PRIMITIVE_TYPES = ("int", "bool", "char")
RESERVED_RESULT = "result"


def _pos() -> Pos:
    return field(default=NOPOS, compare=False, repr=False)


# --- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: object  # int, bool, str (char) or None (null)
    type: str  # int | bool | char | null
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class FieldRead:
    recv: "Expr"
    field: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    pos: Pos = _pos()


Expr = Union[Lit, Var, FieldRead, BinOp, Not]

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", ">", "<=", ">=")
EQ_OPS = ("==", "!=")
LOGIC_OPS = ("&&", "||")
BINARY_OPS = ARITH_OPS + CMP_OPS + EQ_OPS + LOGIC_OPS

TRUE = Lit(True, "bool")
FALSE = Lit(False, "bool")
NULL = Lit(None, "null")


# --- formulas --------------------------------------------------------------


@dataclass(frozen=True)
class FExpr:
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class FAcc:
    recv: Expr
    field: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class FPred:
    name: str
    args: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class FConj:
    left: "Formula"
    right: "Formula"
    pos: Pos = _pos()


@dataclass(frozen=True)
class FCond:
    cond: Expr
    then: "Formula"
    else_: "Formula"
    pos: Pos = _pos()


Formula = Union[FExpr, FAcc, FPred, FConj, FCond]


@dataclass(frozen=True)
class GFormula:
    imprecise: bool
    body: Formula
    pos: Pos = _pos()


GTRUE = GFormula(False, FExpr(TRUE))


# --- statements ------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    pos: Pos = _pos()


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr
    decl: Optional[str] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class AssignField:
    target: str
    field: str
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Alloc:
    target: str
    struct: str
    decl: Optional[str] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    target: str
    method: str
    args: tuple
    decl: Optional[str] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assert:
    formula: GFormula
    pos: Pos = _pos()


@dataclass(frozen=True)
class Fold:
    pred: str
    args: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unfold:
    pred: str
    args: tuple
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    else_: "Stmt"
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    invariant: GFormula
    body: "Stmt"
    pos: Pos = _pos()


Stmt = Union[Skip, Seq, Assign, AssignField, Alloc, Call, Assert, Fold, Unfold, If, While]


# --- declarations ----------------------------------------------------------


@dataclass(frozen=True)
class StructDef:
    name: str
    fields: tuple  # of (type, name)
    pos: Pos = _pos()

    def field_type(self, f: str) -> Optional[str]:
        for t, n in self.fields:
            if n == f:
                return t
        return None


@dataclass(frozen=True)
class PredicateDef:
    name: str
    params: tuple  # of (type, name)
    body: GFormula
    pos: Pos = _pos()

    @property
    def param_names(self) -> tuple:
        return tuple(n for _, n in self.params)


@dataclass(frozen=True)
class MethodDef:
    name: str
    params: tuple  # of (type, name)
    ret: str
    pre: GFormula
    post: GFormula
    body: Stmt
    pos: Pos = _pos()
    end: Pos = _pos()

    @property
    def param_names(self) -> tuple:
        return tuple(n for _, n in self.params)


@dataclass(frozen=True)
class Program:
    structs: tuple
    predicates: tuple
    methods: tuple
    entry: Stmt
    entry_pos: Pos = _pos()
    entry_end: Pos = _pos()

    def struct(self, name: str) -> Optional[StructDef]:
        for s in self.structs:
            if s.name == name:
                return s
        return None

    def predicate(self, name: str) -> Optional[PredicateDef]:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def method(self, name: str) -> Optional[MethodDef]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def field_type(self, f: str) -> Optional[str]:
        for s in self.structs:
            t = s.field_type(f)
            if t is not None:
                return t
        return None


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence of the given statements (skip when empty)."""
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def split_head(s: Stmt):
    """Return (head, rest) for a statement in sequence position.

    Left-nested sequences are re-associated so the head is never a Seq.
    A lone non-sequence statement has rest skip.
    """
    while isinstance(s, Seq) and isinstance(s.first, Seq):
        s = Seq(s.first.first, Seq(s.first.second, s.second, pos=s.pos), pos=s.pos)
    if isinstance(s, Seq):
        return s.first, s.second
    return s, Skip()


def conjuncts(phi: Formula) -> list:
    if isinstance(phi, FConj):
        return conjuncts(phi.left) + conjuncts(phi.right)
    return [phi]


def expr_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, FieldRead):
        return expr_vars(e.recv)
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Not):
        return expr_vars(e.operand)
    return set()


def formula_vars(phi) -> set:
    if isinstance(phi, GFormula):
        return formula_vars(phi.body)
    if isinstance(phi, FExpr):
        return expr_vars(phi.expr)
    if isinstance(phi, FAcc):
        return expr_vars(phi.recv)
    if isinstance(phi, FPred):
        out: set = set()
        for a in phi.args:
            out |= expr_vars(a)
        return out
    if isinstance(phi, FConj):
        return formula_vars(phi.left) | formula_vars(phi.right)
    if isinstance(phi, FCond):
        return expr_vars(phi.cond) | formula_vars(phi.then) | formula_vars(phi.else_)
    raise TypeError(phi)


def modified(s: Stmt) -> list:
    """Variables assigned anywhere in s, in first-assignment order."""
    out: list = []

    def walk(t: Stmt) -> None:
        if isinstance(t, (Assign, Alloc, Call)):
            if t.target not in out:
                out.append(t.target)
        elif isinstance(t, Seq):
            walk(t.first)
            walk(t.second)
        elif isinstance(t, If):
            walk(t.then)
            walk(t.else_)
        elif isinstance(t, While):
            walk(t.body)

    walk(s)
    return out


def stmt_kind(s: Stmt) -> str:
    return type(s).__name__.lower()
