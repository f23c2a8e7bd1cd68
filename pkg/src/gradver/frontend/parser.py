"""Recursive-descent parser for the C0-style concrete syntax.

Inside formulas a top-level `*` is the separating conjunction, so a
multiplication that appears in a specification has to be parenthesized.
A `void` method is desugared into an int method that assigns `result = 0`
at its end, and a bare call statement assigns into a reserved temporary.
"""
from __future__ import annotations

import re

from . import ast as A

KEYWORDS = {
    "struct", "predicate", "requires", "ensures", "if", "else", "while",
    "invariant", "alloc", "fold", "unfold", "assert", "true", "false",
    "NULL", "null", "then", "acc",
}
# after a parenthesized formula, these tokens mean it was really an expression
EXPR_CONTINUE = {"+", "-", "/", "<", ">", "<=", ">=", "==", "!=", "&&", "||", "."}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<char>'(?:\\.|[^'\\])')
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[<>+\-*/!=(){};,.?])
    """,
    re.VERBOSE | re.DOTALL,
)

TEMP_PREFIX = "_call"


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    @property
    def pos(self):
        return (self.line, self.col)


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "line_comment", "block_comment"):
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        i = m.end()
    toks.append(_Tok("EOF", "EOF", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.temp_counter = 0

    # -- token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "kw", "EOF")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.fail(f"expected {text!r} but found {self.tok.text!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected identifier but found {t.text!r}")
        self.i += 1
        return t.text

    def fail(self, msg: str):
        raise ParseError(msg, self.tok.line, self.tok.col)

    # -- program
    def program(self) -> A.Program:
        structs, preds, methods = [], [], []
        main = None
        while not self.at("EOF"):
            if self.at("struct") and self.peek(2).text == "{":
                structs.append(self.struct())
            elif self.at("predicate"):
                preds.append(self.predicate())
            else:
                m = self.method()
                if m.name == "main":
                    if main is not None:
                        raise ParseError("duplicate main method", *m.pos)
                    main = m
                else:
                    methods.append(m)
        if main is None:
            self.fail("program has no main method")
        if main.params:
            raise ParseError("main takes no parameters", *main.pos)
        if main.pre != A.GTRUE or main.post != A.GTRUE:
            raise ParseError("main must not carry a contract other than true", *main.pos)
        return A.Program(tuple(structs), tuple(preds), tuple(methods), main.body,
                         entry_pos=main.pos, entry_end=main.end)

    def type_name(self) -> str:
        self.accept("struct")
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected a type but found {t.text!r}")
        self.i += 1
        return t.text

    def struct(self) -> A.StructDef:
        pos = self.expect("struct").pos
        name = self.ident()
        self.expect("{")
        fields = []
        while not self.at("}"):
            ft = self.type_name()
            fn = self.ident()
            fields.append((ft, fn))
            if not self.accept(";") and not self.at("}"):
                self.fail("expected ';' after field")
        self.expect("}")
        self.accept(";")
        return A.StructDef(name, tuple(fields), pos=pos)

    def params(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                t = self.type_name()
                tok = self.tok
                n = self.ident()
                if n == A.RESERVED_RESULT:
                    raise ParseError("'result' cannot be used as a parameter", tok.line, tok.col)
                out.append((t, n))
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    def predicate(self) -> A.PredicateDef:
        pos = self.expect("predicate").pos
        name = self.ident()
        ps = self.params()
        self.expect("=")
        body = self.gformula()
        self.accept(";")
        return A.PredicateDef(name, ps, body, pos=pos)

    def method(self) -> A.MethodDef:
        pos = self.tok.pos
        ret = self.type_name()
        name = self.ident()
        ps = self.params()
        pre, post = A.GTRUE, A.GTRUE
        if self.accept("requires"):
            pre = self.gformula()
        if self.accept("ensures"):
            post = self.gformula()
        self.temp_counter = 0
        body, end = self.block_with_end()
        if ret == "void":
            ret = "int"
            body = _append(body, A.Assign(A.RESERVED_RESULT, A.Lit(0, "int"), pos=end))
        return A.MethodDef(name, ps, ret, pre, post, body, pos=pos, end=end)

    # -- statements
    def block_with_end(self):
        self.expect("{")
        items = []
        while not self.at("}"):
            if self.at("EOF"):
                self.fail("unterminated block")
            items.append(self.statement())
        end = self.expect("}").pos
        return A.seq(*items), end

    def statement(self) -> A.Stmt:
        t = self.tok
        pos = t.pos
        if self.at("{"):
            return self.block_with_end()[0]
        if self.accept("if"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            then = self.statement()
            els = self.statement() if self.accept("else") else A.Skip(pos=pos)
            return A.If(c, then, els, pos=pos)
        if self.accept("while"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            inv = self.gformula() if self.accept("invariant") else A.GTRUE
            body = self.statement()
            return A.While(c, inv, body, pos=pos)
        if self.accept("assert"):
            f = self.gformula()
            self.expect(";")
            return A.Assert(f, pos=pos)
        if self.at("fold") or self.at("unfold"):
            kw = self.tok.text
            self.i += 1
            name = self.ident()
            args = self.args()
            self.expect(";")
            return (A.Fold if kw == "fold" else A.Unfold)(name, args, pos=pos)
        if t.kind != "ident" and not self.at("struct"):
            self.fail(f"unexpected {t.text!r} at start of statement")
        decl = None
        if self.at("struct") or (self.peek().kind == "ident" and self.peek(2).text == "="):
            decl = self.type_name()
        name = self.ident()
        if decl is None and self.at("("):
            args = self.args()
            self.expect(";")
            temp = f"{TEMP_PREFIX}{self.temp_counter}"
            self.temp_counter += 1
            return A.Call(temp, name, args, pos=pos)
        if decl is None and self.accept("."):
            f = self.ident()
            self.expect("=")
            v = self.expr()
            self.expect(";")
            return A.AssignField(name, f, v, pos=pos)
        self.expect("=")
        if self.accept("alloc"):
            self.expect("(")
            s = self.type_name()
            self.expect(")")
            self.expect(";")
            return A.Alloc(name, s, decl=decl, pos=pos)
        if self.tok.kind == "ident" and self.peek().text == "(":
            m = self.ident()
            args = self.args()
            self.expect(";")
            return A.Call(name, m, args, decl=decl, pos=pos)
        v = self.expr()
        self.expect(";")
        return A.Assign(name, v, decl=decl, pos=pos)

    def args(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                out.append(self.expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    # -- formulas
    def gformula(self) -> A.GFormula:
        pos = self.tok.pos
        if self.accept("?"):
            if self.accept("*"):
                body = self.formula()
            else:
                body = A.FExpr(A.Lit(True, "bool", pos=pos), pos=pos)
            return A.GFormula(True, body, pos=pos)
        return A.GFormula(False, self.formula(), pos=pos)

    def formula(self) -> A.Formula:
        left = self.fatom()
        while self.at("*"):
            pos = self.tok.pos
            self.i += 1
            right = self.fatom()
            left = A.FConj(left, right, pos=pos)
        return left

    def fatom(self) -> A.Formula:
        t = self.tok
        pos = t.pos
        if self.at("?"):
            self.fail("'?' may only appear as the leading conjunct of a formula")
        if self.accept("acc"):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            if not isinstance(e, A.FieldRead):
                raise ParseError("acc expects a field access e.f", *pos)
            return A.FAcc(e.recv, e.field, pos=pos)
        if self.accept("if"):
            c = self.expr(star=False)
            self.expect("then")
            a = self.formula()
            self.expect("else")
            b = self.formula()
            return A.FCond(c, a, b, pos=pos)
        if t.kind == "ident" and self.peek().text == "(":
            name = self.ident()
            return A.FPred(name, self.args(), pos=pos)
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                inner = self.formula()
                self.expect(")")
                if not (self.tok.kind == "op" and self.tok.text in EXPR_CONTINUE):
                    return inner
            except ParseError:
                pass
            self.i = save
        return A.FExpr(self.expr(star=False), pos=pos)

    # -- expressions (precedence climbing)
    _LEVELS = (("||",), ("&&",), ("==", "!="), ("<", ">", "<=", ">="), ("+", "-"), ("*", "/"))

    def expr(self, star: bool = True) -> A.Expr:
        return self._binary(0, star)

    def _binary(self, level: int, star: bool) -> A.Expr:
        if level == len(self._LEVELS):
            return self._unary(star)
        left = self._binary(level + 1, star)
        ops = self._LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            if self.tok.text == "*" and not star:
                break
            op_tok = self.tok
            self.i += 1
            right = self._binary(level + 1, star)
            left = A.BinOp(op_tok.text, left, right, pos=op_tok.pos)
        return left

    def _unary(self, star: bool) -> A.Expr:
        pos = self.tok.pos
        if self.accept("!"):
            return A.Not(self._unary(star), pos=pos)
        if self.at("-"):
            self.i += 1
            if self.tok.kind == "num":
                n = int(self.tok.text)
                self.i += 1
                return self._postfix(A.Lit(-n, "int", pos=pos))
            return A.BinOp("-", A.Lit(0, "int", pos=pos), self._unary(star), pos=pos)
        return self._postfix(self._primary())

    def _postfix(self, e: A.Expr) -> A.Expr:
        while self.at("."):
            self.i += 1
            pos = self.tok.pos
            f = self.ident()
            e = A.FieldRead(e, f, pos=pos)
        return e

    def _primary(self) -> A.Expr:
        t = self.tok
        pos = t.pos
        if t.kind == "num":
            self.i += 1
            return A.Lit(int(t.text), "int", pos=pos)
        if t.kind == "char":
            self.i += 1
            body = t.text[1:-1]
            if body.startswith("\\"):
                body = {"n": "\n", "t": "\t", "0": "\0"}.get(body[1], body[1])
            return A.Lit(body, "char", pos=pos)
        if self.accept("true"):
            return A.Lit(True, "bool", pos=pos)
        if self.accept("false"):
            return A.Lit(False, "bool", pos=pos)
        if self.accept("NULL") or self.accept("null"):
            return A.Lit(None, "null", pos=pos)
        if self.accept("("):
            e = self.expr(star=True)
            self.expect(")")
            return e
        if t.kind == "ident":
            self.i += 1
            if self.at("("):
                self.fail(f"calls are not expressions; '{t.text}(...)' must be a statement")
            return A.Var(t.text, pos=pos)
        self.fail(f"unexpected {t.text!r} in expression")


def _append(body: A.Stmt, s: A.Stmt) -> A.Stmt:
    if isinstance(body, A.Skip):
        return s
    if isinstance(body, A.Seq):
        return A.Seq(body.first, _append(body.second, s), pos=body.pos)
    return A.Seq(body, s, pos=body.pos)


def parse_program(text: str) -> A.Program:
    """Parse source text into a Program. Raises ParseError with line/column."""
    return _Parser(text).program()


def parse_expr(text: str) -> A.Expr:
    p = _Parser(text)
    e = p.expr()
    p.expect("EOF")
    return e


def parse_gformula(text: str) -> A.GFormula:
    p = _Parser(text)
    f = p.gformula()
    p.expect("EOF")
    return f
