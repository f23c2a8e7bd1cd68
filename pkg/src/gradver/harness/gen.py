"""Random well-formed GVL programs.

Programs are built as trees, printed and parsed back so that every node
carries a real source position (sites are keyed by position). The shapes
are biased towards code a verifier can follow: heap accesses go through
variables that were allocated locally or whose permission a contract
provides, and loops count a fresh variable up to a small bound.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ..frontend import ast as A
from ..frontend.parser import parse_program
from ..frontend.printer import print_program
from ..frontend.wellformed import check_well_formed

NODE = "Node"
FIELD_POOL = (("int", "val"), (NODE, "next"), ("bool", "flag"))


@dataclass
class GenBounds:
    methods: int = 3
    stmts: int = 12
    fields: int = 3
    predicates: int = 2
    heap: int = 4  # allocations in the entry prologue and loop bound
    imprecision: float = 0.3


def _lit(v) -> A.Lit:
    if v is None:
        return A.NULL
    return A.Lit(v, "bool" if isinstance(v, bool) else "int")


def _v(x: str) -> A.Var:
    return A.Var(x)


def _b(op, a, b):
    return A.BinOp(op, a, b)


def _star(*parts):
    parts = [p for p in parts if p is not None]
    if not parts:
        return A.FExpr(A.TRUE)
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = A.FConj(p, out)
    return out


class _Scope:
    """Variables available at a program point."""

    def __init__(self, types=None, owned=None, params=(), folded=()):
        self.types = dict(types or {})
        # ref vars known non-null together with the fields we expect to own
        self.owned = {k: set(v) for k, v in (owned or {}).items()}
        self.params = set(params)
        self.folded = set(folded)  # (predicate, var) instances we expect to hold

    def copy(self) -> "_Scope":
        return _Scope(self.types, self.owned, self.params, self.folded)

    def forget(self, x: str) -> None:
        self.owned.pop(x, None)
        self.folded = {(p, y) for p, y in self.folded if y != x}

    def of(self, ty: str, assignable: bool = False) -> list:
        return sorted(x for x, t in self.types.items()
                      if t == ty and not (assignable and x in self.params)
                      and x != A.RESERVED_RESULT)


class Generator:
    def __init__(self, rng: random.Random, bounds: GenBounds):
        self.r = rng
        self.b = bounds
        self.n = 0
        self.counters: set = set()  # loop counters are never reassigned

    # -- helpers ---------------------------------------------------------------

    def fresh(self, base: str) -> str:
        self.n += 1
        return f"{base}{self.n}"

    def coin(self, p: float) -> bool:
        return self.r.random() < p

    def gradual(self, body: A.Formula) -> A.GFormula:
        return A.GFormula(self.coin(self.b.imprecision), body)

    def int_expr(self, sc: _Scope, depth: int = 0) -> A.Expr:
        ints = sc.of("int")
        reads = [(x, f) for x, fs in sc.owned.items() for f in fs if self.ftype(f) == "int"]
        roll = self.r.random()
        if depth < 1 and roll < 0.25:
            op = self.r.choice(("+", "-", "*"))
            return _b(op, self.int_expr(sc, depth + 1), self.int_expr(sc, depth + 1))
        if ints and roll < 0.6:
            return _v(self.r.choice(ints))
        if reads and roll < 0.75:
            x, f = self.r.choice(reads)
            return A.FieldRead(_v(x), f)
        return _lit(self.r.randint(-2, 3))

    def bool_expr(self, sc: _Scope) -> A.Expr:
        roll = self.r.random()
        bools = sc.of("bool")
        if bools and roll < 0.2:
            return _v(self.r.choice(bools))
        refs = sc.of(NODE)
        if refs and roll < 0.35:
            return _b(self.r.choice(("==", "!=")), _v(self.r.choice(refs)), A.NULL)
        if roll < 0.4:
            return _lit(self.coin(0.5))
        op = self.r.choice(A.CMP_OPS + A.EQ_OPS)
        return _b(op, self.int_expr(sc, 1), self.int_expr(sc, 1))

    def expr_of(self, ty: str, sc: _Scope) -> A.Expr:
        if ty == "int":
            return self.int_expr(sc)
        if ty == "bool":
            return self.bool_expr(sc)
        refs = sc.of(NODE)
        if refs and self.coin(0.8):
            return _v(self.r.choice(refs))
        return A.NULL

    def ftype(self, f: str) -> str:
        return dict((n, t) for t, n in self.fields)[f]

    # -- declarations -------------------------------------------------------------

    def program(self) -> A.Program:
        k = self.r.randint(1, min(self.b.fields, len(FIELD_POOL)))
        self.fields = tuple(f for f in FIELD_POOL if f[1] == "val") + tuple(
            self.r.sample([f for f in FIELD_POOL if f[1] != "val"], k - 1))
        self.fields = tuple(f for f in FIELD_POOL if f in self.fields)
        struct = A.StructDef(NODE, self.fields)
        self.pred_fields: dict = {}
        self.preds = [self.predicate(i) for i in range(self.r.randint(0, self.b.predicates))]
        self.methods: list = []
        self.needs: dict = {}  # method -> (fields of c, predicates of c, post repeats pre)
        for i in range(self.r.randint(0, self.b.methods)):
            self.methods.append(self.method(i))
        entry = self.entry()
        return A.Program((struct,), tuple(self.preds), tuple(self.methods), entry)

    def predicate(self, i: int) -> A.PredicateDef:
        name = f"p{i}"
        x = _v("x")
        opts = ["val"]
        names = [n for _, n in self.fields]
        if "next" in names:
            opts.append("list")
        if "flag" in names:
            opts.append("flag")
        kind = self.r.choice(opts)
        if kind == "val":
            body = _star(A.FAcc(x, "val"),
                         A.FExpr(_b(">=", A.FieldRead(x, "val"), _lit(0))) if self.coin(0.4) else None)
        elif kind == "flag":
            body = A.FAcc(x, "flag")
        else:
            body = _star(A.FAcc(x, "next"),
                         A.FCond(_b("==", A.FieldRead(x, "next"), A.NULL), A.FExpr(A.TRUE),
                                 A.FPred(name, (A.FieldRead(x, "next"),))))
        g = self.gradual(body)
        if g.imprecise and self.coin(0.3):
            g = A.GFormula(True, A.FExpr(A.TRUE))
        self.pred_fields[name] = {"val": {"val"}, "flag": {"flag"}, "list": {"next"}}[kind]
        if g.body == A.FExpr(A.TRUE):
            self.pred_fields[name] = set()
        return A.PredicateDef(name, ((NODE, "x"),), g)

    def contract_part(self, c: str, v: Optional[str]):
        """(formula, owned fields, folded instances) about parameter c."""
        roll = self.r.random()
        if self.preds and roll < 0.25:
            p = self.r.choice(self.preds)
            return A.FPred(p.name, (_v(c),)), set(), {(p.name, c)}
        if roll < 0.45:
            return A.FExpr(_b("!=", _v(c), A.NULL)), set(), set()
        if roll < 0.55:
            return A.FExpr(A.TRUE), set(), set()
        fs = [n for _, n in self.fields]
        pick = self.r.sample(fs, self.r.randint(1, len(fs)))
        parts = [A.FAcc(_v(c), f) for f in pick]
        if v is not None and "val" in pick and self.coin(0.4):
            parts.append(A.FExpr(_b("==", A.FieldRead(_v(c), "val"), _v(v))))
        return _star(*parts), set(pick), set()

    def method(self, i: int) -> A.MethodDef:
        name = f"m{i}"
        params = [(NODE, "c")]
        v = None
        if self.coin(0.6):
            params.append(("int", "v"))
            v = "v"
        ret = self.r.choice(("int", "int", NODE))
        pre, owned, folded = self.contract_part("c", v)
        pre_g = self.gradual(pre)
        if self.coin(0.6):
            post = pre
        else:
            post, _, _ = self.contract_part("c", v)
        if ret == "int" and self.coin(0.3):
            post = _star(post, A.FExpr(_b(">=", _v(A.RESERVED_RESULT), _lit(0))))
        post_g = A.GFormula(pre_g.imprecise or self.coin(self.b.imprecision), post)
        types = {"c": NODE, A.RESERVED_RESULT: ret}
        if v:
            types["v"] = "int"
        self.needs[name] = (owned, {p for p, _ in folded}, post == pre)
        sc = _Scope(types, {"c": owned} if owned or pre_g.imprecise else {}, params=("c", "v"),
                    folded=folded)
        if pre_g.imprecise and not owned:
            sc.owned["c"] = {self.r.choice([n for _, n in self.fields])}
        budget = self.r.randint(1, self.b.stmts)
        body = self.block(sc, budget - 1, depth=0, callable_=list(self.methods))
        body = A.seq(*body, A.Assign(A.RESERVED_RESULT, self.expr_of(ret, sc)))
        return A.MethodDef(name, tuple(params), ret, pre_g, post_g, body)

    def entry(self) -> A.Stmt:
        sc = _Scope({A.RESERVED_RESULT: "int"})
        pro = []
        for _ in range(self.r.randint(1, max(1, min(self.b.heap, 2)))):
            x = self.fresh("n")
            pro.append(A.Alloc(x, NODE))
            sc.types[x] = NODE
            sc.owned[x] = {n for _, n in self.fields}
        budget = self.r.randint(1, self.b.stmts)
        body = self.block(sc, max(0, budget - len(pro) - 1), depth=0,
                          callable_=list(self.methods))
        return A.seq(*pro, *body, A.Assign(A.RESERVED_RESULT, self.int_expr(sc)))

    # -- statements -----------------------------------------------------------------

    def block(self, sc: _Scope, budget: int, depth: int, callable_) -> list:
        out = []
        while budget > 0:
            s, used = self.stmt(sc, budget, depth, callable_)
            if s is None:
                continue
            out.append(s)
            budget -= used
        return out

    def stmt(self, sc: _Scope, budget: int, depth: int, callable_):
        kinds = ["assign", "alloc", "write", "read", "assert"]
        if sc.owned:
            kinds += ["write", "read"]
        if callable_:
            kinds += ["call", "call"]
        if self.preds and sc.of(NODE):
            kinds += ["fold", "unfold"]
        if depth < 2 and budget >= 3:
            kinds += ["if", "while"]
        k = self.r.choice(kinds)
        if k == "assign":
            e = self.int_expr(sc)
            return A.Assign(self.target(sc, "int"), e), 1
        if k == "alloc":
            x = self.target(sc, NODE)
            sc.owned[x] = {n for _, n in self.fields}
            return A.Alloc(x, NODE), 1
        if k == "write":
            cands = sorted((x, f) for x, fs in sc.owned.items() for f in fs)
            if not cands:
                return None, 0
            x, f = self.r.choice(cands)
            e = self.expr_of(self.ftype(f), sc)
            return A.AssignField(x, f, e), 1
        if k == "read":
            cands = sorted((x, f) for x, fs in sc.owned.items() for f in fs)
            if not cands:
                return None, 0
            x, f = self.r.choice(cands)
            ty = self.ftype(f)
            return A.Assign(self.target(sc, ty), A.FieldRead(_v(x), f)), 1
        if k == "assert":
            return A.Assert(self.gradual(self.assertion(sc))), 1
        if k == "call":
            m = self.r.choice(callable_)
            fields, preds, returns = self.needs[m.name]
            fit = [x for x in sc.of(NODE) if fields <= sc.owned.get(x, set())
                   and all((p, x) in sc.folded for p in preds)
                   and (x in sc.owned or not fields and not preds and self.coin(0.3))]
            if fit and not self.coin(0.1):
                c = _v(self.r.choice(fit))
            elif self.coin(0.2):
                c = self.expr_of(NODE, sc)
            else:
                return None, 0
            args = [c] + [self.int_expr(sc) for _ in m.params[1:]]
            y = self.target(sc, m.ret)
            # the callee keeps whatever its contract takes unless the post gives it back
            if isinstance(c, A.Var) and c.name != y and not returns:
                if c.name in sc.owned:
                    sc.owned[c.name] = set()
                sc.folded = {(p, z) for p, z in sc.folded if z != c.name}
            return A.Call(y, m.name, tuple(args)), 1
        if k == "fold":
            cands = sorted((p.name, x) for p in self.preds for x in sc.owned
                           if self.pred_fields[p.name] <= sc.owned[x])
            if not cands or self.coin(0.05):
                if self.coin(0.8):
                    return None, 0
                cands = [(p.name, x) for p in self.preds for x in sc.of(NODE)]
            p, x = self.r.choice(cands)
            if x in sc.owned:
                sc.owned[x] -= self.pred_fields[p]
            sc.folded.add((p, x))
            return A.Fold(p, (_v(x),)), 1
        if k == "unfold":
            cands = sorted(sc.folded)
            if not cands or self.coin(0.05):
                if self.coin(0.8):
                    return None, 0
                cands = [(p.name, x) for p in self.preds for x in sc.of(NODE)]
            p, x = self.r.choice(cands)
            sc.folded.discard((p, x))
            sc.owned.setdefault(x, set()).update(self.pred_fields[p])
            return A.Unfold(p, (_v(x),)), 1
        if k == "if":
            n1 = self.r.randint(1, budget - 2)
            n2 = self.r.randint(0, budget - 1 - n1)
            cond = self.bool_expr(sc)
            a = self.block(sc.copy(), n1, depth + 1, callable_)
            b = self.block(sc.copy(), n2, depth + 1, callable_)
            return A.If(cond, A.seq(*a), A.seq(*b)), 1 + n1 + n2
        if k == "while":
            i = self.fresh("i")
            self.counters.add(i)
            n = self.r.randint(0, self.b.heap)
            inner = sc.copy()
            inner.types[i] = "int"
            keep = [x for x in sorted(sc.owned) if self.coin(0.5)]
            inv_parts = [A.FAcc(_v(x), f) for x in keep for f in sorted(sc.owned[x])]
            inv = self.gradual(_star(*inv_parts))
            inner.owned = {x: set(sc.owned[x]) for x in keep}
            inner.folded = set()
            if inv.imprecise:
                inner.owned = {x: set(fs) for x, fs in sc.owned.items()}
                inner.folded = set(sc.folded)
            nb = self.r.randint(1, budget - 2)
            body = self.block(inner, nb, depth + 1, callable_)
            body.append(A.Assign(i, _b("+", _v(i), _lit(1))))
            loop = A.While(_b("<", _v(i), _lit(n)), inv, A.seq(*body))
            sc.types[i] = "int"
            # after the loop only the invariant's permissions are certain
            if not inv.imprecise:
                sc.owned = {x: set(sc.owned[x]) for x in keep}
                sc.folded = set()
            return A.seq(A.Assign(i, _lit(0)), loop), 2 + nb
        raise AssertionError(k)

    def target(self, sc: _Scope, ty: str) -> str:
        olds = [x for x in sc.of(ty, assignable=True) if x not in self.counters]
        if olds and self.coin(0.3):
            x = self.r.choice(olds)
        else:
            x = self.fresh({"int": "t", "bool": "b"}.get(ty, "n"))
        sc.types[x] = ty
        sc.forget(x)
        return x

    def assertion(self, sc: _Scope) -> A.Formula:
        roll = self.r.random()
        cands = sorted((x, f) for x, fs in sc.owned.items() for f in fs)
        if cands and roll < 0.4:
            x, f = self.r.choice(cands)
            return A.FAcc(_v(x), f)
        if sc.folded and roll < 0.6:
            p, x = self.r.choice(sorted(sc.folded))
            return A.FPred(p, (_v(x),))
        if sc.owned and roll < 0.75:
            return A.FExpr(_b("!=", _v(self.r.choice(sorted(sc.owned))), A.NULL))
        return A.FExpr(self.bool_expr(sc))


def reparse(p: A.Program) -> Optional[A.Program]:
    """Print and parse back (fresh positions); None if the result is ill-formed."""
    q = parse_program(print_program(p))
    return q if not check_well_formed(q) else None


def generate(rng: random.Random, bounds: GenBounds, tries: int = 50) -> tuple:
    """A well-formed program and the number of rejected samples before it."""
    for k in range(tries):
        q = reparse(Generator(rng, bounds).program())
        if q is not None:
            return q, k
    raise RuntimeError("no well-formed program within the sampling budget")
