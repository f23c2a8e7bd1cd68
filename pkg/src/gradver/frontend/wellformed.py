"""Well-formedness: typing, initialization and specification scoping.

Typing follows a plain simply-typed discipline. Locals are not declared in
the listings, so a local takes the type of its first assignment in textual
order (or its optional declaration).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .selfframe import NotFramed, check_self_framing
from .printer import print_expr


@dataclass(frozen=True)
class Diagnostic:
    clause: str
    pos: tuple
    message: str

    def __str__(self) -> str:
        return f"{self.pos[0]}:{self.pos[1]}: [{self.clause}] {self.message}"

    def to_json(self) -> dict:
        return {"line": self.pos[0], "col": self.pos[1], "clause": self.clause,
                "message": self.message}


class _Checker:
    def __init__(self, prog: A.Program):
        self.p = prog
        self.diags: list = []
        self.reported: set = set()  # names already flagged by a scope clause

    def err(self, clause: str, pos, msg: str) -> None:
        self.diags.append(Diagnostic(clause, pos or A.NOPOS, msg))

    # -- types
    def is_struct(self, t: Optional[str]) -> bool:
        return t is not None and self.p.struct(t) is not None

    def compatible(self, expected: Optional[str], actual: Optional[str]) -> bool:
        if expected is None or actual is None:
            return True  # already reported
        if expected == actual:
            return True
        if actual == "null" and self.is_struct(expected):
            return True
        if expected == "null" and self.is_struct(actual):
            return True
        return False

    def type_ok(self, t: str, pos) -> None:
        if t not in A.PRIMITIVE_TYPES and not self.is_struct(t):
            self.err("typing", pos, f"unknown type {t!r}")

    def expr_type(self, e: A.Expr, env: dict) -> Optional[str]:
        if isinstance(e, A.Lit):
            return e.type
        if isinstance(e, A.Var):
            if e.name not in env:
                if e.name in self.reported:
                    return None
                self.err("resolve", e.pos, f"unknown variable {e.name!r}")
                return None
            return env[e.name]
        if isinstance(e, A.FieldRead):
            rt = self.expr_type(e.recv, env)
            if rt is None:
                return None
            s = self.p.struct(rt)
            if s is None:
                self.err("typing", e.pos, f"field access .{e.field} on non-struct type {rt}")
                return None
            ft = s.field_type(e.field)
            if ft is None:
                self.err("resolve", e.pos, f"struct {rt} has no field {e.field!r}")
            return ft
        if isinstance(e, A.Not):
            t = self.expr_type(e.operand, env)
            if t is not None and t != "bool":
                self.err("typing", e.pos, "operand of ! must be bool")
            return "bool"
        if isinstance(e, A.BinOp):
            lt = self.expr_type(e.left, env)
            rt = self.expr_type(e.right, env)
            if e.op in A.ARITH_OPS + A.CMP_OPS:
                for t in (lt, rt):
                    if t is not None and t != "int":
                        self.err("typing", e.pos, f"operands of {e.op} must be int")
                return "int" if e.op in A.ARITH_OPS else "bool"
            if e.op in A.LOGIC_OPS:
                for t in (lt, rt):
                    if t is not None and t != "bool":
                        self.err("typing", e.pos, f"operands of {e.op} must be bool")
                return "bool"
            if not (self.compatible(lt, rt) or self.compatible(rt, lt)):
                self.err("typing", e.pos, f"cannot compare {lt} with {rt}")
            return "bool"
        raise TypeError(e)

    def bool_expr(self, e: A.Expr, env: dict, what: str) -> None:
        t = self.expr_type(e, env)
        if t is not None and t != "bool":
            self.err("typing", e.pos, f"{what} must be bool, found {t}")

    def formula(self, phi: A.Formula, env: dict) -> None:
        if isinstance(phi, A.FExpr):
            self.bool_expr(phi.expr, env, "formula expression")
        elif isinstance(phi, A.FAcc):
            self.expr_type(A.FieldRead(phi.recv, phi.field, pos=phi.pos), env)
        elif isinstance(phi, A.FPred):
            self.pred_args(phi.name, phi.args, env, phi.pos)
        elif isinstance(phi, A.FConj):
            self.formula(phi.left, env)
            self.formula(phi.right, env)
        elif isinstance(phi, A.FCond):
            self.bool_expr(phi.cond, env, "conditional guard")
            self.formula(phi.then, env)
            self.formula(phi.else_, env)

    def pred_args(self, name: str, args, env: dict, pos) -> None:
        pd = self.p.predicate(name)
        if pd is None:
            self.err("resolve", pos, f"unknown predicate {name!r}")
            return
        if len(args) != len(pd.params):
            self.err("typing", pos, f"predicate {name} expects {len(pd.params)} arguments")
            return
        for (pt, _), a in zip(pd.params, args):
            at = self.expr_type(a, env)
            if not self.compatible(pt, at):
                self.err("typing", a.pos, f"argument of type {at} where {pt} expected")

    # -- whole program
    def run(self) -> list:
        p = self.p
        self.unique([s.name for s in p.structs], "struct", [s.pos for s in p.structs])
        self.unique([x.name for x in p.predicates], "predicate", [x.pos for x in p.predicates])
        self.unique([m.name for m in p.methods], "method", [m.pos for m in p.methods])
        field_types: dict = {}
        for s in p.structs:
            self.unique([n for _, n in s.fields], f"field of {s.name}", [s.pos] * len(s.fields))
            for t, n in s.fields:
                self.type_ok(t, s.pos)
                if n in field_types and field_types[n] != t:
                    self.err("typing", s.pos, f"field {n!r} declared with types {field_types[n]} and {t}")
                field_types.setdefault(n, t)
        for pd in p.predicates:
            self.predicate(pd)
        for m in p.methods:
            self.method(m)
        # the entry statement behaves as an int method with no parameters
        main = A.MethodDef("main", (), "int", A.GTRUE, A.GTRUE, p.entry,
                           pos=p.entry_pos, end=p.entry_end)
        self.method(main)
        return self.diags

    def unique(self, names, what: str, positions) -> None:
        seen = set()
        for n, pos in zip(names, positions):
            if n in seen:
                self.err("names", pos, f"duplicate {what} name {n!r}")
            seen.add(n)

    def predicate(self, pd: A.PredicateDef) -> None:
        self.unique([n for _, n in pd.params], "parameter", [pd.pos] * len(pd.params))
        env = {}
        for t, n in pd.params:
            self.type_ok(t, pd.pos)
            env[n] = t
        extra = A.formula_vars(pd.body) - set(env)
        for v in sorted(extra):
            self.err("predicate-scope", pd.pos, f"predicate {pd.name} body references {v!r}")
        self.reported = extra
        self.formula(pd.body.body, env)
        self.reported = set()
        r = check_self_framing(pd.body)
        if isinstance(r, NotFramed):
            self.err("specification", pd.pos,
                     f"predicate {pd.name} body is not self-framed at {print_expr(r.witness)}")

    def method(self, m: A.MethodDef) -> None:
        self.unique([n for _, n in m.params], "parameter", [m.pos] * len(m.params))
        penv = {}
        for t, n in m.params:
            self.type_ok(t, m.pos)
            penv[n] = t
        self.type_ok(m.ret, m.pos)
        params = set(penv)
        # scoping of the contract
        for v in sorted(A.formula_vars(m.pre) - params):
            self.err("pre-scope", m.pre.pos or m.pos,
                     f"pre-condition of {m.name} references non-parameter {v!r}")
        for v in sorted(A.formula_vars(m.post) - params - {A.RESERVED_RESULT}):
            self.err("post-scope", m.post.pos or m.pos,
                     f"post-condition of {m.name} references {v!r}")
        if m.pre.imprecise and not m.post.imprecise:
            self.err("imprecise-post", m.post.pos or m.pos,
                     f"{m.name} has an imprecise pre-condition but a precise post-condition")
        self.reported = A.formula_vars(m.pre) | A.formula_vars(m.post)
        self.formula(m.pre.body, penv)
        self.formula(m.post.body, {**penv, A.RESERVED_RESULT: m.ret})
        self.reported = set()
        for what, g in (("pre-condition", m.pre), ("post-condition", m.post)):
            r = check_self_framing(g)
            if isinstance(r, NotFramed):
                self.err("specification", g.pos or m.pos,
                         f"{what} of {m.name} is not self-framed at {print_expr(r.witness)}")
        # local types by first assignment
        env = dict(penv)
        env[A.RESERVED_RESULT] = m.ret
        self.infer_locals(m.body, env, params)
        defined = self.stmt(m.body, env, set(params), params)
        if A.RESERVED_RESULT not in defined:
            self.err("result-assigned", m.end or m.pos,
                     f"{m.name} does not assign result on every path")

    def infer_locals(self, s: A.Stmt, env: dict, params: set) -> None:
        def visit(t: A.Stmt) -> None:
            if isinstance(t, (A.Assign, A.Alloc, A.Call)):
                x = t.target
                if isinstance(t, A.Alloc):
                    ty = t.struct
                elif isinstance(t, A.Call):
                    callee = self.p.method(t.method)
                    ty = callee.ret if callee else None
                else:
                    ty = self._quiet_type(t.value, env)
                if t.decl is not None:
                    if x in env and env[x] != t.decl:
                        self.err("typing", t.pos, f"{x!r} redeclared with type {t.decl}")
                    self.type_ok(t.decl, t.pos)
                    env.setdefault(x, t.decl)
                elif x not in env:
                    if ty == "null":
                        self.err("typing", t.pos, f"cannot infer the type of {x!r} from NULL; declare it")
                    elif ty is not None:
                        env[x] = ty
            elif isinstance(t, A.Seq):
                visit(t.first)
                visit(t.second)
            elif isinstance(t, A.If):
                visit(t.then)
                visit(t.else_)
            elif isinstance(t, A.While):
                visit(t.body)

        visit(s)

    def _quiet_type(self, e: A.Expr, env: dict) -> Optional[str]:
        saved = self.diags
        self.diags = []
        try:
            return self.expr_type(e, env)
        finally:
            self.diags = saved

    def uses(self, e, defined: set, pos) -> None:
        names = A.formula_vars(e) if not isinstance(e, (A.Lit, A.Var, A.FieldRead, A.BinOp, A.Not)) else A.expr_vars(e)
        for v in sorted(names - defined):
            self.reported.add(v)
            self.err("initialized", pos, f"{v!r} may be used before it is assigned")

    def assign_to(self, x: str, ty: Optional[str], env: dict, params: set, pos, defined: set) -> set:
        if x in params:
            self.err("param-assign", pos, f"assignment to parameter {x!r}")
        if x not in env:
            return defined | {x}
        if not self.compatible(env[x], ty):
            self.err("typing", pos, f"{x!r} has type {env[x]} but is assigned {ty}")
        return defined | {x}

    def stmt(self, s: A.Stmt, env: dict, defined: set, params: set) -> set:
        if isinstance(s, A.Skip):
            return defined
        if isinstance(s, A.Seq):
            return self.stmt(s.second, env, self.stmt(s.first, env, defined, params), params)
        if isinstance(s, A.Assign):
            self.uses(s.value, defined, s.pos)
            ty = self.expr_type(s.value, env)
            return self.assign_to(s.target, ty, env, params, s.pos, defined)
        if isinstance(s, A.AssignField):
            self.uses(A.Var(s.target), defined, s.pos)
            self.uses(s.value, defined, s.pos)
            ft = self.expr_type(A.FieldRead(A.Var(s.target, pos=s.pos), s.field, pos=s.pos), env)
            vt = self.expr_type(s.value, env)
            if not self.compatible(ft, vt):
                self.err("typing", s.pos, f"field {s.field} has type {ft} but is assigned {vt}")
            return defined
        if isinstance(s, A.Alloc):
            if self.p.struct(s.struct) is None:
                self.err("resolve", s.pos, f"unknown struct {s.struct!r}")
            return self.assign_to(s.target, s.struct, env, params, s.pos, defined)
        if isinstance(s, A.Call):
            for a in s.args:
                self.uses(a, defined, s.pos)
            callee = self.p.method(s.method)
            if callee is None:
                self.err("resolve", s.pos, f"unknown method {s.method!r}")
                return self.assign_to(s.target, None, env, params, s.pos, defined)
            if len(callee.params) != len(s.args):
                self.err("typing", s.pos, f"{s.method} expects {len(callee.params)} arguments")
            else:
                for (pt, _), a in zip(callee.params, s.args):
                    at = self.expr_type(a, env)
                    if not self.compatible(pt, at):
                        self.err("typing", a.pos or s.pos, f"argument of type {at} where {pt} expected")
            return self.assign_to(s.target, callee.ret, env, params, s.pos, defined)
        if isinstance(s, A.Assert):
            self.uses(s.formula, defined, s.pos)
            self.formula(s.formula.body, env)
            return defined
        if isinstance(s, (A.Fold, A.Unfold)):
            for a in s.args:
                self.uses(a, defined, s.pos)
            self.pred_args(s.pred, s.args, env, s.pos)
            return defined
        if isinstance(s, A.If):
            self.uses(s.cond, defined, s.pos)
            self.bool_expr(s.cond, env, "if condition")
            a = self.stmt(s.then, env, defined, params)
            b = self.stmt(s.else_, env, defined, params)
            return a & b
        if isinstance(s, A.While):
            self.uses(s.cond, defined, s.pos)
            self.uses(s.invariant, defined, s.pos)
            self.bool_expr(s.cond, env, "loop condition")
            self.formula(s.invariant.body, env)
            r = check_self_framing(s.invariant)
            if isinstance(r, NotFramed):
                self.err("specification", s.pos,
                         f"loop invariant is not self-framed at {print_expr(r.witness)}")
            self.stmt(s.body, env, defined, params)
            return defined
        raise TypeError(s)


def check_well_formed(p: A.Program) -> list:
    """All well-formedness diagnostics for p; empty when the program is well-formed."""
    return _Checker(p).run()
