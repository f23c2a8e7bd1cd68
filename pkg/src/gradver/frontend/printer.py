"""Pretty printer whose output parses back to the same AST."""
from __future__ import annotations

from . import ast as A

INDENT = "  "


def print_expr(e: A.Expr, top: bool = True) -> str:
    if isinstance(e, A.Lit):
        return _lit(e)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.FieldRead):
        r = e.recv
        inner = print_expr(r, top=False) if isinstance(r, (A.Var, A.FieldRead)) else f"({print_expr(r)})"
        return f"{inner}.{e.field}"
    if isinstance(e, A.Not):
        return "!" + print_expr(e.operand, top=False)
    if isinstance(e, A.BinOp):
        s = f"{print_expr(e.left, top=False)} {e.op} {print_expr(e.right, top=False)}"
        # multiplication is always bracketed so it never reads as a separating conjunction
        return s if top and e.op != "*" else f"({s})"
    raise TypeError(e)


def _lit(e: A.Lit) -> str:
    if e.type == "bool":
        return "true" if e.value else "false"
    if e.type == "null":
        return "NULL"
    if e.type == "char":
        esc = {"\n": "\\n", "\t": "\\t", "\0": "\\0", "'": "\\'", "\\": "\\\\"}
        return "'" + esc.get(e.value, e.value) + "'"
    return str(e.value)


def print_formula(phi: A.Formula) -> str:
    if isinstance(phi, A.FExpr):
        return print_expr(phi.expr)
    if isinstance(phi, A.FAcc):
        return f"acc({print_expr(A.FieldRead(phi.recv, phi.field))})"
    if isinstance(phi, A.FPred):
        return f"{phi.name}({', '.join(print_expr(a) for a in phi.args)})"
    if isinstance(phi, A.FConj):
        right = print_formula(phi.right)
        if isinstance(phi.right, A.FConj):
            right = f"({right})"
        return f"{print_formula(phi.left)} * {right}"
    if isinstance(phi, A.FCond):
        return (f"(if {print_expr(phi.cond)} then {print_formula(phi.then)} "
                f"else {print_formula(phi.else_)})")
    raise TypeError(phi)


def print_gformula(g: A.GFormula) -> str:
    body = print_formula(g.body)
    return f"? * {body}" if g.imprecise else body


def _spine(s: A.Stmt) -> list:
    items = []
    while isinstance(s, A.Seq):
        items.append(s.first)
        s = s.second
    items.append(s)
    return items


def print_block(s: A.Stmt, depth: int) -> str:
    pad = INDENT * depth
    if isinstance(s, A.Skip):
        return "{\n" + pad + "}"
    lines = [print_stmt(item, depth + 1) for item in _spine(s)]
    return "{\n" + "\n".join(lines) + "\n" + pad + "}"


def print_stmt(s: A.Stmt, depth: int = 0) -> str:
    pad = INDENT * depth
    if isinstance(s, A.Skip):
        return pad + "{}"
    if isinstance(s, A.Seq):
        return pad + print_block(s, depth)
    if isinstance(s, A.Assign):
        decl = f"{s.decl} " if s.decl else ""
        return f"{pad}{decl}{s.target} = {print_expr(s.value)};"
    if isinstance(s, A.AssignField):
        return f"{pad}{s.target}.{s.field} = {print_expr(s.value)};"
    if isinstance(s, A.Alloc):
        decl = f"{s.decl} " if s.decl else ""
        return f"{pad}{decl}{s.target} = alloc({s.struct});"
    if isinstance(s, A.Call):
        decl = f"{s.decl} " if s.decl else ""
        args = ", ".join(print_expr(a) for a in s.args)
        return f"{pad}{decl}{s.target} = {s.method}({args});"
    if isinstance(s, A.Assert):
        return f"{pad}assert {print_gformula(s.formula)};"
    if isinstance(s, (A.Fold, A.Unfold)):
        kw = "fold" if isinstance(s, A.Fold) else "unfold"
        return f"{pad}{kw} {s.pred}({', '.join(print_expr(a) for a in s.args)});"
    if isinstance(s, A.If):
        return (f"{pad}if ({print_expr(s.cond)}) {print_block(s.then, depth)}"
                f" else {print_block(s.else_, depth)}")
    if isinstance(s, A.While):
        return (f"{pad}while ({print_expr(s.cond)})\n{pad}{INDENT}invariant "
                f"{print_gformula(s.invariant)}\n{pad}{print_block(s.body, depth)}")
    raise TypeError(s)


def _params(ps) -> str:
    return ", ".join(f"{t} {n}" for t, n in ps)


def print_program(p: A.Program) -> str:
    out = []
    for s in p.structs:
        fields = " ".join(f"{t} {n};" for t, n in s.fields)
        out.append(f"struct {s.name} {{ {fields} }}")
    for pr in p.predicates:
        out.append(f"predicate {pr.name}({_params(pr.params)}) = {print_gformula(pr.body)};")
    for m in p.methods:
        out.append(f"{m.ret} {m.name}({_params(m.params)})\n"
                   f"  requires {print_gformula(m.pre)}\n"
                   f"  ensures {print_gformula(m.post)}\n"
                   f"{print_block(m.body, 0)}")
    out.append(f"int main()\n{print_block(p.entry, 0)}")
    return "\n\n".join(out) + "\n"
