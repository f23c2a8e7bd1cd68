"""Source-level forms of symbolic checks.

Symbolic values are replaced by program variables where the site's store
binds them, then by field paths through heap chunks whose receivers are
already anchored. Anything left over becomes a ghost: a temporary holding
the concrete value the symbolic value stood for when it was introduced.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..frontend import ast as A
from ..frontend.printer import print_expr
from ..symbolic import terms as T
from ..symbolic.heap import FieldChunk, FieldPerm
from .checks import Bottom, CheckPerm, CheckSep, CheckValue


@dataclass(frozen=True)
class Ghost:
    """Recorded value of a symbolic value (by id)."""

    ident: int
    sort: str

    def __str__(self) -> str:
        return f"ghost{self.ident}"


@dataclass(frozen=True)
class CValue:
    expr: object

    def __str__(self) -> str:
        return show_expr(self.expr)


@dataclass(frozen=True)
class CAcc:
    recv: object
    field: str

    def __str__(self) -> str:
        return f"acc({show_expr(self.recv)}.{self.field})"


@dataclass(frozen=True)
class CPred:
    name: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.name}({', '.join(show_expr(a) for a in self.args)})"


@dataclass(frozen=True)
class CSep:
    left: tuple  # of CAcc | CPred
    right: tuple

    def __str__(self) -> str:
        a = ", ".join(_item_str(i) for i in self.left)
        b = ", ".join(_item_str(i) for i in self.right)
        return f"sep({{{a}}}, {{{b}}})"


@dataclass(frozen=True)
class CBottom:
    def __str__(self) -> str:
        return "false"


def _item_str(i) -> str:
    if isinstance(i, CAcc):
        return f"{show_expr(i.recv)}.{i.field}"
    return str(i)


def show_expr(e) -> str:
    if isinstance(e, Ghost):
        return str(e)
    if isinstance(e, A.FieldRead):
        return f"{_show_atom(e.recv)}.{e.field}"
    if isinstance(e, A.BinOp):
        return f"{_show_atom(e.left)} {e.op} {_show_atom(e.right)}"
    if isinstance(e, A.Not):
        return f"!{_show_atom(e.operand)}"
    return print_expr(e)


def _show_atom(e) -> str:
    s = show_expr(e)
    return f"({s})" if isinstance(e, (A.BinOp,)) else s


class Untranslatable(Exception):
    pass


class Anchors:
    """Term -> source expression map for one guard site."""

    def __init__(self, states, intros=(), known=None, prefer=()):
        self.map: dict = {}
        self.known = known  # sym -> recipe, for ghost capture; None accepts any sym
        for st in states:
            names = [x for x in prefer if x in st.store]
            names += [x for x in st.store if x not in names]
            for x in names:
                t = st.store[x]
                if t.kind == "sym" and t not in self.map:
                    self.map[t] = A.Var(x)
        chunks = []
        for st in states:
            chunks += [(c.recv, c.field, c.val) for c in st.pheap + st.oheap
                       if isinstance(c, FieldChunk)]
        chunks += [(r[1], r[2], t) for t, r in intros if r[0] == "heap"]
        changed = True
        while changed:
            changed = False
            for recv, f, val in chunks:
                if val.kind != "sym" or val in self.map:
                    continue
                base = self._anchored(recv)
                if base is not None:
                    self.map[val] = A.FieldRead(base, f)
                    changed = True

    def _anchored(self, t):
        if t.kind == "sym":
            return self.map.get(t)
        if t.kind == "lit":
            return None  # null receivers never anchor anything
        return None

    def expr(self, t):
        k = t.kind
        if k == "lit":
            v = t.args[0]
            if t.sort == "ref":
                return A.Lit(None, "null")
            return A.Lit(v, t.sort)
        if k == "sym":
            e = self.map.get(t)
            if e is not None:
                return e
            if self.known is not None and t not in self.known:
                raise Untranslatable(f"no anchor for {T.show(t)}")
            return Ghost(t.args[0], t.sort)
        if k == "not":
            return A.Not(self.expr(t.args[0]))
        if k == "and":
            return A.BinOp("&&", self.expr(t.args[0]), self.expr(t.args[1]))
        if k == "or":
            return A.BinOp("||", self.expr(t.args[0]), self.expr(t.args[1]))
        o, a, b = t.args
        return A.BinOp(o, self.expr(a), self.expr(b))

    def perm(self, p):
        if isinstance(p, FieldPerm):
            return CAcc(self.expr(p.recv), p.field)
        return CPred(p.pred, tuple(self.expr(a) for a in p.args))

    def check(self, r):
        if isinstance(r, CheckValue):
            if r.term is T.TRUE:
                return None
            return CValue(self.expr(r.term))
        if isinstance(r, CheckPerm):
            return self.perm(r.perm)
        if isinstance(r, CheckSep):
            return CSep(tuple(self.perm(p) for p in r.left), tuple(self.perm(p) for p in r.right))
        if isinstance(r, Bottom):
            return CBottom()
        raise TypeError(r)


def translate_entry(vs, entry, known=None):
    """Translated checks and exclusion items for a guard entry, deduplicated.

    Returns (checks, exclusion, diagnostics)."""
    anchors = Anchors([vs.sigma, entry.state], entry.intros, known, site_vars(vs))
    checks, seen, diags = [], set(), []
    for r in entry.checks:
        try:
            c = anchors.check(r)
        except Untranslatable as ex:
            diags.append(str(ex))
            continue
        if c is not None and str(c) not in seen:
            seen.add(str(c))
            checks.append(c)
    excl = []
    for p in entry.theta:
        try:
            excl.append(anchors.perm(p))
        except Untranslatable as ex:
            diags.append(str(ex))
    return checks, excl, diags


def site_vars(vs) -> list:
    """Variables the site mentions, preferred as anchors (sorted for determinism)."""
    if isinstance(vs.stmt, A.Skip):
        return sorted(A.formula_vars(vs.post))
    h = A.split_head(vs.stmt)[0]
    out: set = set()
    if isinstance(h, (A.Assign, A.AssignField)):
        out = A.expr_vars(h.value) | {h.target}
    elif isinstance(h, (A.Call, A.Fold, A.Unfold)):
        for a in h.args:
            out |= A.expr_vars(a)
    elif isinstance(h, A.Assert):
        out = A.formula_vars(h.formula)
    elif isinstance(h, A.If):
        out = A.expr_vars(h.cond)
    elif isinstance(h, A.While):
        out = A.expr_vars(h.cond) | A.formula_vars(h.invariant)
    return sorted(out)


def ghosts_in(c) -> set:
    """Ghost ids a translated check reads."""
    out: set = set()

    def walk(e):
        if isinstance(e, Ghost):
            out.add(e.ident)
        elif isinstance(e, A.FieldRead):
            walk(e.recv)
        elif isinstance(e, A.BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, A.Not):
            walk(e.operand)

    if isinstance(c, CValue):
        walk(c.expr)
    elif isinstance(c, CAcc):
        walk(c.recv)
    elif isinstance(c, CPred):
        for a in c.args:
            walk(a)
    elif isinstance(c, CSep):
        for i in c.left + c.right:
            out |= ghosts_in(i)
    return out
