"""Satisfiability and entailment for path conditions.

A small DPLL(T) loop. Boolean structure is explored by case splits over
atoms; the theory part combines union-find congruence closure with
difference-bound reasoning on `base + const` integer forms. The answer is
Unsat only when refuted, and Sat only when a model was built and the
formula evaluated to true under it. Everything else is Unknown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import terms as T
from .terms import Term

INF = float("inf")


class SatResult(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class Entailment(Enum):
    PROVED = "proved"
    UNKNOWN = "unknown"


# --- canonical boolean structure -----------------------------------------------


def _canon(t: Term, atoms: dict):
    """Translate a bool term into nested tuples over atom indices."""
    k = t.kind
    if k == "lit":
        return ("const", bool(t.args[0]))
    if k == "sym":
        return ("atom", _atom(t, atoms))
    if k == "not":
        return ("not", _canon(t.args[0], atoms))
    if k == "and":
        return ("and", _canon(t.args[0], atoms), _canon(t.args[1], atoms))
    if k == "or":
        return ("or", _canon(t.args[0], atoms), _canon(t.args[1], atoms))
    o, a, b = t.args
    if o in ("==", "!=") and a.sort == "bool":
        ca, cb = _canon(a, atoms), _canon(b, atoms)
        iff = ("or", ("and", ca, cb), ("and", ("not", ca), ("not", cb)))
        return iff if o == "==" else ("not", iff)
    if o == "!=":
        return ("not", _canon(T.eq(a, b), atoms))
    if o == ">":
        return ("atom", _atom(T.op("<", b, a), atoms))
    if o == ">=":
        return ("atom", _atom(T.op("<=", b, a), atoms))
    if o == "==":
        if T.sort_key(b) < T.sort_key(a):
            a, b = b, a
        if a is b:
            return ("const", True)
        if a.kind == "lit" and b.kind == "lit":
            return ("const", T._same(a.args[0], b.args[0]))
        return ("atom", _atom(T.eq(a, b), atoms))
    if o in ("<", "<="):
        if a.kind == "lit" and b.kind == "lit":
            return ("const", T.apply_op(o, a.args[0], b.args[0]))
        return ("atom", _atom(T.op(o, a, b), atoms))
    raise ValueError(f"not a boolean term: {T.show(t)}")


def _atom(t: Term, atoms: dict) -> int:
    i = atoms.get(t)
    if i is None:
        i = len(atoms)
        atoms[t] = i
    return i


def _eval3(n, assign: dict):
    """Three-valued evaluation; None means undetermined."""
    k = n[0]
    if k == "const":
        return n[1]
    if k == "atom":
        return assign.get(n[1])
    if k == "not":
        v = _eval3(n[1], assign)
        return None if v is None else not v
    a = _eval3(n[1], assign)
    if k == "and":
        if a is False:
            return False
        b = _eval3(n[2], assign)
        if b is False:
            return False
        return True if (a is True and b is True) else None
    if a is True:
        return True
    b = _eval3(n[2], assign)
    if b is True:
        return True
    return False if (a is False and b is False) else None


def _atoms_in(n, out: list) -> list:
    k = n[0]
    if k == "atom":
        if n[1] not in out:
            out.append(n[1])
    elif k == "not":
        _atoms_in(n[1], out)
    elif k in ("and", "or"):
        _atoms_in(n[1], out)
        _atoms_in(n[2], out)
    return out


# --- theory ----------------------------------------------------------------------


class _UF:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] is not root:
            root = self.parent[root]
        while self.parent[x] is not root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra is rb:
            return False
        # keep literals as representatives so clashes are easy to spot
        if rb.kind == "lit" and ra.kind != "lit":
            ra, rb = rb, ra
        elif ra.kind != "lit" and rb.kind != "lit" and T.sort_key(rb) < T.sort_key(ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


_ZERO = "ZERO"


def _linear(t: Term):
    """(base, const) with t == base + const; base None means a constant."""
    if t.kind == "lit":
        return None, t.args[0]
    if t.kind == "op" and t.args[0] in ("+", "-"):
        o, a, b = t.args
        if b.kind == "lit":
            base, c = _linear(a)
            return base, c + b.args[0] if o == "+" else c - b.args[0]
        if o == "+" and a.kind == "lit":
            base, c = _linear(b)
            return base, c + a.args[0]
    return t, 0


def _subterms(t: Term, out: dict) -> None:
    if t in out:
        return
    out[t] = None
    if t.kind == "op":
        _subterms(t.args[1], out)
        _subterms(t.args[2], out)


@dataclass
class _Lits:
    eqs: list = field(default_factory=list)  # (a, b)
    neqs: list = field(default_factory=list)  # (a, b)
    les: list = field(default_factory=list)  # (a, b, k): a - b <= k over int terms


def _split_lits(lits: list) -> _Lits:
    out = _Lits()
    for atom, pol in lits:
        if atom.kind == "sym":
            continue
        o, a, b = atom.args
        if o == "==":
            (out.eqs if pol else out.neqs).append((a, b))
        elif o == "<":
            if pol:
                out.les.append((a, b, -1))
            else:
                out.les.append((b, a, 0))
        elif o == "<=":
            if pol:
                out.les.append((a, b, 0))
            else:
                out.les.append((b, a, -1))
    return out


class _Theory:
    """One consistency check over a conjunction of theory literals."""

    def __init__(self, lits: _Lits, max_splits: int):
        self.lits = lits
        self.max_splits = max_splits

    def check(self):
        """('unsat', None) or ('maybe', model-or-None)."""
        return self._check(self.lits.les, self.max_splits)

    def _check(self, les: list, splits: int):
        lits = self.lits
        uf = _UF()
        terms: dict = {}
        for a, b in lits.eqs + lits.neqs:
            _subterms(a, terms)
            _subterms(b, terms)
        for a, b, _ in les:
            _subterms(a, terms)
            _subterms(b, terms)
        for t in terms:
            uf.add(t)
        for a, b in lits.eqs:
            uf.union(a, b)
        compounds = [t for t in terms if t.kind == "op"]
        int_terms = [t for t in terms if t.sort == "int"]
        bases = []
        for t in int_terms:
            b, _ = _linear(t)
            if b is not None and b not in bases:
                bases.append(b)
        while True:
            # congruence
            changed = True
            while changed:
                changed = False
                sig: dict = {}
                for t in compounds:
                    key = (t.args[0], uf.find(t.args[1]), uf.find(t.args[2]))
                    other = sig.get(key)
                    if other is None:
                        sig[key] = t
                    elif uf.union(t, other):
                        changed = True
            if self._literal_clash(uf, terms):
                return "unsat", None
            # difference bounds over classes of bases
            nodes = [_ZERO]
            index = {_ZERO: 0}
            for b in bases:
                r = uf.find(b)
                if r not in index:
                    index[r] = len(nodes)
                    nodes.append(r)
            n = len(nodes)
            D = [[INF] * n for _ in range(n)]
            for i in range(n):
                D[i][i] = 0
            for i in range(1, n):
                if nodes[i].kind == "lit":  # class already pinned to a constant
                    c = nodes[i].args[0]
                    D[0][i] = min(D[0][i], c)
                    D[i][0] = min(D[i][0], -c)

            def node_of(t):
                b, c = _linear(t)
                return (0 if b is None else index[uf.find(b)]), c

            def bound(x, y, k):  # x - y <= k
                if k < D[y][x]:
                    D[y][x] = k

            for a, b, k in les:
                (i, ca), (j, cb) = node_of(a), node_of(b)
                # (i + ca) - (j + cb) <= k
                bound(i, j, k - ca + cb)
            classes: dict = {}
            for t in int_terms:
                classes.setdefault(uf.find(t), []).append(t)
            for members in classes.values():
                i, ci = node_of(members[0])
                for m in members[1:]:
                    j, cj = node_of(m)
                    bound(i, j, cj - ci)
                    bound(j, i, ci - cj)
            for kk in range(n):
                Dk = D[kk]
                for i in range(n):
                    dik = D[i][kk]
                    if dik == INF:
                        continue
                    Di = D[i]
                    for j in range(n):
                        v = dik + Dk[j]
                        if v < Di[j]:
                            Di[j] = v
            for i in range(n):
                if D[i][i] < 0:
                    return "unsat", None
            # equalities implied by the bounds feed back into congruence
            new_eq = False
            for i in range(n):
                for j in range(i + 1, n):
                    if D[i][j] + D[j][i] == 0:
                        # value(j) - value(i) == D[i][j]
                        if i == 0:
                            if nodes[j].kind != "lit":
                                c = T.lit(D[0][j], "int")
                                if c not in terms:
                                    terms[c] = None
                                    int_terms.append(c)
                                new_eq |= uf.union(nodes[j], c)
                        elif D[i][j] == 0:
                            new_eq |= uf.union(nodes[i], nodes[j])
            if not new_eq:
                break
        # disequalities
        pending = []
        for a, b in lits.neqs:
            if uf.find(a) is uf.find(b):
                return "unsat", None
            if a.sort == "int":
                (i, ca), (j, cb) = node_of(a), node_of(b)
                # a == b iff vi - vj == cb - ca, and vi - vj lies in [-D[i][j], D[j][i]]
                if D[j][i] != INF and D[j][i] == -D[i][j] == cb - ca:
                    return "unsat", None
                pending.append((a, b))
        model = self._model(uf, terms, nodes, index, D, bases)
        view = _ModelView(dict(model))
        for a, b in pending:
            try:
                if T.evaluate(a, view) != T.evaluate(b, view):
                    continue
            except T.EvalError:
                return "maybe", None
            if splits <= 0:
                return "maybe", None
            left = self._check(les + [(a, b, -1)], splits - 1)
            if left[0] == "maybe" and left[1] is not None:
                return left
            right = self._check(les + [(b, a, -1)], splits - 1)
            if right[0] == "maybe" and right[1] is not None:
                return right
            if left[0] == "unsat" and right[0] == "unsat":
                return "unsat", None
            return "maybe", None
        return "maybe", model

    @staticmethod
    def _literal_clash(uf: _UF, terms: dict) -> bool:
        seen: dict = {}
        for t in terms:
            if t.kind == "lit":
                r = uf.find(t)
                if r in seen and not T._same(seen[r], t.args[0]):
                    return True
                seen[r] = t.args[0]
        return False

    @staticmethod
    def _model(uf, terms, nodes, index, D, bases) -> dict:
        n = len(nodes)
        # shortest distances from a virtual source linked to all nodes with weight 0
        dist = [min(0, min(D[j][i] for j in range(n))) for i in range(n)]
        shift = dist[0]
        model: dict = {}
        for b in bases:
            if b.kind == "sym":
                model[b] = dist[index[uf.find(b)]] - shift
        refs: dict = {}
        chars: dict = {}
        for t in terms:
            if t.kind != "sym" or t.sort == "int" or t.sort == "bool":
                continue
            r = uf.find(t)
            if r.kind == "lit":
                model[t] = r.args[0]
            elif t.sort == "ref":
                model[t] = refs.setdefault(r, T.ModelRef(len(refs) + 1))
            else:
                model[t] = chars.setdefault(r, chr(0x100 + len(chars)))
        return model


# --- driver ----------------------------------------------------------------------


class Solver:
    """Memoizing front end. One instance per verification run."""

    def __init__(self, max_atoms: int = 12, max_splits: int = 6):
        self.max_atoms = max_atoms
        self.max_splits = max_splits
        self._cache: dict = {}
        self.calls = 0
        self.unknowns = 0

    def sat(self, conjuncts, focus=None) -> SatResult:
        res, _ = self.sat_model(conjuncts, focus)
        return res

    def sat_model(self, conjuncts, focus=None):
        cs = _normalize(conjuncts)
        if focus is not None:
            cs = _cone(cs, _normalize(focus))
        key = tuple(cs)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.calls += 1
        out = self._solve(cs)
        if out[0] is SatResult.UNKNOWN:
            self.unknowns += 1
        self._cache[key] = out
        return out

    def implies(self, g, t: Term) -> Entailment:
        if t is T.TRUE:
            return Entailment.PROVED
        cs = _normalize(g)
        if T.FALSE in cs:
            return Entailment.PROVED
        if all(x in cs for x in T.flatten(t)):
            return Entailment.PROVED
        neg = T.not_(t)
        r = self.sat(cs + [neg], focus=[neg])
        if r is SatResult.UNSAT:
            return Entailment.PROVED
        # the cone may have dropped a contradictory part of g
        if len(_cone(cs, [neg])) < len(cs) and self.sat(cs) is SatResult.UNSAT:
            return Entailment.PROVED
        return Entailment.UNKNOWN

    def _solve(self, cs: list):
        atoms: dict = {}
        roots = [_canon(c, atoms) for c in cs]
        assign: dict = {}
        rest = []
        for r in roots:
            lit = _as_literal(r)
            if lit is None:
                if r == ("const", True):
                    continue
                if r == ("const", False):
                    return SatResult.UNSAT, None
                rest.append(r)
                continue
            i, pol = lit
            if assign.get(i, pol) != pol:
                return SatResult.UNSAT, None
            assign[i] = pol
        atom_list = list(atoms)
        free = []
        for r in rest:
            for i in _atoms_in(r, []):
                if i not in assign and i not in free:
                    free.append(i)
        if len(free) > self.max_atoms:
            return SatResult.UNKNOWN, None
        root = ("const", True)
        for r in rest:
            root = ("and", root, r)
        return self._search(root, assign, free, 0, atom_list, cs)

    def _search(self, root, assign: dict, free: list, depth: int, atom_list, cs):
        v = _eval3(root, assign)
        if v is False:
            return SatResult.UNSAT, None
        lits = [(atom_list[i], pol) for i, pol in assign.items()]
        status, model = _Theory(_split_lits(lits), self.max_splits).check()
        if status == "unsat":
            return SatResult.UNSAT, None
        if v is True:
            if model is not None:
                for i, pol in assign.items():
                    a = atom_list[i]
                    if a.kind == "sym":
                        model[a] = pol
                full = _ModelView(model)
                try:
                    if all(T.evaluate(c, full) for c in cs):
                        return SatResult.SAT, full.as_dict()
                except T.EvalError:
                    pass
            return SatResult.UNKNOWN, None
        while depth < len(free) and free[depth] in assign:
            depth += 1
        if depth == len(free):
            return SatResult.UNKNOWN, None
        i = free[depth]
        unknown = False
        for pol in (True, False):
            assign[i] = pol
            res, m = self._search(root, assign, free, depth + 1, atom_list, cs)
            del assign[i]
            if res is SatResult.SAT:
                return res, m
            if res is SatResult.UNKNOWN:
                unknown = True
        return (SatResult.UNKNOWN if unknown else SatResult.UNSAT), None


class _ModelView:
    """Model lookup where unmentioned symbols take a default of their sort."""

    def __init__(self, model: dict):
        self.model = model

    def get(self, t, default=None):
        if t in self.model:
            return self.model[t]
        v = {"int": 0, "bool": False, "char": "\0", "ref": None}[t.sort]
        self.model[t] = v
        return v

    def as_dict(self) -> dict:
        return dict(self.model)


def _as_literal(n) -> Optional[tuple]:
    if n[0] == "atom":
        return n[1], True
    if n[0] == "not" and n[1][0] == "atom":
        return n[1][1], False
    return None


def _normalize(conjuncts) -> list:
    if isinstance(conjuncts, Term):
        conjuncts = [conjuncts]
    out: list = []
    seen: set = set()
    for c in conjuncts:
        for x in T.flatten(c):
            if x is T.TRUE or x in seen:
                continue
            seen.add(x)
            out.append(x)
    return out


def _cone(cs: list, focus: list) -> list:
    """Conjuncts connected to the focus terms through shared symbols.

    Dropping unconnected conjuncts is sound for Unsat answers (a subset is
    refuted) and only loses completeness when the dropped part is itself
    contradictory.
    """
    reach: set = set()
    for f in focus:
        reach |= T.syms_of(f)
    chosen = [False] * len(cs)
    for i, c in enumerate(cs):
        if not T.syms_of(c):
            chosen[i] = True  # ground facts are cheap and may be false
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(cs):
            if not chosen[i] and T.syms_of(c) & reach:
                chosen[i] = True
                reach |= T.syms_of(c)
                changed = True
    return [c for i, c in enumerate(cs) if chosen[i]]


_default = Solver()


def sat(g, focus=None) -> SatResult:
    return _default.sat(g, focus)


def implies(g, t: Term) -> Entailment:
    return _default.implies(g, t)
