"""Random small concrete states and formulas, plus a literal assertion oracle.

The oracle follows the assertion rules directly: a separating conjunction
searches every pair of disjoint sub-permission-sets, and framing walks the
expression with short-circuiting. It never looks at footprints, so it is
independent of the interpreter's least-footprint shortcut.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import replace
from functools import lru_cache

from gradver.frontend import ast as A
from gradver.frontend.parser import parse_gformula, parse_program
from gradver.frontend.selfframe import Framed, check_self_framing
from gradver.harness.gen import GenBounds, generate
from gradver.runtime import FULL, Machine, RunOptions, Stuck, initial_state, run
from gradver.runtime.semantics import Semantics
from gradver.runtime.values import Ref

DEFS = """
struct Node { int val; Node next }
predicate list(Node n) =
  acc(n.val) * acc(n.next) * (if n.next == NULL then true else list(n.next))
predicate cell(Node n) = acc(n.val)
predicate loose(Node n) = ? * acc(n.val)
int main() { result = 0; }
"""
PROGRAM = parse_program(DEFS)
PREDS = {p.name: p for p in PROGRAM.predicates}
SEM = Semantics(PROGRAM)
VARS = ("x", "y", "z")
FIELDS = ("val", "next")


class OStuck(Exception):
    pass


# --- random states ------------------------------------------------------------------


def random_state(rng: random.Random, refs: int = 3):
    """(H, alpha, rho) with an acyclic next structure."""
    locs = [Ref(i) for i in range(1, refs + 1)]
    H = {}
    for i, r in enumerate(locs):
        H[(r, "val")] = rng.choice((0, 1))
        later = locs[i + 1:]
        H[(r, "next")] = rng.choice([None] + later) if later and rng.random() < 0.7 else None
    all_perms = sorted(H)
    if rng.random() < 0.5:
        alpha = frozenset(p for p in all_perms if rng.random() < 0.85)
    else:
        alpha = frozenset(p for p in all_perms if rng.random() < 0.5)
    rho = {x: rng.choice(locs + [None]) if rng.random() < 0.9 else None for x in VARS}
    rho["k"] = rng.choice((0, 1))
    return H, alpha, rho


def superset(rng: random.Random, H: dict, alpha: frozenset) -> frozenset:
    return alpha | frozenset(p for p in H if rng.random() < 0.5)


def _recv(rng):
    x = rng.choice(VARS)
    return f"{x}.next" if rng.random() < 0.15 else x


def _atom(rng) -> str:
    r = _recv(rng)
    return rng.choice([
        f"acc({r}.val)", f"acc({r}.next)", f"{r}.val == k", f"{r}.val == 1 || {r} == NULL",
        f"{r}.next == NULL", f"{rng.choice(VARS)} == {rng.choice(VARS)}", f"{r} != NULL",
        f"list({r})", f"cell({r})", f"loose({r})", "true", "k == 0"])


def _formula(rng, depth: int) -> str:
    if depth == 0 or rng.random() < 0.35:
        return _atom(rng)
    k = rng.random()
    if k < 0.65:
        return f"{_formula(rng, depth - 1)} * {_formula(rng, depth - 1)}"
    cond = rng.choice([f"{rng.choice(VARS)} == NULL", "k == 1", f"{_recv(rng)}.val == 0"])
    return f"(if {cond} then {_formula(rng, depth - 1)} else {_formula(rng, depth - 1)})"


def random_spec(rng: random.Random, depth: int = 3) -> A.GFormula:
    """A specification: self-framed when precise, otherwise made imprecise."""
    phi = parse_gformula(_formula(rng, depth))
    if rng.random() < 0.25 or check_self_framing(phi) != Framed():
        phi = replace(phi, imprecise=True)
    return phi


# --- oracle ----------------------------------------------------------------------------


def o_eval(H, rho, e, reads=None):
    if isinstance(e, A.Lit):
        return None if e.type == "null" else e.value
    if isinstance(e, A.Var):
        return rho[e.name]
    if isinstance(e, A.FieldRead):
        r = o_eval(H, rho, e.recv, reads)
        if not isinstance(r, Ref):
            raise OStuck("null dereference")
        if reads is not None:
            reads.append((r, e.field))
        return H[(r, e.field)]
    if isinstance(e, A.Not):
        return not o_eval(H, rho, e.operand, reads)
    a = o_eval(H, rho, e.left, reads)
    if e.op == "||":
        return True if a is True else o_eval(H, rho, e.right, reads)
    if e.op == "&&":
        return False if a is False else o_eval(H, rho, e.right, reads)
    b = o_eval(H, rho, e.right, reads)
    if e.op == "==":
        return a == b and isinstance(a, bool) == isinstance(b, bool)
    if e.op == "!=":
        return not (a == b and isinstance(a, bool) == isinstance(b, bool))
    raise ValueError(e.op)


def o_frm(H, alpha, rho, e) -> bool:
    """Frame rules: every location read under short-circuit evaluation is owned."""
    reads: list = []
    try:
        o_eval(H, rho, e, reads)
    except OStuck:
        return False
    return all(p in alpha for p in reads)


def o_efrm(H, alpha, rho, phi) -> bool:
    if isinstance(phi, A.GFormula):
        return o_efrm(H, alpha, rho, phi.body)
    if isinstance(phi, A.FExpr):
        return o_frm(H, alpha, rho, phi.expr)
    if isinstance(phi, A.FAcc):
        return o_frm(H, alpha, rho, phi.recv)
    if isinstance(phi, A.FConj):
        return o_efrm(H, alpha, rho, phi.left) and o_efrm(H, alpha, rho, phi.right)
    if isinstance(phi, A.FCond):
        if not o_frm(H, alpha, rho, phi.cond):
            return False
        c = o_eval(H, rho, phi.cond)
        return o_efrm(H, alpha, rho, phi.then if c else phi.else_)
    if isinstance(phi, A.FPred):
        if not all(o_frm(H, alpha, rho, a) for a in phi.args):
            return False
        d = PREDS[phi.name]
        env = {x: o_eval(H, rho, a) for (_, x), a in zip(d.params, phi.args)}
        return o_efrm(H, alpha, env, d.body)
    raise TypeError(phi)


def _subsets(s: frozenset):
    items = sorted(s)
    for k in range(len(items) + 1):
        for c in itertools.combinations(items, k):
            yield frozenset(c)


def o_assert(H, alpha, rho, phi) -> bool:
    """Assertion rules verbatim. Raises OStuck when an evaluation premise cannot hold."""
    @lru_cache(maxsize=None)
    def sat(node_id, env_key, al):
        return _sat(nodes[node_id], dict(env_key), al)

    nodes = {}

    def call(node, env, al):
        nodes[id(node)] = node
        return sat(id(node), tuple(sorted(env.items())), al)

    def _sat(phi, env, al):
        if isinstance(phi, A.GFormula):
            if phi.imprecise:
                return call(phi.body, env, al) and o_efrm(H, al, env, phi.body)
            return call(phi.body, env, al)
        if isinstance(phi, A.FExpr):
            return o_eval(H, env, phi.expr) is True
        if isinstance(phi, A.FAcc):
            r = o_eval(H, env, phi.recv)
            return isinstance(r, Ref) and (r, phi.field) in al
        if isinstance(phi, A.FCond):
            c = o_eval(H, env, phi.cond)
            return call(phi.then if c else phi.else_, env, al)
        if isinstance(phi, A.FConj):
            for a1 in _subsets(al):
                if call(phi.left, env, a1):
                    for a2 in _subsets(al - a1):
                        if call(phi.right, env, a2):
                            return True
            return False
        if isinstance(phi, A.FPred):
            d = PREDS[phi.name]
            penv = {x: o_eval(H, env, a) for (_, x), a in zip(d.params, phi.args)}
            return call(d.body, penv, al)
        raise TypeError(phi)

    return call(phi, rho, frozenset(alpha))


# --- programs for the stepping properties ---------------------------------------------


def strip_folds(s: A.Stmt) -> A.Stmt:
    if isinstance(s, (A.Fold, A.Unfold)):
        return A.Skip(pos=s.pos)
    if isinstance(s, A.Seq):
        return A.Seq(strip_folds(s.first), strip_folds(s.second), pos=s.pos)
    if isinstance(s, A.If):
        return A.If(s.cond, strip_folds(s.then), strip_folds(s.else_), pos=s.pos)
    if isinstance(s, A.While):
        return A.While(s.cond, s.invariant, strip_folds(s.body), pos=s.pos)
    return s


def has_folds(s: A.Stmt) -> bool:
    if isinstance(s, (A.Fold, A.Unfold)):
        return True
    if isinstance(s, A.Seq):
        return has_folds(s.first) or has_folds(s.second)
    if isinstance(s, A.If):
        return has_folds(s.then) or has_folds(s.else_)
    if isinstance(s, A.While):
        return has_folds(s.body)
    return False


def strip_program(p: A.Program) -> A.Program:
    ms = tuple(replace(m, body=strip_folds(m.body)) for m in p.methods)
    return replace(p, methods=ms, entry=strip_folds(p.entry))


def program_has_folds(p: A.Program) -> bool:
    return has_folds(p.entry) or any(has_folds(m.body) for m in p.methods)


def _assert(H, alpha, rho, phi):
    """The interpreter's assertion judgement, with a stuck evaluation counted as not holding."""
    try:
        return SEM.assert_formula(H, alpha, rho, phi)
    except Stuck:
        return False


def _program(seed, imprecision=0.3):
    p, _ = generate(random.Random(seed), GenBounds(imprecision=imprecision))
    return p


def no_excl_outcome(p):
    return run(p, RunOptions(mode=FULL, exclusion_frames=False, max_steps=5000)).outcome.describe()


def step_states(p, rng, max_steps=400):
    """Full-mode states with random exclusion frames at each step."""
    mach = Machine(p)
    g = initial_state(p)
    out = [g]
    for _ in range(max_steps):
        if g.final:
            break
        excl = frozenset(x for x in g.top.alpha if rng.random() < 0.2)
        before = g
        try:
            _, g = mach.step(g, excl)
        except Stuck:
            break
        out.append((before, g))
    return out


def disjoint_frames(g) -> bool:
    seen = set()
    for fr in g.stack:
        if seen & fr.alpha:
            return False
        seen |= fr.alpha
    return True
