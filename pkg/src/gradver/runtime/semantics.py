"""Dynamic semantics of expressions and formulas.

Heaps are dicts from (Ref, field) to values; permission sets are sets of
(Ref, field) pairs. Evaluation raises Stuck; framing and assertion
judgements return booleans, except that evaluation failures while
choosing a branch propagate as Stuck.
"""
from __future__ import annotations

from typing import Optional

from ..frontend import ast as A
from ..symbolic import terms as T
from ..symbolic.heap import FieldPerm
from ..verifier import translate as TR
from ..verifier.checks import Bottom, CheckPerm, CheckSep, CheckValue
from .values import NonTerminatingPredicate, Ref, Stuck


class Semantics:
    """Program-dependent parts of the dynamic semantics (predicate bodies)."""

    def __init__(self, program: A.Program):
        self.program = program
        self.preds = {p.name: p for p in program.predicates}
        from ..verifier.engine import _precise_preds

        self._precise = _precise_preds(program)

    # -- evaluation ------------------------------------------------------------

    def eval(self, H: dict, rho: dict, e, ghosts=None):
        if isinstance(e, A.Lit):
            return None if e.type == "null" else e.value
        if isinstance(e, A.Var):
            if e.name not in rho:
                raise Stuck("EvalVar", f"undefined variable {e.name}")
            return rho[e.name]
        if isinstance(e, A.FieldRead):
            r = self.eval(H, rho, e.recv, ghosts)
            if not isinstance(r, Ref):
                raise Stuck("EvalField", f"null dereference reading .{e.field}")
            try:
                return H[(r, e.field)]
            except KeyError:
                raise Stuck("EvalField", f"no field {e.field} at {r!r}") from None
        if isinstance(e, A.Not):
            return not self.eval(H, rho, e.operand, ghosts)
        if isinstance(e, A.BinOp):
            a = self.eval(H, rho, e.left, ghosts)
            if e.op == "&&":
                return False if not a else bool(self.eval(H, rho, e.right, ghosts))
            if e.op == "||":
                return True if a else bool(self.eval(H, rho, e.right, ghosts))
            b = self.eval(H, rho, e.right, ghosts)
            try:
                return T.apply_op(e.op, a, b)
            except T.EvalError as ex:
                raise Stuck("EvalOp", str(ex)) from None
        if isinstance(e, TR.Ghost):
            if ghosts is None:
                raise Stuck("EvalGhost", f"no ghost table for {e}")
            try:
                return ghosts(e)
            except KeyError:
                raise Stuck("EvalGhost", f"ghost {e} not recorded") from None
        raise TypeError(e)

    # -- framing -----------------------------------------------------------------

    def frame_set(self, H, rho, e, ghosts=None) -> set:
        """Locations the Frame rules need for e (short-circuit aware).

        Equal to efoot(e); raises Stuck when a receiver is not a reference.
        """
        if isinstance(e, (A.Lit, A.Var, TR.Ghost)):
            return set()
        if isinstance(e, A.FieldRead):
            out = self.frame_set(H, rho, e.recv, ghosts)
            r = self.eval(H, rho, e.recv, ghosts)
            if not isinstance(r, Ref):
                raise Stuck("FrameField", f"null receiver for .{e.field}")
            out.add((r, e.field))
            return out
        if isinstance(e, A.Not):
            return self.frame_set(H, rho, e.operand, ghosts)
        if isinstance(e, A.BinOp):
            out = self.frame_set(H, rho, e.left, ghosts)
            if e.op in ("&&", "||"):
                a = self.eval(H, rho, e.left, ghosts)
                if bool(a) == (e.op == "||"):
                    return out
            return out | self.frame_set(H, rho, e.right, ghosts)
        raise TypeError(e)

    def framed(self, H, alpha, rho, e) -> bool:
        try:
            return self.frame_set(H, rho, e) <= alpha
        except Stuck:
            return False

    def _iframe_set(self, H, rho, phi, equi: bool, seen: tuple) -> set:
        if isinstance(phi, A.GFormula):
            return self._iframe_set(H, rho, phi.body, equi, seen)
        if isinstance(phi, A.FExpr):
            return self.frame_set(H, rho, phi.expr)
        if isinstance(phi, A.FAcc):
            return self.frame_set(H, rho, phi.recv)
        if isinstance(phi, A.FConj):
            return (self._iframe_set(H, rho, phi.left, equi, seen)
                    | self._iframe_set(H, rho, phi.right, equi, seen))
        if isinstance(phi, A.FCond):
            out = self.frame_set(H, rho, phi.cond)
            c = self.eval(H, rho, phi.cond)
            return out | self._iframe_set(H, rho, phi.then if c else phi.else_, equi, seen)
        if isinstance(phi, A.FPred):
            out = set()
            for a in phi.args:
                out |= self.frame_set(H, rho, a)
            if equi:
                env, key = self._pred_env(H, rho, phi, seen)
                out |= self._iframe_set(H, env, self.preds[phi.name].body, equi, seen + (key,))
            return out
        raise TypeError(phi)

    def iframed(self, H, alpha, rho, phi) -> bool:
        try:
            return self._iframe_set(H, rho, phi, False, ()) <= alpha
        except NonTerminatingPredicate:
            raise
        except Stuck:
            return False

    def eframed(self, H, alpha, rho, phi) -> bool:
        try:
            return self._iframe_set(H, rho, phi, True, ()) <= alpha
        except NonTerminatingPredicate:
            raise
        except Stuck:
            return False

    def _pred_env(self, H, rho, phi: A.FPred, seen: tuple, ghosts=None):
        d = self.preds[phi.name]
        vals = tuple(self.eval(H, rho, a, ghosts) for a in phi.args)
        key = (phi.name, vals)
        if key in seen:
            raise NonTerminatingPredicate(phi.name, vals)
        return {x: v for (_, x), v in zip(d.params, vals)}, key

    # -- assertions ----------------------------------------------------------------

    def required(self, H, rho, phi, seen: tuple = (), ghosts=None) -> Optional[set]:
        """The least permission set satisfying phi, or None if no set does.

        Satisfying sets of specifications are upward closed with a least
        element, so H, α, ρ ⊨ φ iff required(φ) ⊆ α. Evaluation failures in
        conditions propagate as Stuck.
        """
        if isinstance(phi, A.GFormula):
            r = self.required(H, rho, phi.body, seen, ghosts)
            if r is None or not phi.imprecise:
                return r
            try:
                fr = self._iframe_set(H, rho, phi.body, True, seen)
            except NonTerminatingPredicate:
                raise
            except Stuck:
                return None
            return r | fr
        if isinstance(phi, A.FExpr):
            return set() if self.eval(H, rho, phi.expr, ghosts) is True else None
        if isinstance(phi, A.FAcc):
            r = self.eval(H, rho, phi.recv, ghosts)
            return {(r, phi.field)} if isinstance(r, Ref) else None
        if isinstance(phi, A.FConj):
            a = self.required(H, rho, phi.left, seen, ghosts)
            if a is None:
                return None
            b = self.required(H, rho, phi.right, seen, ghosts)
            if b is None or a & b:
                return None
            return a | b
        if isinstance(phi, A.FCond):
            c = self.eval(H, rho, phi.cond, ghosts)
            return self.required(H, rho, phi.then if c else phi.else_, seen, ghosts)
        if isinstance(phi, A.FPred):
            env, key = self._pred_env(H, rho, phi, seen, ghosts)
            return self.required(H, env, self.preds[phi.name].body, seen + (key,))
        raise TypeError(phi)

    def assert_formula(self, H, alpha, rho, phi) -> bool:
        r = self.required(H, rho, phi)
        return r is not None and r <= alpha

    # -- footprints ------------------------------------------------------------------

    def efoot(self, H, rho, phi, seen: tuple = ()) -> set:
        if isinstance(phi, A.GFormula):
            return self.efoot(H, rho, phi.body, seen)
        if isinstance(phi, A.FExpr):
            return self.expr_foot(H, rho, phi.expr)
        if isinstance(phi, A.FAcc):
            out = self.expr_foot(H, rho, phi.recv)
            r = self.eval(H, rho, phi.recv)
            if not isinstance(r, Ref):
                raise Stuck("efoot", f"acc of null .{phi.field}")
            out.add((r, phi.field))
            return out
        if isinstance(phi, A.FConj):
            return self.efoot(H, rho, phi.left, seen) | self.efoot(H, rho, phi.right, seen)
        if isinstance(phi, A.FCond):
            out = self.expr_foot(H, rho, phi.cond)
            c = self.eval(H, rho, phi.cond)
            return out | self.efoot(H, rho, phi.then if c else phi.else_, seen)
        if isinstance(phi, A.FPred):
            out = set()
            for a in phi.args:
                out |= self.expr_foot(H, rho, a)
            env, key = self._pred_env(H, rho, phi, seen)
            return out | self.efoot(H, env, self.preds[phi.name].body, seen + (key,))
        raise TypeError(phi)

    def expr_foot(self, H, rho, e) -> set:
        try:
            return self.frame_set(H, rho, e)
        except Stuck as ex:
            raise Stuck("efoot", ex.reason) from None

    def completely_precise(self, phi: A.GFormula) -> bool:
        from ..verifier.engine import _preds_in

        return not phi.imprecise and all(self._precise[p] for p in _preds_in(phi.body))

    def foot(self, H, alpha, rho, phi: A.GFormula) -> set:
        if self.completely_precise(phi):
            return self.efoot(H, rho, phi)
        return set(alpha)

    def vfoot(self, V, H, perms) -> set:
        """Concrete footprint of symbolic permissions under valuation V."""
        out = set()
        for p in perms:
            if isinstance(p, FieldPerm):
                out.add((T.evaluate(p.recv, V), p.field))
            else:
                d = self.preds[p.pred]
                env = {x: T.evaluate(a, V) for (_, x), a in zip(d.params, p.args)}
                out |= self.efoot(H, env, d.body)
        return out

    # -- run-time checks ----------------------------------------------------------

    def check_runtime(self, V, H, alpha, r) -> bool:
        """Symbolic check r under valuation V."""
        if isinstance(r, Bottom):
            return False
        if isinstance(r, CheckValue):
            return T.evaluate(r.term, V) is True
        if isinstance(r, CheckPerm):
            p = r.perm
            if isinstance(p, FieldPerm):
                return (T.evaluate(p.recv, V), p.field) in alpha
            d = self.preds[p.pred]
            env = {x: T.evaluate(a, V) for (_, x), a in zip(d.params, p.args)}
            try:
                return self.assert_formula(H, alpha, env, d.body)
            except NonTerminatingPredicate:
                raise
            except Stuck:
                return False
        if isinstance(r, CheckSep):
            try:
                return not (self.vfoot(V, H, r.left) & self.vfoot(V, H, r.right))
            except NonTerminatingPredicate:
                raise
            except Stuck:
                return False
        raise TypeError(r)

    def eval_check(self, H, alpha, rho, c, ghosts=None) -> bool:
        """Translated check c in the concrete state; evaluation failures fail the check."""
        try:
            if isinstance(c, TR.CBottom):
                return False
            if isinstance(c, TR.CValue):
                return self.eval(H, rho, c.expr, ghosts) is True
            if isinstance(c, TR.CAcc):
                return (self.eval(H, rho, c.recv, ghosts), c.field) in alpha
            if isinstance(c, TR.CPred):
                env, _ = self._pred_env(H, rho, A.FPred(c.name, c.args), (), ghosts)
                return self.assert_formula(H, alpha, env, self.preds[c.name].body)
            if isinstance(c, TR.CSep):
                return not (self.item_foot(H, rho, c.left, ghosts)
                            & self.item_foot(H, rho, c.right, ghosts))
        except NonTerminatingPredicate:
            raise
        except Stuck:
            return False
        raise TypeError(c)

    def item_foot(self, H, rho, items, ghosts=None) -> set:
        """Concrete footprint of translated permission items (exclusion frames, sep sides)."""
        out = set()
        for i in items:
            if isinstance(i, TR.CAcc):
                out.add((self.eval(H, rho, i.recv, ghosts), i.field))
            else:
                env, _ = self._pred_env(H, rho, A.FPred(i.name, i.args), (), ghosts)
                out |= self.efoot(H, env, self.preds[i.name].body)
        return out
