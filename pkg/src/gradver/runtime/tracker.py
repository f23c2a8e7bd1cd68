"""Online co-execution of verification states with a concrete run.

The tracker keeps one verification state per dynamic frame and a single
valuation V. Before each step it derives the guard entries of the top
state and picks the one whose path condition holds under V extended with
the entry's fresh values. After the step it derives the successor states
and again picks the one that matches. Fresh values are bound by the
recipes the verifier attaches to each derivation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..symbolic import terms as T
from ..verifier import execute as X
from ..verifier.engine import Ctx
from ..verifier.translate import CAcc, CPred, CSep, translate_entry
from .values import Ref


class TrackError(Exception):
    """No derivation matches the concrete step."""


@dataclass
class TFrame:
    vs: X.VState
    pending: dict = field(default_factory=dict)


@dataclass
class Selection:
    entry: X.GuardEntry
    checks: list  # translated
    exclusion: list  # translated items
    vstate: X.VState

    @staticmethod
    def is_perm_check(c) -> bool:
        return isinstance(c, (CAcc, CPred, CSep))


class Tracker:
    def __init__(self, program: A.Program, prune: bool = True, strict: bool = False):
        self.ctx = Ctx(program, prune=prune)
        self.V: dict = {}
        self.frames = [TFrame(X.entry_root(self.ctx))]
        self.last: Optional[Selection] = None
        # strict: a successor with no matching derivation is an error; otherwise
        # tracking continues on the first bindable derivation and the step is noted
        self.strict = strict
        self.mismatches: list = []

    # -- valuation helpers ---------------------------------------------------------

    def ghost(self, g):
        return self.V[T.sym(g.ident, g.sort)]

    def _bind(self, intros, V: dict, H: dict, rho: dict, result=None) -> Optional[dict]:
        """V extended by the intros' recipes, or None if a recipe has no value."""
        V = dict(V)
        for t, r in intros:
            if t in V:
                continue
            kind = r[0]
            if kind == "var":
                if r[1] not in rho:
                    return None
                V[t] = rho[r[1]]
            elif kind == "result":
                V[t] = result
            elif kind == "heap":
                try:
                    ell = T.evaluate(r[1], V)
                except T.EvalError:
                    return None
                if not isinstance(ell, Ref) or (ell, r[2]) not in H:
                    return None
                V[t] = H[(ell, r[2])]
            else:
                raise ValueError(r)
        return V

    @staticmethod
    def holds(pc, V) -> bool:
        try:
            return all(T.evaluate(c, V) is True for c in pc)
        except T.EvalError:
            return False

    def _choose(self, cands, H, rho, result=None, what="step", base=(), lenient=False):
        """cands: list of (payload, pc, intros). The first candidate whose new
        path-condition conjuncts (those not in `base`) hold wins."""
        known = set(base)
        bindable = []
        for payload, pc, intros in cands:
            V2 = self._bind(intros, self.V, H, rho, result)
            if V2 is None:
                continue
            bindable.append((payload, V2))
            if self.holds([c for c in pc if c not in known], V2):
                self.V = V2
                return payload
        msg = f"no matching derivation for {what} ({len(cands)} candidates)"
        if lenient and not self.strict and bindable:
            self.mismatches.append(msg)
            payload, self.V = bindable[0]
            return payload
        raise TrackError(msg)

    # -- before a step ---------------------------------------------------------------

    def select_guard(self, g) -> Selection:
        top = self.frames[-1]
        entries = X.guard(self.ctx, top.vs)
        e = self._choose([(e, e.branch_pc, e.intros) for e in entries], g.heap, g.top.rho,
                         what=f"guard at {X.site_str(X.site_of(top.vs))}", base=top.vs.sigma.pc)
        checks, excl, _ = translate_entry(top.vs, e)
        self.last = Selection(e, checks, excl, top.vs)
        return self.last

    # -- after a step ---------------------------------------------------------------------

    def advance(self, g, g2, rule: str) -> None:
        ctx = self.ctx
        top = self.frames[-1]
        if rule == "ExecCallEnter":
            e = self._need_last(top)
            top.pending = {"consumed": e.aux["consumed"], "args": e.aux["args"]}
            m = ctx.methods[top.vs.head().method]
            roots = X.method_roots(ctx, m)
            vs = self._choose([(vs, vs.sigma.pc, i) for vs, i in roots], g2.heap, g2.top.rho,
                              what=f"entry of {m.name}", lenient=True)
            self.frames.append(TFrame(vs))
        elif rule == "ExecCallExit":
            caller = self.frames[-2]
            p = caller.pending
            succ = X.call_exit(ctx, caller.vs, p["consumed"], p["args"], ())
            res = g.top.rho.get(A.RESERVED_RESULT)
            vs = self._choose([(s.vstate, s.vstate.sigma.pc, s.intros) for s in succ], g2.heap,
                              g2.top.rho, result=res, what="call exit", base=caller.vs.sigma.pc,
                              lenient=True)
            self.frames[-2:] = [TFrame(vs)]
        elif rule == "ExecWhileEnter":
            e = self._need_last(top)
            top.pending = {"consumed": e.aux["consumed"]}
            roots = X.loop_roots(ctx, top.vs)
            vs = self._choose([(vs, vs.sigma.pc, i) for vs, i in roots], g2.heap, g2.top.rho,
                              what="loop entry", base=top.vs.sigma.pc, lenient=True)
            self.frames.append(TFrame(vs))
        elif rule == "ExecWhileFinish":
            lower = self.frames[-2]
            res = X.loop_resume(ctx, lower.vs, lower.pending["consumed"])
            vs = self._choose([(vs, vs.sigma.pc, i) for vs, i in res], g2.heap, g2.top.rho,
                              what="loop resume", base=lower.vs.sigma.pc, lenient=True)
            self.frames[-2:] = [TFrame(vs)]
        elif rule == "ExecFinal":
            self.frames = []
        else:
            succ = X.exec_step(ctx, top.vs)
            # heap recipes read the pre-step heap; variable recipes the post-step store
            cands = [(s.vstate, s.vstate.sigma.pc, s.intros) for s in succ]
            vs = self._choose(cands, g.heap, g2.top.rho, what=rule, base=top.vs.sigma.pc,
                              lenient=True)
            self.frames[-1] = TFrame(vs)
        self.last = None

    def _need_last(self, top: TFrame) -> X.GuardEntry:
        if self.last is None or self.last.vstate is not top.vs:
            raise TrackError("no guard selected for this step")
        return self.last.entry
