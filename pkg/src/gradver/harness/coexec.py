"""Lock-step co-execution of the verifier's derivations with a concrete run.

The dynamic side runs with contract assertions off and the guard's
symbolic checks on. At every step the harness checks:

* progress: when the checks pass, the fully asserted step also succeeds;
* guard completeness: some guard entry matches the concrete state;
* correspondence: heap, optimistic heap, store and path condition of the
  tracked symbolic state are modeled by the concrete top frame, precise
  chunks have disjoint footprints, and the statements agree;
* partial validity: each waiting frame models the state its call or loop
  left behind after consuming the callee's precondition or the invariant;
* frame disjointness: the stack's permission sets are pairwise disjoint.

Failures are violations. Problems in the harness itself (a symbolic value
with no concrete binding) are errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend import ast as A
from ..runtime import interp as I
from ..runtime.semantics import Semantics
from ..runtime.tracker import Tracker, TrackError
from ..runtime.values import NonTerminatingPredicate, Ref, Stuck, same, show_value
from ..symbolic import terms as T
from ..symbolic.heap import FieldChunk, PredChunk, perm_of
from ..verifier.verify import _stmt_key

MAX_VIOLATIONS = 50


@dataclass
class Violation:
    step: int
    relation: str
    detail: str

    def __str__(self) -> str:
        return f"step {self.step}: {self.relation}: {self.detail}"


@dataclass
class CoExecReport:
    steps: int
    valuation: dict
    violations: list
    outcome: object
    sites: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations and not self.errors

    def relations(self) -> set:
        return {v.relation for v in self.violations}

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "outcome": self.outcome.describe(),
            "violations": [
                {"step": v.step, "relation": v.relation, "detail": v.detail}
                for v in self.violations
            ],
            "errors": list(self.errors),
            "valuation": {T.show(k): show_value(v) for k, v in
                          sorted(self.valuation.items(), key=lambda kv: kv[0].args[0])},
        }


class _Unbound(Exception):
    pass


class _Relations:
    """The correspondence relations between one symbolic state and one frame."""

    def __init__(self, sem: Semantics, V: dict):
        self.sem = sem
        self.V = V

    def val(self, t):
        try:
            return T.evaluate(t, self.V)
        except T.EvalError as ex:
            raise _Unbound(str(ex)) from None

    def state(self, sigma, H, alpha, rho) -> list:
        """Relation failures as (relation, detail) pairs."""
        out = []
        out += self.heap(sigma.pheap, H, alpha, "precise-heap", disjoint=True)
        out += self.heap(sigma.oheap, H, alpha, "optimistic-heap", disjoint=False)
        for x, t in sigma.store.items():
            if x not in rho:
                out.append(("store", f"{x} unbound at run time"))
            elif not same(rho[x], self.val(t)):
                out.append(("store", f"{x} is {show_value(rho[x])}, "
                                     f"symbolically {T.show(t)} = {show_value(self.val(t))}"))
        for g in sigma.pc:
            if self.val(g) is not True:
                out.append(("path-condition", f"{T.show(g)} is false"))
        return out

    def heap(self, chunks, H, alpha, rel, disjoint) -> list:
        out = []
        feet = []
        for c in chunks:
            if isinstance(c, FieldChunk):
                loc = (self.val(c.recv), c.field)
                if loc not in alpha:
                    out.append((rel, f"{c} not owned ({show_value(loc[0])}.{c.field})"))
                elif not isinstance(loc[0], Ref) or loc not in H:
                    out.append((rel, f"{c} has no heap cell"))
                elif not same(H[loc], self.val(c.val)):
                    out.append((rel, f"{c}: heap holds {show_value(H[loc])}, "
                                     f"symbolically {show_value(self.val(c.val))}"))
            elif isinstance(c, PredChunk):
                d = self.sem.preds[c.pred]
                env = {x: self.val(a) for (_, x), a in zip(d.params, c.args)}
                try:
                    ok = self.sem.assert_formula(H, alpha, env, d.body)
                except Stuck:
                    ok = False
                if not ok:
                    out.append((rel, f"{c} does not hold"))
            if disjoint:
                try:
                    feet.append((c, self.sem.vfoot(self.V, H, [perm_of(c)])))
                except (Stuck, T.EvalError):
                    feet.append((c, set()))
        for i in range(len(feet)):
            for j in range(i + 1, len(feet)):
                if feet[i][1] & feet[j][1]:
                    out.append(("chunk-disjointness", f"{feet[i][0]} overlaps {feet[j][0]}"))
        return out


def coexecute(program: A.Program, max_steps: int = 20000, exclusion_frames: bool = True,
              prune: bool = True) -> CoExecReport:
    mach = I.Machine(program)
    sem = mach.sem
    trk = Tracker(program, prune=prune)
    g = I.initial_state(program)
    rep = CoExecReport(0, {}, [], None)
    seen_mismatch = 0

    def violate(rel, detail):
        if len(rep.violations) < MAX_VIOLATIONS:
            rep.violations.append(Violation(rep.steps, rel, detail))

    def finish(outcome):
        rep.outcome = outcome
        rep.valuation = dict(trk.V)
        return rep

    while True:
        if rep.steps >= max_steps:
            return finish(I.HarnessError(f"step limit {max_steps} reached", rep.steps))
        site = I.frame_site(g.top)
        rep.sites.append(site)
        try:
            sel = trk.select_guard(g)
        except TrackError as ex:
            violate("guard-completeness", f"at {site}: {ex}")
            return finish(I.HarnessError(f"no guard at {site}", rep.steps))
        e = sel.entry
        try:
            failed = [r for r in e.checks
                      if not sem.check_runtime(trk.V, g.heap, g.top.alpha, r)]
            excl = (frozenset(sem.vfoot(trk.V, g.heap, e.theta))
                    if exclusion_frames else frozenset())
        except NonTerminatingPredicate as ex:
            return finish(I.StuckOutcome(site, ex.rule, ex.reason, rep.steps))
        except (T.EvalError, Stuck) as ex:
            rep.errors.append(f"step {rep.steps} at {site}: {ex}")
            return finish(I.HarnessError(str(ex), rep.steps))
        # the translated checks must agree with the symbolic ones
        for c in sel.checks if not failed else ():
            try:
                ok = sem.eval_check(g.heap, g.top.alpha, g.top.rho, c, trk.ghost)
            except NonTerminatingPredicate:
                ok = False
            if not ok:
                violate("translation", f"{c} fails at {site} while the symbolic checks pass")
        if failed:
            return finish(I.CheckFailed(site, ", ".join(str(r) for r in failed), rep.steps))

        try:
            rule, g2 = mach.step(g, excl, assertions=True)
        except Stuck as ex:
            violate("progress", f"checks pass at {site} but {ex.rule} is stuck: {ex.reason}")
            try:
                rule, g2 = mach.step(g, excl, assertions=False)
            except Stuck as ex2:
                return finish(I.StuckOutcome(site, ex2.rule, ex2.reason, rep.steps))
        rep.steps += 1
        if g2.final:
            return finish(I.Completed(g.top.rho.get(A.RESERVED_RESULT), rep.steps))
        try:
            trk.advance(g, g2, rule)
        except TrackError as ex:
            violate("correspondence", f"after {site}: {ex}")
            return finish(I.HarnessError(f"lost track after {site}", rep.steps))
        for m in trk.mismatches[seen_mismatch:]:
            violate("correspondence", f"after {site}: {m}")
        seen_mismatch = len(trk.mismatches)
        g = g2
        try:
            _check_state(sem, trk, g, violate)
        except _Unbound as ex:
            rep.errors.append(f"step {rep.steps} after {site}: unbound {ex}")
            return finish(I.HarnessError(f"unbound symbolic value: {ex}", rep.steps))


def _check_state(sem: Semantics, trk: Tracker, g: I.DynState, violate) -> None:
    rel = _Relations(sem, trk.V)
    top, vs = g.top, trk.frames[-1].vs
    for r, d in rel.state(vs.sigma, g.heap, top.alpha, top.rho):
        violate(r, d)
    if _stmt_key(top.stmt) != _stmt_key(vs.stmt):
        violate("statement", f"{I.frame_site(top)} runs but the symbolic state is at "
                             f"{vs.owner}")
    if len(trk.frames) != len(g.stack):
        violate("partial-validity", f"{len(g.stack)} frames, {len(trk.frames)} tracked")
        return
    for fr, tf in zip(g.stack[:-1], trk.frames[:-1]):
        h = fr.head()[0]
        if not isinstance(h, (A.Call, A.While)):
            violate("partial-validity", f"waiting frame at {I.frame_site(fr)} is not a call or loop")
            continue
        consumed = tf.pending.get("consumed")
        if consumed is None:
            violate("partial-validity", f"no consumed state for {I.frame_site(fr)}")
            continue
        sigma = consumed.with_store(tf.vs.sigma.store)
        for r, d in rel.state(sigma, g.heap, fr.alpha, fr.rho):
            violate("partial-validity", f"{I.frame_site(fr)}: {r}: {d}")
    for i in range(len(g.stack)):
        for j in range(i + 1, len(g.stack)):
            both = g.stack[i].alpha & g.stack[j].alpha
            if both:
                violate("frame-disjointness", f"frames {i} and {j} share {sorted(both)}")
