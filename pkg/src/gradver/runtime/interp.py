"""Small-step interpreter with exclusion frames.

Full mode asserts every contract. Guarded mode drops the contract
assertions (pre, post, invariant, assert) and instead evaluates the
verifier's checks for the current site, selected through the tracker.
Framing premises and footprint transfers are the same in both modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from .semantics import Semantics
from .values import NonTerminatingPredicate, Ref, Stuck, default_value, show_value

FULL = "full"
GUARDED = "guarded"


@dataclass
class Frame:
    alpha: frozenset
    rho: dict
    stmt: A.Stmt
    owner: str

    def head(self):
        return A.split_head(self.stmt)


@dataclass
class DynState:
    heap: dict
    stack: list  # bottom first
    next_ref: int = 1
    final: bool = False

    @property
    def top(self) -> Frame:
        return self.stack[-1]

    def copy(self) -> "DynState":
        return DynState(dict(self.heap), list(self.stack), self.next_ref, self.final)


def initial_state(program: A.Program) -> DynState:
    """ExecInit, with the entry wrapped as `entry; skip`."""
    return DynState({}, [Frame(frozenset(), {}, A.seq(program.entry, A.Skip()), "main")])


# --- outcomes -------------------------------------------------------------------


@dataclass
class Completed:
    result: object
    steps: int
    checks_evaluated: int = 0
    perm_checks_evaluated: int = 0

    def describe(self) -> str:
        return f"completed result={show_value(self.result)}"


@dataclass
class StuckOutcome:
    site: str
    rule: str
    reason: str
    steps: int
    checks_evaluated: int = 0
    perm_checks_evaluated: int = 0

    def describe(self) -> str:
        return f"stuck at {self.site} ({self.rule}: {self.reason})"


@dataclass
class CheckFailed:
    site: str
    check: str
    steps: int
    checks_evaluated: int = 0
    perm_checks_evaluated: int = 0

    def describe(self) -> str:
        return f"check failed at {self.site}: {self.check}"


@dataclass
class HarnessError:
    reason: str
    steps: int
    checks_evaluated: int = 0
    perm_checks_evaluated: int = 0

    def describe(self) -> str:
        return f"harness error: {self.reason}"


class StepLimit(Exception):
    pass


# --- one step -------------------------------------------------------------------


def frame_site(fr: Frame) -> str:
    if isinstance(fr.stmt, A.Skip):
        return f"{fr.owner}:exit"
    h = fr.head()[0]
    return f"{fr.owner}@{h.pos[0]}:{h.pos[1]} {A.stmt_kind(h)}"


def step_rule(g: DynState) -> str:
    """Name of the rule that applies to g, decided syntactically (plus the loop test)."""
    top = g.top
    if isinstance(top.stmt, A.Skip):
        if len(g.stack) == 1:
            return "ExecFinal"
        below = g.stack[-2].head()[0]
        return "ExecCallExit" if isinstance(below, A.Call) else "ExecWhileFinish"
    h = top.head()[0]
    return {
        A.Skip: "ExecSeq", A.Assign: "ExecAssign", A.AssignField: "ExecAssignField",
        A.Alloc: "ExecAlloc", A.Call: "ExecCallEnter", A.Assert: "ExecAssert",
        A.Fold: "ExecFold", A.Unfold: "ExecUnfold", A.If: "ExecIf", A.While: "ExecWhile",
    }[type(h)]


class Machine:
    """Program-bound stepping."""

    def __init__(self, program: A.Program):
        self.program = program
        self.sem = Semantics(program)
        self.methods = {m.name: m for m in program.methods}
        self.structs = {s.name: s for s in program.structs}

    def _frame_ok(self, H, alpha, rho, e, rule):
        if not self.sem.framed(H, alpha, rho, e):
            raise Stuck(rule, "expression not framed")

    def _assert(self, H, alpha, rho, phi, rule, what):
        try:
            ok = self.sem.assert_formula(H, alpha, rho, phi)
        except NonTerminatingPredicate:
            raise
        except Stuck as ex:
            raise Stuck(rule, f"{what}: {ex.reason}") from None
        if not ok:
            raise Stuck(rule, f"{what} does not hold")

    def step(self, g: DynState, excl=frozenset(), assertions: bool = True):
        """dyn_step: returns (rule, new state). Raises Stuck. Fold/unfold are no-ops."""
        g = g.copy()
        sem, H = self.sem, g.heap
        top = g.top
        rule = step_rule(g)
        if rule == "ExecFinal":
            g.final = True
            return rule, g
        if rule == "ExecCallExit":
            caller = g.stack[-2]
            h, rest = caller.head()
            m = self.methods[h.method]
            if assertions:
                self._assert(H, top.alpha, top.rho, m.post, rule, "postcondition")
            if A.RESERVED_RESULT not in top.rho:
                raise Stuck(rule, "result unassigned")
            rho = dict(caller.rho)
            rho[h.target] = top.rho[A.RESERVED_RESULT]
            gained = self._foot(H, top.alpha, top.rho, m.post, rule)
            g.stack[-2:] = [Frame(caller.alpha | gained, rho, rest, caller.owner)]
            return rule, g
        if rule == "ExecWhileFinish":
            lower = g.stack[-2]
            w = lower.head()[0]
            if assertions:
                self._assert(H, top.alpha, top.rho, w.invariant, rule, "loop invariant")
            gained = self._foot(H, top.alpha, top.rho, w.invariant, rule)
            g.stack[-2:] = [Frame(lower.alpha | gained, dict(top.rho), lower.stmt, lower.owner)]
            return rule, g

        h, rest = top.head()
        alpha, rho = top.alpha, top.rho

        def replace_top(**kw):
            d = dict(alpha=alpha, rho=rho, stmt=rest, owner=top.owner)
            d.update(kw)
            g.stack[-1] = Frame(**d)

        if isinstance(h, (A.Skip, A.Fold, A.Unfold)):
            replace_top()
        elif isinstance(h, A.Assign):
            v = sem.eval(H, rho, h.value)
            self._frame_ok(H, alpha, rho, h.value, rule)
            r2 = dict(rho)
            r2[h.target] = v
            replace_top(rho=r2)
        elif isinstance(h, A.AssignField):
            ell = sem.eval(H, rho, A.Var(h.target))
            v = sem.eval(H, rho, h.value)
            if not isinstance(ell, Ref) or (ell, h.field) not in alpha:
                raise Stuck(rule, f"no permission for {h.target}.{h.field}")
            self._frame_ok(H, alpha, rho, h.value, rule)
            H[(ell, h.field)] = v
            replace_top()
        elif isinstance(h, A.Alloc):
            ell = Ref(g.next_ref)
            g.next_ref += 1
            perms = set()
            for ty, f in self.structs[h.struct].fields:
                H[(ell, f)] = default_value(ty)
                perms.add((ell, f))
            r2 = dict(rho)
            r2[h.target] = ell
            replace_top(alpha=alpha | frozenset(perms), rho=r2)
        elif isinstance(h, A.Call):
            m = self.methods[h.method]
            vals = [sem.eval(H, rho, a) for a in h.args]
            for a in h.args:
                self._frame_ok(H, alpha, rho, a, rule)
            callee_rho = {x: v for (_, x), v in zip(m.params, vals)}
            avail = alpha - excl
            if assertions:
                self._assert(H, avail, callee_rho, m.pre, rule, "precondition")
            passed = self._foot(H, avail, callee_rho, m.pre, rule)
            g.stack[-1] = Frame(alpha - passed, rho, top.stmt, top.owner)
            g.stack.append(Frame(frozenset(passed), callee_rho, A.seq(m.body, A.Skip()), m.name))
            rule = "ExecCallEnter"
        elif isinstance(h, A.Assert):
            phi = h.formula if h.formula.imprecise else A.GFormula(True, h.formula.body)
            if assertions:
                self._assert(H, alpha, rho, phi, rule, "assertion")
            replace_top()
        elif isinstance(h, A.If):
            c = sem.eval(H, rho, h.cond)
            self._frame_ok(H, alpha, rho, h.cond, rule)
            rule = "ExecIfA" if c else "ExecIfB"
            replace_top(stmt=A.Seq(h.then if c else h.else_, rest, pos=h.pos))
        elif isinstance(h, A.While):
            c = sem.eval(H, rho, h.cond)
            self._frame_ok(H, alpha, rho, h.cond, rule)
            avail = alpha - excl
            if c:
                rule = "ExecWhileEnter"
                if assertions:
                    self._assert(H, avail, rho, h.invariant, rule, "loop invariant")
                passed = self._foot(H, avail, rho, h.invariant, rule)
                g.stack[-1] = Frame(alpha - passed, rho, top.stmt, top.owner)
                g.stack.append(Frame(frozenset(passed), dict(rho), A.seq(h.body, A.Skip()),
                                     f"loop@{h.pos[0]}:{h.pos[1]}"))
            else:
                rule = "ExecWhileSkip"
                if assertions:
                    self._assert(H, avail, rho, h.invariant, rule, "loop invariant")
                replace_top()
        else:
            raise TypeError(h)
        return rule, g

    def _foot(self, H, alpha, rho, phi, rule) -> frozenset:
        try:
            return frozenset(self.sem.foot(H, alpha, rho, phi))
        except NonTerminatingPredicate:
            raise
        except Stuck as ex:
            raise Stuck(rule, f"footprint: {ex.reason}") from None


# --- whole runs -----------------------------------------------------------------


@dataclass
class RunOptions:
    mode: str = FULL
    exclusion_frames: bool = True
    max_steps: int = 20000
    trace: bool = False


@dataclass
class RunResult:
    outcome: object
    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def run(program: A.Program, opts: Optional[RunOptions] = None, report=None) -> RunResult:
    """Execute main. Exclusion frames and guarded checks come from the tracker."""
    from .tracker import TrackError, Tracker

    opts = opts or RunOptions()
    mach = Machine(program)
    g = initial_state(program)
    trk: Optional[Tracker] = None
    if opts.mode == GUARDED or opts.exclusion_frames:
        trk = Tracker(program)
    out = RunResult(None)
    n_checks = n_perm = 0
    steps = 0

    def finish(o):
        o.checks_evaluated, o.perm_checks_evaluated = n_checks, n_perm
        out.outcome = o
        return out

    while True:
        if steps >= opts.max_steps:
            return finish(HarnessError(f"step limit {opts.max_steps} reached", steps))
        site = frame_site(g.top)
        excl = frozenset()
        if trk is not None:
            try:
                sel = trk.select_guard(g)
            except TrackError as ex:
                if opts.mode == GUARDED:
                    return finish(HarnessError(f"tracking failed at {site}: {ex}", steps))
                out.notes.append(f"tracking lost at {site}: {ex}; exclusion frames off")
                trk = None
                sel = None
            if sel is not None:
                if opts.mode == GUARDED:
                    for c in sel.checks:
                        n_checks += 1
                        n_perm += int(sel.is_perm_check(c))
                        try:
                            ok = mach.sem.eval_check(g.heap, g.top.alpha, g.top.rho, c, trk.ghost)
                        except NonTerminatingPredicate as ex:
                            return finish(StuckOutcome(site, ex.rule, ex.reason, steps))
                        if not ok:
                            return finish(CheckFailed(site, str(c), steps))
                if opts.exclusion_frames and sel.exclusion:
                    try:
                        excl = frozenset(mach.sem.item_foot(g.heap, g.top.rho, sel.exclusion,
                                                            trk.ghost))
                    except Stuck as ex:
                        return finish(StuckOutcome(site, "ExclusionFrame", ex.reason, steps))
        try:
            rule, g2 = mach.step(g, excl, assertions=(opts.mode == FULL))
        except Stuck as ex:
            return finish(StuckOutcome(site, ex.rule, ex.reason, steps))
        steps += 1
        if opts.trace:
            out.trace.append(f"<{rule}, {site}, {len(g.top.alpha)}, {len(g.stack)}>")
        if g2.final:
            if trk is not None:
                out.notes += [f"correspondence lost: {m}" for m in trk.mismatches]
            return finish(Completed(g.top.rho.get(A.RESERVED_RESULT), steps))
        if trk is not None:
            try:
                trk.advance(g, g2, rule)
            except TrackError as ex:
                if opts.mode == GUARDED:
                    return finish(HarnessError(f"tracking failed after {site}: {ex}", steps))
                out.notes.append(f"tracking lost after {site}: {ex}; exclusion frames off")
                trk = None
        g = g2
