"""Differential fuzzing of the verifier against the interpreter.

Each case is generated from its own RNG stream (seed and index), so runs
are reproducible and cases can be farmed out to worker processes.
Programs the verifier rejects are counted but not executed: guarded
execution is only defined for verified programs.
"""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

from ..frontend import ast as A
from ..frontend.printer import print_program
from ..runtime import interp as I
from ..verifier.checks import Bottom
from ..verifier.verify import verify
from .coexec import coexecute
from .gen import GenBounds, generate, reparse

SOUNDNESS = "soundness"  # guarded completes, full gets stuck
COEXEC = "coexec"  # a co-execution relation failed
HARNESS = "harness"  # the tracker or co-executor could not follow the run


@dataclass
class FuzzConfig:
    seed: int = 1
    count: int = 100
    methods: int = 3
    stmts: int = 12
    fields: int = 3
    predicates: int = 2
    imprecision: float = 0.3
    heap: int = 4
    jobs: int = 1
    shrink: bool = True
    max_steps: int = 5000

    def bounds(self) -> GenBounds:
        return GenBounds(self.methods, self.stmts, self.fields, self.predicates, self.heap,
                         self.imprecision)


@dataclass
class CaseResult:
    index: int
    verified: bool
    states: int
    checks: int
    non_bottom_checks: int
    exclusions: int
    guarded: str = ""
    full: str = ""
    guarded_checks: int = 0
    guarded_perm_checks: int = 0
    coexec_steps: int = 0
    violations: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    program: str = ""
    shrunk: str = ""

    @property
    def same_outcome(self) -> bool:
        """Guarded and full agree (a failed check and a stuck step at one site agree)."""
        return _stop_site(self.guarded) == _stop_site(self.full)


def _stop_site(desc: str) -> str:
    for head in ("check failed at ", "stuck at "):
        if desc.startswith(head):
            return "stopped at " + desc[len(head):].split(" ")[0].rstrip(":")
    return desc


@dataclass
class FuzzReport:
    config: FuzzConfig
    cases: list

    @property
    def flagged(self) -> list:
        return [c for c in self.cases if c.flags]

    def summary(self) -> dict:
        ver = [c for c in self.cases if c.verified]
        return {
            "programs": len(self.cases),
            "verified": len(ver),
            "flagged": len(self.flagged),
            "soundness_flags": sum(SOUNDNESS in c.flags for c in self.cases),
            "coexec_flags": sum(COEXEC in c.flags for c in self.cases),
            "harness_flags": sum(HARNESS in c.flags for c in self.cases),
            "checks": sum(c.checks for c in self.cases),
            "non_bottom_checks": sum(c.non_bottom_checks for c in self.cases),
            "guarded_checks_evaluated": sum(c.guarded_checks for c in ver),
            "guarded_perm_checks_evaluated": sum(c.guarded_perm_checks for c in ver),
            "outcome_mismatches": sum(not c.same_outcome for c in ver),
        }

    def to_json(self) -> dict:
        return {
            "config": asdict(self.config),
            "summary": self.summary(),
            "flagged": [asdict(c) for c in self.flagged],
        }


def flags_of(program: A.Program, max_steps: int = 5000, case: Optional[CaseResult] = None) -> list:
    """Verify, run both modes and co-execute; return the flags raised."""
    rep = verify(program)
    checks = rep.symbolic_checks()
    if case is not None:
        case.verified = rep.verified
        case.states = rep.states
        case.checks = len(checks)
        case.non_bottom_checks = sum(not isinstance(c, Bottom) for c in checks)
        case.exclusions = rep.exclusion_count()
    if not rep.verified:
        return []
    g = I.run(program, I.RunOptions(mode=I.GUARDED, max_steps=max_steps), rep).outcome
    f = I.run(program, I.RunOptions(mode=I.FULL, max_steps=max_steps), rep).outcome
    co = coexecute(program, max_steps=max_steps)
    flags = []
    if isinstance(g, I.Completed) and isinstance(f, I.StuckOutcome):
        flags.append(SOUNDNESS)
    if co.violations:
        flags.append(COEXEC)
    if co.errors or any(isinstance(o, I.HarnessError) and not _step_limit(o)
                        for o in (g, co.outcome)):
        flags.append(HARNESS)
    if case is not None:
        case.guarded, case.full = g.describe(), f.describe()
        case.guarded_checks, case.guarded_perm_checks = g.checks_evaluated, g.perm_checks_evaluated
        case.coexec_steps = co.steps
        case.violations = [str(v) for v in co.violations[:5]] + co.errors[:5]
    return flags


def _step_limit(o) -> bool:
    return o.reason.startswith("step limit")


def run_case(cfg: FuzzConfig, index: int) -> CaseResult:
    rng = random.Random(f"{cfg.seed}:{index}")
    program, _ = generate(rng, cfg.bounds())
    case = CaseResult(index, False, 0, 0, 0, 0)
    case.flags = flags_of(program, cfg.max_steps, case)
    if case.flags:
        case.program = print_program(program)
        if cfg.shrink:
            want = set(case.flags)
            small = shrink(program, lambda q: want <= set(flags_of(q, cfg.max_steps)))
            case.shrunk = print_program(small)
    return case


def _run_case(args):
    return run_case(*args)


def fuzz(cfg: FuzzConfig) -> FuzzReport:
    jobs = [(cfg, i) for i in range(cfg.count)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            cases = list(pool.map(_run_case, jobs, chunksize=8))
    else:
        cases = [_run_case(j) for j in jobs]
    cases.sort(key=lambda c: c.index)
    return FuzzReport(cfg, cases)


# --- shrinking -----------------------------------------------------------------------


def _spine(s: A.Stmt) -> list:
    out = []
    while True:
        h, s = A.split_head(s)
        if isinstance(h, A.Skip) and isinstance(s, A.Skip):
            return out
        out.append(h)
        if isinstance(s, A.Skip):
            return out


def _deletions(s: A.Stmt):
    """Every statement obtained from s by deleting one sub-statement."""
    items = _spine(s)
    for i, h in enumerate(items):
        yield A.seq(*items[:i], *items[i + 1:])
        inner = []
        if isinstance(h, A.If):
            inner = [A.If(h.cond, t, h.else_) for t in _deletions(h.then)]
            inner += [A.If(h.cond, h.then, e) for e in _deletions(h.else_)]
        elif isinstance(h, A.While):
            inner = [A.While(h.cond, h.invariant, b) for b in _deletions(h.body)]
        for new in inner:
            yield A.seq(*items[:i], new, *items[i + 1:])


def _variants(p: A.Program):
    for s in _deletions(p.entry):
        yield A.Program(p.structs, p.predicates, p.methods, s)
    for k, m in enumerate(p.methods):
        for b in _deletions(m.body):
            ms = list(p.methods)
            ms[k] = A.MethodDef(m.name, m.params, m.ret, m.pre, m.post, b)
            yield A.Program(p.structs, p.predicates, tuple(ms), p.entry)


def shrink(program: A.Program, still_fails: Callable[[A.Program], bool],
           budget: int = 400) -> A.Program:
    """Greedy statement deletion while the failure persists and the program stays well formed."""
    cur = program
    progress = True
    while progress and budget > 0:
        progress = False
        for cand in _variants(cur):
            budget -= 1
            q = reparse(cand)
            if q is not None and still_fails(q):
                cur, progress = q, True
                break
            if budget <= 0:
                break
    return cur
