"""Exploration of reachable verification states and the verification report."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..symbolic import terms as T
from ..symbolic.solver import SatResult, Solver
from .engine import Ctx
from .execute import (GuardEntry, VState, entry_root, exec_step, guard, loop_roots,
                      method_roots, site_of, site_str)
from .translate import translate_entry

MAX_STATES = 20000


@dataclass
class SiteEntry:
    entry: GuardEntry
    vstate: VState
    checks: list  # translated
    exclusion: list  # translated

    def to_json(self) -> dict:
        e = self.entry
        return {
            "branch_pc": " && ".join(T.show(c) for c in e.branch_pc) or "true",
            "checks": [str(r) for r in e.checks],
            "translated": [str(c) for c in self.checks],
            "exclusion": [str(p) for p in e.theta],
            "translated_exclusion": [str(c) for c in self.exclusion],
        }


@dataclass
class Report:
    program: A.Program
    sites: dict = field(default_factory=dict)  # site tuple -> list[SiteEntry]
    failures: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    states: int = 0
    pruned: dict = field(default_factory=dict)
    unknown_bottoms: list = field(default_factory=list)
    dumped: list = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return not self.failures and not self.diagnostics

    def checks_at(self, site_name: str) -> set:
        """Translated checks at a site, as strings, over all its entries."""
        out = set()
        for site, entries in self.sites.items():
            if site_str(site) == site_name:
                for se in entries:
                    out |= {str(c) for c in se.checks}
        return out

    def all_checks(self) -> dict:
        return {site_str(s): sorted({str(c) for se in es for c in se.checks})
                for s, es in self.sites.items()}

    def symbolic_checks(self) -> list:
        """Untranslated checks of every entry (with repeats)."""
        return [r for es in self.sites.values() for se in es for r in se.entry.checks]

    def check_count(self) -> int:
        return sum(len(se.checks) for es in self.sites.values() for se in es)

    def exclusion_count(self) -> int:
        return sum(len(se.exclusion) for es in self.sites.values() for se in es)

    def to_json(self) -> dict:
        sites = []
        for site, es in self.sites.items():
            for se in es:
                d = {"pos": site_str(site)}
                d.update(se.to_json())
                sites.append(d)
        return {
            "verified": self.verified,
            "sites": sites,
            "failures": self.failures,
            "diagnostics": self.diagnostics,
            "stats": {"states": self.states, "pruned": dict(self.pruned),
                      "pruned_total": sum(self.pruned.values()),
                      "unknown_bottoms": [f"{s}: {w}" for s, w in self.unknown_bottoms]},
        }


# --- state keys up to renaming of symbolic values ------------------------------


def _canon(t: T.Term, names: dict) -> str:
    k = t.kind
    if k == "sym":
        if t not in names:
            names[t] = len(names)
        return f"#{names[t]}:{t.sort}"
    if k == "lit":
        return T.show(t) + ":" + t.sort
    if k in ("not", "and", "or"):
        return f"({k} " + " ".join(_canon(a, names) for a in t.args) + ")"
    o, a, b = t.args
    return f"({o} {_canon(a, names)} {_canon(b, names)})"


def _stmt_key(s: A.Stmt) -> tuple:
    out = []
    while not isinstance(s, A.Skip):
        h, s = A.split_head(s)
        out.append((A.stmt_kind(h), h.pos))
    return tuple(out)


def state_key(vs: VState) -> tuple:
    names: dict = {}
    s = vs.sigma
    parts = [vs.owner, s.imprecise, _stmt_key(vs.stmt), id(vs.post)]
    parts.append(tuple((x, _canon(s.store[x], names)) for x in sorted(s.store)))
    for c in s.pheap + ("|",) + s.oheap:
        if c == "|":
            parts.append("|")
        elif hasattr(c, "field"):
            parts.append(("f", c.field, _canon(c.recv, names), _canon(c.val, names)))
        else:
            parts.append(("p", c.pred) + tuple(_canon(a, names) for a in c.args))
    parts.append(tuple(_canon(g, names) for g in s.pc))
    return tuple(parts)


# --- exploration ------------------------------------------------------------------


def verify(program: A.Program, prune: bool = True, solver: Optional[Solver] = None,
           max_states: int = MAX_STATES, dump_states: bool = False) -> Report:
    ctx = Ctx(program, solver=solver, prune=prune)
    rep = Report(program)
    known: dict = {}
    queue: deque = deque()
    seen: set = set()

    def push(vs: VState, intros=()):
        for t, r in intros:
            known.setdefault(t, r)
        k = state_key(vs)
        if k not in seen:
            seen.add(k)
            queue.append(vs)

    push(entry_root(ctx))
    for m in program.methods:
        for vs, intros in method_roots(ctx, m):
            push(vs, intros)

    while queue:
        if rep.states >= max_states:
            rep.diagnostics.append(f"state limit {max_states} reached")
            break
        vs = queue.popleft()
        rep.states += 1
        if dump_states:
            rep.dumped.append(f"{site_str(site_of(vs))}  {vs.sigma.describe()}")
        entries = guard(ctx, vs)
        for e in entries:
            for t, r in e.intros:
                known.setdefault(t, r)
        site = site_of(vs)
        bucket = rep.sites.setdefault(site, [])
        for e in entries:
            checks, excl, diags = translate_entry(vs, e, known)
            rep.diagnostics += [f"{site_str(site)}: untranslatable check ({d})" for d in diags]
            bucket.append(SiteEntry(e, vs, checks, excl))
        if vs.at_exit():
            continue
        for sc in exec_step(ctx, vs):
            push(sc.vstate, sc.intros)
        if isinstance(vs.head(), A.While):
            for lv, intros in loop_roots(ctx, vs):
                push(lv, intros)

    # trivial `skip; s` sites say nothing; leave them out of the table
    rep.sites = {s: es for s, es in rep.sites.items() if s[2] != "skip"}
    for site, es in rep.sites.items():
        live = [se for se in es if ctx.solver.sat(se.entry.branch_pc) is not SatResult.UNSAT]
        if live and all(se.entry.failing for se in live):
            rep.failures.append(f"{site_str(site)}: static failure on every branch")
    rep.pruned = dict(ctx.stats.pruned)
    rep.unknown_bottoms = list(ctx.stats.unknown_bottoms)
    return rep
