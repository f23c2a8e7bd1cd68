"""Acceptance criteria 1 to 7, one test each, each printing a PASS/FAIL line."""
from __future__ import annotations

import random
import time

from gradver.harness import load_corpus
from gradver.harness.coexec import coexecute
from gradver.harness.fuzz import FuzzConfig, fuzz
from gradver.runtime import FULL, GUARDED, RunOptions, run
from gradver.runtime.interp import CheckFailed, Completed, StuckOutcome
from gradver.symbolic.solver import Entailment, Solver
from gradver.verifier.verify import verify

from oracles import random_bool_term, valid_implication
from runtime_cases import (SEM, _assert, _program, disjoint_frames, no_excl_outcome,
                           program_has_folds, random_spec, random_state, step_states,
                           strip_program, superset)


def report(capsys, n: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


# --- 1: precise verification -------------------------------------------------------------


def test_criterion_1_precise_append(capsys):
    p = load_corpus("append")
    t0 = time.perf_counter()
    rep = verify(p)
    dt = time.perf_counter() - t0
    fold_pruned = {k: n for k, n in rep.pruned.items() if k.endswith(" fold")}
    ok = (rep.verified and rep.check_count() == 0 and rep.exclusion_count() == 0
          and rep.pruned.get("append@24:3 if") == 2 and sum(fold_pruned.values()) > 0 and dt < 1.0)
    report(capsys, 1, ok, f"checks={rep.check_count()} exclusions={rep.exclusion_count()} "
                          f"pruned={rep.pruned} time={dt:.3f}s")


# --- 2: gradual checks ----------------------------------------------------------------------


def test_criterion_2_gradual_append_checks(capsys):
    rep = verify(load_corpus("gradual_append"))
    got = {site: set(cs) for site, cs in rep.all_checks().items() if cs}
    want = {
        "append@22:3 if": {"acc(l.next)"},
        "append@26:3 assignfield": {"acc(l.next)"},
        "append:exit": {"acyclic(result)"},
    }
    # the assignment check lives on one branch only; the exit check on both
    assign = sorted(len(se.checks) for se in rep.sites[("append", "26:3", "assignfield")])
    exits = [len(se.checks) for se in rep.sites[("append", "exit", "exit")]]
    no_sep = not any(c.startswith("sep(") for cs in got.values() for c in cs)
    ok = rep.verified and got == want and assign == [0, 1] and exits == [1, 1] and no_sep
    report(capsys, 2, ok, f"checks={got} assign-branches={assign} exit-branches={exits}")


# --- 3: unsoundness reproduction -----------------------------------------------------------


def test_criterion_3a_exclusion_unsound_default_stops_in_set(capsys):
    p = load_corpus("exclusion_unsound")
    g = run(p, RunOptions(mode=GUARDED), verify(p)).outcome
    ok = (isinstance(g, (CheckFailed, StuckOutcome)) and g.site == "set@9:3 assignfield"
          and (not isinstance(g, CheckFailed) or str(g.check) == "acc(c.value)"))
    report(capsys, 3, ok, f"(a) guarded: {g.describe()}")


def test_criterion_3b_no_exclusion_frames(capsys):
    p = load_corpus("exclusion_returning")
    opts = dict(exclusion_frames=False)
    g = run(p, RunOptions(mode=GUARDED, **opts), verify(p)).outcome
    f = run(p, RunOptions(mode=FULL, **opts)).outcome
    co = coexecute(p, exclusion_frames=False)
    ok = (isinstance(g, Completed) and g.result == 1
          and isinstance(f, StuckOutcome) and f.site == "test:exit" and f.rule == "ExecCallExit"
          and "postcondition" in f.reason and bool(co.violations))
    report(capsys, 3, ok, f"(b) guarded: {g.describe()}; full: {f.describe()}; "
                          f"coexec relations violated: {sorted(co.relations())}")


# --- 4: soundness at desk scale --------------------------------------------------------------


def test_criterion_4_corpus_and_fuzz(capsys):
    t0 = time.perf_counter()
    corpus = {n: coexecute(load_corpus(n)) for n in ("append", "gradual_append", "exclusion_fixed", "loop")}
    dirty = [n for n, r in corpus.items() if not r.clean]
    s = fuzz(FuzzConfig(seed=1, count=500, shrink=False)).summary()
    dt = time.perf_counter() - t0
    ok = (not dirty and s["programs"] >= 500 and s["soundness_flags"] == 0
          and s["coexec_flags"] == 0 and s["harness_flags"] == 0 and dt < 300)
    report(capsys, 4, ok, f"corpus violations in {dirty or 'none'}; fuzz seed 1: "
                          f"{s['programs']} programs, {s['verified']} verified, "
                          f"soundness={s['soundness_flags']} coexec={s['coexec_flags']} "
                          f"harness={s['harness_flags']}; time={dt:.1f}s")


# --- 5: entailment soundness ----------------------------------------------------------------


def test_criterion_5_entailment_oracle(capsys):
    rng = random.Random(5)
    solver = Solver()
    cases, proved, bad = 10_000, 0, 0
    for _ in range(cases):
        g, t = random_bool_term(rng, 3), random_bool_term(rng, 3)
        if solver.implies([g], t) is Entailment.PROVED:
            proved += 1
            bad += not valid_implication(g, t)
    report(capsys, 5, bad == 0, f"{cases} cases, {proved} proved, {bad} invalid")


# --- 6: conservative extension ---------------------------------------------------------------


def test_criterion_6_precise_programs(capsys):
    rep = fuzz(FuzzConfig(seed=1, count=200, imprecision=0.0, shrink=False))
    s = rep.summary()
    non_bottom = s["non_bottom_checks"]
    ok = (s["programs"] >= 200 and non_bottom == 0 and s["outcome_mismatches"] == 0
          and s["guarded_perm_checks_evaluated"] == 0)
    report(capsys, 6, ok, f"{s['programs']} programs, {s['verified']} verified, "
                          f"non-bottom checks={non_bottom}, outcome mismatches={s['outcome_mismatches']}")


# --- 7: runtime-semantics properties -------------------------------------------------------


NEED = 1000
CAP = 20_000


def _spec_cases(seed0: int):
    """(H, alpha, rho, phi, rng) with phi asserted by (H, alpha, rho)."""
    for seed in range(seed0, seed0 + CAP):
        rng = random.Random(seed)
        H, alpha, rho = random_state(rng)
        phi = random_spec(rng)
        if _assert(H, alpha, rho, phi):
            yield H, alpha, rho, phi, rng


def _monotone():
    n = bad = 0
    for H, alpha, rho, phi, rng in _spec_cases(100_000):
        bad += not _assert(H, superset(rng, H, alpha), rho, phi)
        n += 1
        if n >= NEED:
            break
    return n, bad


def _efoot():
    n = bad = 0
    for H, alpha, rho, phi, _ in _spec_cases(200_000):
        bad += not SEM.efoot(H, rho, phi) <= alpha
        n += 1
        if n >= NEED:
            break
    return n, bad


def _foot():
    n = bad = 0
    for H, alpha, rho, phi, _ in _spec_cases(300_000):
        ft = SEM.foot(H, alpha, rho, phi)
        bad += not (SEM.efoot(H, rho, phi) <= ft <= alpha and _assert(H, frozenset(ft), rho, phi))
        n += 1
        if n >= NEED:
            break
    return n, bad


def _fold_noop():
    n = bad = 0
    for seed in range(400_000, 400_000 + CAP):
        p = _program(seed)
        if not program_has_folds(p):
            continue
        bad += no_excl_outcome(p) != no_excl_outcome(strip_program(p))
        n += 1
        if n >= NEED:
            break
    return n, bad


def _frames():
    n = bad = 0
    for seed in range(500_000, 500_000 + CAP):
        states = step_states(_program(seed), random.Random(seed))
        if len(states) < 2:
            continue
        ok = disjoint_frames(states[0])
        for before, after in states[1:]:
            written = {k for k in after.heap if k in before.heap and after.heap[k] != before.heap[k]}
            ok = ok and disjoint_frames(after) and written <= before.top.alpha
        bad += not ok
        n += 1
        if n >= NEED:
            break
    return n, bad


def test_criterion_7_runtime_properties(capsys):
    results = {
        "assert-monotonicity": _monotone(),
        "efoot within alpha": _efoot(),
        "efoot within foot": _foot(),
        "fold/unfold no-op": _fold_noop(),
        "frame disjointness": _frames(),
    }
    ok = all(n >= NEED and bad == 0 for n, bad in results.values())
    detail = "; ".join(f"{k}: {n} cases, {bad} failures" for k, (n, bad) in results.items())
    report(capsys, 7, ok, detail)
