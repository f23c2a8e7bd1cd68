from __future__ import annotations

import json
import random

import pytest

from gradver.frontend import ast as A
from gradver.frontend.parser import parse_program
from gradver.frontend.printer import print_program
from gradver.frontend.wellformed import check_well_formed
from gradver.harness import CORPUS, load_corpus
from gradver.harness.cli import ERROR, FOUND, OK, main
from gradver.harness.coexec import coexecute
from gradver.harness.fuzz import FuzzConfig, fuzz, run_case, shrink
from gradver.harness.gen import GenBounds, generate
from gradver.verifier.verify import verify

STRAIGHT = """
struct Cell { int value; }
int main() {
  c = alloc(Cell);
  c.value = 4;
  x = c.value + 1;
  result = x;
}
"""


# --- co-execution ---------------------------------------------------------------------


@pytest.mark.parametrize("name", ["append", "gradual_append", "exclusion_fixed", "loop"])
def test_corpus_coexec_clean(name):
    rep = coexecute(load_corpus(name))
    assert rep.clean, [str(v) for v in rep.violations] + rep.errors
    assert rep.outcome.describe().startswith("completed")


def test_straight_line_clean():
    rep = coexecute(parse_program(STRAIGHT))
    assert rep.clean
    assert rep.outcome.describe() == "completed result=5"


def test_exclusion_returning_breaks_correspondence():
    rep = coexecute(load_corpus("exclusion_returning"), exclusion_frames=False)
    assert rep.outcome.describe() == "completed result=1"
    # the store and heap stop modelling the run once set writes c.value
    assert {"store", "precise-heap", "partial-validity"} <= rep.relations()
    assert any("<value," in v.detail and "heap holds 1" in v.detail for v in rep.violations)


def test_exclusion_unsound_with_exclusion_frames_stops_in_set():
    rep = coexecute(load_corpus("exclusion_unsound"))
    assert rep.outcome.describe().startswith("check failed at set@9:3 assignfield")
    assert rep.clean


def test_coexec_json():
    data = coexecute(load_corpus("gradual_append")).to_json()
    assert data["violations"] == [] and data["steps"] > 0


# --- generator -------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_generated_programs_well_formed(seed):
    p, _ = generate(random.Random(seed), GenBounds())
    assert check_well_formed(p) == []
    assert len(p.methods) <= 3 and len(p.predicates) <= 2
    assert all(len(s.fields) <= 3 for s in p.structs)


def test_generator_deterministic():
    a, _ = generate(random.Random("1:7"), GenBounds())
    b, _ = generate(random.Random("1:7"), GenBounds())
    assert print_program(a) == print_program(b)


def test_precise_generation_has_no_imprecision():
    for seed in range(30):
        text = print_program(generate(random.Random(seed), GenBounds(imprecision=0.0))[0])
        assert "?" not in text


# --- fuzzing ------------------------------------------------------------------------------


def test_fuzz_deterministic():
    cfg = FuzzConfig(seed=3, count=25, shrink=False)
    assert json.dumps(fuzz(cfg).to_json()) == json.dumps(fuzz(cfg).to_json())


def test_fuzz_parallel_matches_serial():
    serial = fuzz(FuzzConfig(seed=4, count=24, shrink=False))
    par = fuzz(FuzzConfig(seed=4, count=24, shrink=False, jobs=2))
    assert serial.to_json()["summary"] == par.to_json()["summary"]
    assert [c.guarded for c in serial.cases] == [c.guarded for c in par.cases]


def test_fuzz_seed1_clean():
    rep = fuzz(FuzzConfig(seed=1, count=100))
    s = rep.summary()
    assert s["soundness_flags"] == 0 and s["coexec_flags"] == 0 and s["harness_flags"] == 0
    assert s["verified"] > 30


def test_fuzz_precise_no_perm_checks():
    rep = fuzz(FuzzConfig(seed=2, count=60, imprecision=0.0))
    s = rep.summary()
    assert s["guarded_perm_checks_evaluated"] == 0 and s["non_bottom_checks"] == 0
    assert s["outcome_mismatches"] == 0


def test_run_case_records_stats():
    c = run_case(FuzzConfig(seed=1), 0)
    assert c.states > 0
    if c.verified:
        assert c.guarded and c.full


def test_shrink_to_minimal_reproducer():
    p = parse_program("""
int main() {
  a = 1;
  b = 2;
  d = a + b;
  if (a < b) { c = 3; e = d; assert c == 4; } else { d = 0; }
  result = 0;
}
""")

    def has_failing_assert(q):
        return any("assert" in f for f in verify(q).failures)

    small = shrink(p, has_failing_assert)
    assert has_failing_assert(small)
    text = print_program(small)
    assert "d = " not in text and "e = " not in text and "assert c == 4" in text
    assert check_well_formed(small) == []


def test_shrink_keeps_program_when_nothing_fails():
    p = load_corpus("append")
    assert shrink(p, lambda q: False) == p


# --- command line -----------------------------------------------------------------------


def test_cli_verify_ok(capsys):
    assert main(["verify", "append"]) == OK
    assert "verified: 0 checks, 0 exclusions" in capsys.readouterr().out


def test_cli_verify_json(capsys):
    assert main(["verify", "gradual_append", "--json"]) == OK
    data = json.loads(capsys.readouterr().out)
    assert data["verified"] and data["stats"]["states"] > 0
    assert {"pos", "branch_pc", "checks", "exclusion"} <= set(data["sites"][0])


def test_cli_verify_failure(tmp_path):
    f = tmp_path / "bad.gvl"
    f.write_text("int main() { assert false; result = 0; }")
    assert main(["verify", str(f)]) == FOUND


def test_cli_parse_error(tmp_path, capsys):
    f = tmp_path / "bad.gvl"
    f.write_text("int main() { result = ; }")
    assert main(["verify", str(f)]) == ERROR
    assert "1:" in capsys.readouterr().err


def test_cli_ill_formed(tmp_path, capsys):
    f = tmp_path / "bad.gvl"
    f.write_text("int main() { x = y; result = 0; }")
    assert main(["verify", str(f)]) == ERROR
    assert "[initialized]" in capsys.readouterr().err


def test_cli_missing_file():
    assert main(["run", "/nonexistent.gvl"]) == ERROR


def test_cli_run_modes(capsys):
    assert main(["run", "append"]) == OK
    assert main(["run", "exclusion_unsound", "--mode", "guarded"]) == FOUND
    assert "check failed at set@9:3" in capsys.readouterr().out


def test_cli_run_trace(capsys):
    assert main(["run", "append", "--trace"]) == OK
    assert capsys.readouterr().out.splitlines()[0].startswith("<ExecCallEnter, main@34:3 call")


def test_cli_guarded_needs_verified(tmp_path):
    f = tmp_path / "bad.gvl"
    f.write_text("int main() { assert false; result = 0; }")
    assert main(["run", str(f), "--mode", "guarded"]) == ERROR


def test_cli_coexec(capsys):
    assert main(["coexec", "gradual_append"]) == OK
    assert main(["coexec", "exclusion_returning", "--no-exclusion-frames"]) == FOUND


def test_cli_fuzz(tmp_path, capsys):
    assert main(["fuzz", "--seed", "1", "--count", "10", "--report-dir", str(tmp_path)]) == OK
    out = capsys.readouterr().out
    assert "programs: 10" in out
    assert (tmp_path / "fuzz.csv").exists() and (tmp_path / "fuzz.png").exists()
    rows = (tmp_path / "fuzz.csv").read_text().splitlines()
    assert len(rows) == 11


def test_corpus_names():
    assert set(CORPUS) == {"append", "gradual_append", "exclusion_unsound", "exclusion_returning",
                           "exclusion_fixed", "loop"}
    assert isinstance(load_corpus("loop").entry, A.Seq)
