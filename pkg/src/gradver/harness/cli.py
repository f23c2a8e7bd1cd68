"""gradver command line.

Exit status: 0 when clean, 2 when the run found something (a failed
verification, a stuck or failed execution, violations, fuzz flags) and 1
for usage, input or harness errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from ..frontend.parser import ParseError, parse_program
from ..frontend.wellformed import check_well_formed
from ..runtime import interp as I
from ..verifier.verify import verify
from . import CORPUS, corpus_text

OK, ERROR, FOUND = 0, 1, 2


class InputError(Exception):
    pass


def load(path: str):
    if os.path.exists(path):
        with open(path) as fh:
            text = fh.read()
    elif path in CORPUS:
        text = corpus_text(path)
    else:
        raise InputError(f"no such file: {path}")
    try:
        prog = parse_program(text)
    except ParseError as ex:
        raise InputError(f"{path}:{ex}") from None
    diags = check_well_formed(prog)
    if diags:
        raise InputError("\n".join(f"{path}:{d}" for d in diags))
    return prog


def emit(args, data: dict, lines) -> None:
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        for ln in lines:
            print(ln)


def cmd_verify(args) -> int:
    rep = verify(load(args.file), prune=not args.no_prune, dump_states=args.dump_states)
    lines = list(rep.dumped) if args.dump_states else []
    for site, es in rep.sites.items():
        for se in es:
            if se.checks or se.exclusion:
                name = f"{site[0]}:exit" if site[1] == "exit" else f"{site[0]}@{site[1]} {site[2]}"
                lines.append(f"{name}: check {', '.join(map(str, se.checks)) or '-'}"
                             f"  exclude {', '.join(map(str, se.exclusion)) or '-'}")
    lines += [f"failure: {f}" for f in rep.failures]
    lines += [f"note: {d}" for d in rep.diagnostics]
    lines.append(f"{'verified' if rep.verified else 'not verified'}: {rep.check_count()} checks, "
                 f"{rep.exclusion_count()} exclusions, {rep.states} states, "
                 f"pruned {sum(rep.pruned.values())}")
    data = rep.to_json()
    if args.dump_states:
        data["states_dump"] = rep.dumped
    emit(args, data, lines)
    return OK if rep.verified else FOUND


def cmd_run(args) -> int:
    prog = load(args.file)
    mode = I.GUARDED if args.mode == "guarded" else I.FULL
    rep = verify(prog) if mode == I.GUARDED else None
    if rep is not None and not rep.verified:
        print("not verified; guarded execution needs a verified program", file=sys.stderr)
        return ERROR
    res = I.run(prog, I.RunOptions(mode=mode, exclusion_frames=not args.no_exclusion_frames,
                                   trace=args.trace), rep)
    o = res.outcome
    data = {"outcome": o.describe(), "steps": o.steps, "checks_evaluated": o.checks_evaluated,
            "perm_checks_evaluated": o.perm_checks_evaluated, "notes": res.notes}
    if args.trace:
        data["trace"] = res.trace
    emit(args, data, (res.trace if args.trace else []) + [f"note: {n}" for n in res.notes]
         + [f"{o.describe()} ({o.steps} steps, {o.checks_evaluated} checks evaluated)"])
    if isinstance(o, I.HarnessError):
        return ERROR
    return OK if isinstance(o, I.Completed) else FOUND


def cmd_coexec(args) -> int:
    from .coexec import coexecute

    prog = load(args.file)
    rep = coexecute(prog, exclusion_frames=not args.no_exclusion_frames)
    lines = [str(v) for v in rep.violations] + [f"error: {e}" for e in rep.errors]
    lines.append(f"{rep.outcome.describe()}; {rep.steps} steps, "
                 f"{len(rep.violations)} violations")
    emit(args, rep.to_json(), lines)
    if rep.errors:
        return ERROR
    return FOUND if rep.violations else OK


def cmd_fuzz(args) -> int:
    from .fuzz import FuzzConfig, fuzz

    cfg = FuzzConfig(seed=args.seed, count=args.count, imprecision=args.imprecision,
                     jobs=args.jobs, shrink=not args.no_shrink)
    rep = fuzz(cfg)
    s = rep.summary()
    lines = [f"{k}: {v}" for k, v in s.items()]
    for c in rep.flagged:
        lines.append(f"case {c.index}: {', '.join(c.flags)}; guarded {c.guarded}; full {c.full}")
        lines += [f"  {v}" for v in c.violations]
        if c.shrunk:
            lines.append("  reproducer:")
            lines += [f"    {ln}" for ln in c.shrunk.splitlines()]
    if args.report_dir:
        from .plots import write_report

        lines += [f"wrote {p}" for p in write_report(rep, args.report_dir)]
    emit(args, rep.to_json(), lines)
    return FOUND if rep.flagged else OK


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradver", description="Gradual verifier and its testers")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="symbolically verify a program")
    p.add_argument("file")
    p.add_argument("--dump-states", action="store_true")
    p.add_argument("--no-prune", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="execute a program")
    p.add_argument("file")
    p.add_argument("--mode", choices=("full", "guarded"), default="full")
    p.add_argument("--no-exclusion-frames", action="store_true")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("coexec", help="co-execute verifier states with a run")
    p.add_argument("file")
    p.add_argument("--no-exclusion-frames", action="store_true")
    p.set_defaults(func=cmd_coexec)

    p = sub.add_parser("fuzz", help="differential fuzzing over random programs")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--imprecision", type=float, default=0.3)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-shrink", action="store_true")
    p.add_argument("--report-dir")
    p.set_defaults(func=cmd_fuzz)

    for sp in sub.choices.values():
        sp.add_argument("--json", action="store_true")
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as ex:
        print(ex, file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
