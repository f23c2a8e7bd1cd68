"""Dynamic semantics: evaluation, assertion, footprints and stepping.

The free functions take the program first where predicate bodies matter.
"""
from __future__ import annotations

from .interp import FULL, GUARDED, DynState, Machine, RunOptions, initial_state, run
from .semantics import Semantics
from .values import NULL, NonTerminatingPredicate, Ref, Stuck

__all__ = [
    "FULL", "GUARDED", "DynState", "Machine", "RunOptions", "initial_state", "run", "Semantics",
    "NULL", "NonTerminatingPredicate", "Ref", "Stuck", "eval_expr", "framed", "assert_formula",
    "efoot", "foot", "vfoot", "check_runtime", "dyn_step",
]

_EMPTY = None


def _sem(program) -> Semantics:
    global _EMPTY
    if program is not None:
        return Semantics(program)
    if _EMPTY is None:
        from ..frontend import ast as A

        _EMPTY = Semantics(A.Program((), (), (), A.Skip()))
    return _EMPTY


def eval_expr(H, rho, e):
    return _sem(None).eval(H, rho, e)


def framed(H, alpha, rho, e) -> bool:
    return _sem(None).framed(H, alpha, rho, e)


def assert_formula(program, H, alpha, rho, phi) -> bool:
    return _sem(program).assert_formula(H, alpha, rho, phi)


def efoot(program, H, rho, phi) -> set:
    return _sem(program).efoot(H, rho, phi)


def foot(program, H, alpha, rho, phi) -> set:
    return _sem(program).foot(H, alpha, rho, phi)


def vfoot(program, V, H, perms) -> set:
    return _sem(program).vfoot(V, H, perms)


def check_runtime(program, V, H, alpha, r) -> bool:
    return _sem(program).check_runtime(V, H, alpha, r)


def dyn_step(program, g: DynState, excl=frozenset(), assertions: bool = True):
    """One step; returns (rule, state) or raises Stuck."""
    return Machine(program).step(g, excl, assertions)
