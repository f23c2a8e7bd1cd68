"""Concrete values and the stuck outcome."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Ref:
    """Object reference; ids come from the interpreter's allocator."""

    ident: int

    def __repr__(self) -> str:
        return f"l{self.ident}"


NULL = None


class Stuck(Exception):
    """A premise of a dynamic rule does not hold."""

    def __init__(self, rule: str, reason: str):
        super().__init__(f"{rule}: {reason}")
        self.rule = rule
        self.reason = reason


class NonTerminatingPredicate(Stuck):
    """Equirecursive unrolling revisited the same predicate instance."""

    def __init__(self, pred: str, args: tuple):
        super().__init__("AssertPredicate", f"non-terminating unrolling of {pred}{args}")
        self.pred = pred
        self.args = args


def default_value(ty: str):
    if ty == "int":
        return 0
    if ty == "bool":
        return False
    if ty == "char":
        return "\0"
    return NULL


def same(x, y) -> bool:
    if isinstance(x, bool) != isinstance(y, bool):
        return False
    return x == y


def show_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, (str, Ref)) else str(v)
