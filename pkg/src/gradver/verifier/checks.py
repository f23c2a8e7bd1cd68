"""Symbolic run-time checks."""
from __future__ import annotations

from dataclasses import dataclass

from ..symbolic import terms as T
from ..symbolic.heap import FieldPerm, PredPerm


@dataclass(frozen=True)
class CheckValue:
    term: object

    def __str__(self) -> str:
        return T.show(self.term)


@dataclass(frozen=True)
class CheckPerm:
    perm: object  # FieldPerm | PredPerm

    def __str__(self) -> str:
        return str(self.perm)


@dataclass(frozen=True)
class CheckSep:
    left: tuple
    right: tuple

    def __str__(self) -> str:
        a = ", ".join(str(p) for p in self.left)
        b = ", ".join(str(p) for p in self.right)
        return f"sep({{{a}}}, {{{b}}})"


@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "⊥"


BOTTOM = Bottom()


def is_perm(r) -> bool:
    return isinstance(r, CheckPerm)


def merge(*groups) -> tuple:
    """Ordered union of check (or permission) tuples."""
    out: list = []
    seen: set = set()
    for g in groups:
        for r in g:
            if r not in seen:
                seen.add(r)
                out.append(r)
    return tuple(out)


__all__ = ["CheckValue", "CheckPerm", "CheckSep", "Bottom", "BOTTOM", "FieldPerm",
           "PredPerm", "is_perm", "merge"]
