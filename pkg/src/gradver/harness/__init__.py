"""Command line, co-execution tester, fuzzer and the example corpus."""
from __future__ import annotations

from importlib import resources

CORPUS = {
    "append": "append.gvl",
    "gradual_append": "gradual_append.gvl",
    "exclusion_unsound": "exclusion_unsound.gvl",
    "exclusion_returning": "exclusion_returning.gvl",
    "exclusion_fixed": "exclusion_fixed.gvl",
    "loop": "loop.gvl",
}


def corpus_text(name: str) -> str:
    """Source of a corpus program, by short name or file name."""
    fname = CORPUS.get(name, name)
    return resources.files(__package__).joinpath("corpus", fname).read_text()


def load_corpus(name: str):
    from ..frontend.parser import parse_program

    return parse_program(corpus_text(name))
