"""Small text helpers shared by the reference backends."""

from __future__ import annotations

import re

# ~50 common English function words.
STOPWORDS = frozenset(
    """
    a an the and or but if of at by for with about to from in on into over
    under is am are was were be been being do does did have has had i me my
    you your he him his she her it its we our they them their this that these
    those as so not no than then there what which who whom whose when where
    why how can could will would shall should
    """.split()
)

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")
_LABEL_PREFIX = re.compile(r"^[A-Z][A-Za-z]*(?: [a-z]+)?:\s+")


def split_sentences(text: str) -> list[str]:
    """Split on line breaks and on whitespace following ``.``, ``!`` or ``?``.

    Returned sentences are stripped, non-empty substrings of ``text``.
    """
    out = []
    for line in text.splitlines():
        for piece in _SENTENCE_END.split(line):
            piece = piece.strip()
            if piece:
                out.append(piece)
    return out


def strip_label(sentence: str) -> str:
    """Drop leading ``Label:`` markers such as ``Q:``, ``A:`` or ``Key facts:``."""
    stripped = sentence
    while True:
        shorter = _LABEL_PREFIX.sub("", stripped, count=1)
        if shorter == stripped or not shorter:
            return stripped
        stripped = shorter


def is_word(token: str) -> bool:
    return any(ch.isalnum() for ch in token)
