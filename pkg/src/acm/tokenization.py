"""Token counting backends.

Every budget decision in the engine is integer arithmetic over
``Tokenizer.count``.  The reference backend needs no model files: a token is a
maximal run of letters/digits, a short English clitic (``'s``, ``'t``,
``'ll`` ...), or a single punctuation character.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

from .registry import Registry


@dataclass(frozen=True)
class TokenizerSpec:
    name: str
    description: str


class Tokenizer(Protocol):
    spec: TokenizerSpec

    def tokenize(self, text: str) -> list[str]: ...

    def count(self, text: str) -> int: ...


_TOKEN_RE = re.compile(
    r"['’](?:s|t|re|ve|ll|d|m)(?![^\W\d_])"  # clitic
    r"|[^\W_]+"  # letters/digits
    r"|[^\w\s]|_",  # any other non-space character
    re.IGNORECASE,
)


class ReferenceTokenizer:
    spec = TokenizerSpec(
        name="reference-ws",
        description="whitespace split; alphanumeric runs, clitics and single punctuation marks",
    )

    def tokenize(self, text: str) -> list[str]:
        return _TOKEN_RE.findall(text)

    def count(self, text: str) -> int:
        return sum(1 for _ in _TOKEN_RE.finditer(text))


TOKENIZERS: Registry[Tokenizer] = Registry("tokenizer")
TOKENIZERS.register("reference-ws", ReferenceTokenizer)

_REFERENCE = ReferenceTokenizer()


def get_tokenizer(name: str = "reference-ws") -> Tokenizer:
    if name == "reference-ws":
        return _REFERENCE
    return TOKENIZERS.create(name)


def tokenize(text: str) -> list[str]:
    return _REFERENCE.tokenize(text)


def count_tokens(text: str) -> int:
    return _REFERENCE.count(text)
