"""Entity-zone backends: identify, extract and integrate key entities.

The reference recognizer is rule based:

* date shapes (``March 3, 1990``, ``3 March 1990``, ``1990-03-03``,
  ``3/3/1990``, four-digit years, month names) -> ``date``
* bare numbers -> ``other``
* maximal runs of capitalized words -> ``other``; a sentence-initial word is
  skipped when it is a common function word or sentence opener

Spans separated only by whitespace are merged into one item, so any two
items of a text are separated by at least one token.  That keeps a rendered
entity segment no longer than the turn it replaces.
"""

from __future__ import annotations

import re
from dataclasses import replace
from typing import Iterable, Protocol, Sequence

from .core import BackendError, EntityItem, Turn, ValidationError, ZoneState
from .registry import Registry
from .text import STOPWORDS
from .tokenization import Tokenizer, get_tokenizer

DEFAULT_LABEL = "Key facts:"

_MONTHS = (
    "January|February|March|April|May|June|July|August|September|October|"
    "November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec"
)
_B = r"(?<![^\W_])"  # not preceded by a letter/digit
_E = r"(?![^\W_])"  # not followed by a letter/digit
_DAY = r"\d{1,2}(?:st|nd|rd|th)?"
_YEAR = r"(?:1\d|20)\d{2}"

_DATE_RE = re.compile(
    _B + "(?:"
    rf"(?:{_MONTHS}) {_DAY}(?:,? \d{{4}})?"
    rf"|{_DAY} (?:of )?(?:{_MONTHS})(?:,? \d{{4}})?"
    rf"|(?:{_MONTHS}),? \d{{4}}"
    r"|\d{4}-\d{1,2}-\d{1,2}"
    r"|\d{1,2}/\d{1,2}/\d{2,4}"
    rf"|{_YEAR}s?"
    rf"|(?:{_MONTHS})"
    ")" + _E
)
_NUMBER_RE = re.compile(_B + r"\d+(?:[.,]\d+)*" + _E)
_WORD_RE = re.compile(_B + r"[^\W\d_](?:[\w'’-]*[^\W_])?")
_SENTENCE_RE = re.compile(r"(?:[^\n.!?]|[.!?](?=[^\s.!?]))*(?:[.!?]+|\n|$)")
_POSSESSIVE_RE = re.compile(r"['’]s$")

SENTENCE_OPENERS = STOPWORDS | frozenset(
    """
    please yes ok okay well also now here thanks thank hi hello hey sure
    maybe perhaps let tell after before because while since although though
    today yesterday tomorrow one some many most all every each another other
    such oh great good right may might must just only even still yet however
    finally first next last later soon again once did does let's it's that's
    """.split()
)


class EntityExtractor(Protocol):
    def identify(self, text: str, source_turn: int) -> list[EntityItem]: ...


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    for m in _SENTENCE_RE.finditer(text):
        if m.group().strip():
            spans.append((m.start(), m.end()))
    return spans


def _capitalized_runs(text: str, start: int, end: int, taken: list[tuple[int, int]]):
    """Yield (start, end) of capitalized-word runs inside text[start:end]."""
    words = [
        w for w in _WORD_RE.finditer(text, start, end)
        if not any(a <= w.start() < b for a, b in taken)
    ]
    first_word_start = words[0].start() if words else None
    if words and text[start:first_word_start].strip(" \t\"'“‘([") != "":
        first_word_start = None  # sentence opens with something else

    run: list[re.Match] = []

    def flush():
        if not run:
            return None
        pieces = list(run)
        if pieces[0].start() == first_word_start:
            while pieces and pieces[0].group().lower() in SENTENCE_OPENERS:
                pieces.pop(0)
        if len(pieces) == 1 and pieces[0].group().lower() in STOPWORDS:
            return None
        if not pieces:
            return None
        a, b = pieces[0].start(), pieces[-1].end()
        tail = _POSSESSIVE_RE.search(text, a, b)
        if tail and tail.end() == b:
            b = tail.start()
        return (a, b)

    for w in words:
        if not w.group()[0].isupper():
            span = flush()
            if span:
                yield span
            run = []
            continue
        if run and text[run[-1].end():w.start()] != " ":
            span = flush()
            if span:
                yield span
            run = []
        run.append(w)
    span = flush()
    if span:
        yield span


class RuleBasedExtractor:
    def identify(self, text: str, source_turn: int) -> list[EntityItem]:
        spans: list[tuple[int, int, str]] = []
        for s_start, s_end in _sentence_spans(text):
            taken: list[tuple[int, int]] = []
            for m in _DATE_RE.finditer(text, s_start, s_end):
                spans.append((m.start(), m.end(), "date"))
                taken.append(m.span())
            for m in _NUMBER_RE.finditer(text, s_start, s_end):
                if not any(a < m.end() and m.start() < b for a, b in taken):
                    spans.append((m.start(), m.end(), "other"))
                    taken.append(m.span())
            for a, b in _capitalized_runs(text, s_start, s_end, taken):
                spans.append((a, b, "other"))
        spans.sort()

        merged: list[list] = []
        for a, b, cat in spans:
            if merged and not text[merged[-1][1]:a].strip(" \t"):
                prev = merged[-1]
                prev[1] = max(prev[1], b)
                if prev[2] != cat:
                    prev[2] = "other"
            else:
                merged.append([a, b, cat])

        items: list[EntityItem] = []
        seen = set()
        for a, b, cat in merged:
            item = EntityItem(surface=text[a:b], category=cat, source_turn=source_turn)
            if item.key not in seen:
                seen.add(item.key)
                items.append(item)
        return items


_SPACY_LABELS = {
    "person": "person", "per": "person",
    "org": "organization", "organization": "organization", "norp": "organization",
    "gpe": "location", "loc": "location", "location": "location", "fac": "location",
    "date": "date", "time": "date",
}


class RemoteExtractor:
    """Entity extractor served over HTTP: ``{"text"} -> {"entities": [...]}``.

    spaCy-style labels (``PERSON``, ``ORG``, ``GPE``, ``DATE`` ...) are mapped
    onto the five categories; anything unrecognized becomes ``other``.
    """

    def __init__(self, client):
        self.client = client

    def identify(self, text: str, source_turn: int) -> list[EntityItem]:
        data = self.client.post_json({"text": text})
        raw = data.get("entities")
        if not isinstance(raw, list):
            raise BackendError(f"extractor response lacks an 'entities' list: {data!r}")
        items, seen = [], set()
        for entry in raw:
            try:
                surface = str(entry["surface"]).strip()
                label = str(entry.get("category", "other")).lower()
            except (TypeError, KeyError) as exc:
                raise BackendError(f"malformed entity entry {entry!r}", cause=exc) from exc
            if not surface:
                continue
            item = EntityItem(surface, _SPACY_LABELS.get(label, "other"), source_turn)
            if item.key not in seen:
                seen.add(item.key)
                items.append(item)
        return items


EXTRACTORS: Registry[EntityExtractor] = Registry("entity_extractor")
EXTRACTORS.register("reference-rules", RuleBasedExtractor)


@EXTRACTORS.register("remote-http")
def _remote_extractor(endpoint=None, timeout_s=30.0, retries=3, max_inflight=4):
    from .http import JsonHttpClient

    if not endpoint:
        raise ValidationError("entity_extractor.endpoint is required for remote-http")
    return RemoteExtractor(JsonHttpClient(endpoint, timeout_s=timeout_s, retries=retries,
                                          max_inflight=max_inflight))


def identify_entities(text: str, source_turn: int) -> list[EntityItem]:
    return RuleBasedExtractor().identify(text, source_turn)


def turn_text(turn: Turn) -> str:
    """Question and answer on one line each (internal whitespace collapsed)."""
    return " ".join(turn.question.split()) + "\n" + " ".join(turn.answer.split())


def extract_from_turns(extractor: EntityExtractor, turns: Sequence[Turn]) -> list[EntityItem]:
    items: list[EntityItem] = []
    for t in turns:
        items.extend(extractor.identify(turn_text(t), t.index))
    return items


def integrate_entities(zone: ZoneState, new_items: Iterable[EntityItem], demoted: int) -> ZoneState:
    """Fold ``new_items`` into the entity zone and move its boundary ``demoted`` turns on."""
    if demoted < 0:
        raise ValidationError("demoted turn count must be non-negative")
    boundary = zone.entity_boundary + demoted
    if boundary > zone.summary_boundary:
        raise ValidationError(
            f"entity boundary {boundary} would pass summary boundary {zone.summary_boundary}"
        )
    items = list(zone.entity_items)
    seen = {it.key for it in items}
    for it in new_items:
        if it.source_turn >= boundary:
            raise ValidationError(
                f"entity {it.surface!r} comes from turn {it.source_turn}, which is not "
                f"below the new entity boundary {boundary}"
            )
        if it.key in seen:
            continue
        seen.add(it.key)
        items.append(it)
    return replace(zone, entity_boundary=boundary, entity_items=tuple(items))


def render_entity_segment(items: Sequence[EntityItem], label: str = DEFAULT_LABEL) -> str:
    if not items:
        return ""
    body = "; ".join(it.surface for it in items)
    return f"{label} {body}" if label else body


def evict_oldest(
    items: Sequence[EntityItem],
    max_tokens: int,
    tokenizer: Tokenizer | None = None,
    label: str = DEFAULT_LABEL,
) -> tuple[EntityItem, ...]:
    """Drop items from the front until the rendered segment fits ``max_tokens``."""
    tokenizer = tokenizer or get_tokenizer()
    items = list(items)
    while items and tokenizer.count(render_entity_segment(items, label)) > max_tokens:
        items.pop(0)
    return tuple(items)
