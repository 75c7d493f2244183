"""Summary-zone backends.

The reference backend is a frequency-scored extractive summarizer: it never
invents text, it only picks whole sentences (or, as a last resort, a token
prefix of the single best sentence) from its input.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Protocol, Sequence

from .core import BackendError, Turn, ValidationError
from .registry import Registry
from .text import STOPWORDS, is_word, split_sentences
from .tokenization import Tokenizer, get_tokenizer

# turn markers produced by render_turns_for_summary
_MARKERS = frozenset({"q", "a"})


@dataclass(frozen=True)
class SummaryRequest:
    prior_summary: str
    demoted_turns: tuple[Turn, ...]
    max_tokens: int

    def __post_init__(self):
        object.__setattr__(self, "demoted_turns", tuple(self.demoted_turns))
        if self.max_tokens <= 0:
            raise ValidationError("summary max_tokens must be positive")
        if not self.demoted_turns:
            raise ValidationError("summary request needs at least one demoted turn")

    def source_text(self) -> str:
        """The uncapped text the summary is drawn from."""
        rendered = render_turns_for_summary(self.demoted_turns)
        if self.prior_summary.strip():
            return self.prior_summary.strip() + "\n" + rendered
        return rendered


class Summarizer(Protocol):
    def summarize(self, request: SummaryRequest) -> str: ...


def render_turns_for_summary(turns: Sequence[Turn]) -> str:
    if not turns:
        raise ValidationError("no turns to render")
    return "\n".join(f"Q: {t.question} A: {t.answer}" for t in turns)


def truncate_to_tokens(text: str, max_tokens: int, tokenizer: Tokenizer) -> str:
    """First ``max_tokens`` tokens of ``text``, space-joined."""
    tokens = tokenizer.tokenize(text)[:max_tokens]
    out = " ".join(tokens)
    # non-reference tokenizers may not round-trip through a space join
    while tokens and tokenizer.count(out) > max_tokens:
        tokens = tokens[:-1]
        out = " ".join(tokens)
    return out


class ExtractiveSummarizer:
    def __init__(self, tokenizer: Tokenizer | None = None):
        self.tokenizer = tokenizer or get_tokenizer()

    def score_sentences(self, sentences: list[str]) -> list[float]:
        tok = self.tokenizer
        token_lists = [[t.lower() for t in tok.tokenize(s)] for s in sentences]
        freq = Counter(
            t
            for tokens in token_lists
            for t in tokens
            if is_word(t) and t not in STOPWORDS and t not in _MARKERS
        )
        if not freq:
            return [0.0] * len(sentences)
        top = max(freq.values())
        scores = []
        for tokens in token_lists:
            if not tokens:
                scores.append(0.0)
                continue
            total = sum(freq[t] / top for t in tokens if t in freq)
            scores.append(total / len(tokens))
        return scores

    def select(self, sentences: list[str], max_tokens: int) -> list[int]:
        """Indices of the chosen sentences, in original order."""
        scores = self.score_sentences(sentences)
        ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
        chosen: list[int] = []
        for i in ranked:
            candidate = sorted(chosen + [i])
            text = " ".join(sentences[j] for j in candidate)
            if self.tokenizer.count(text) > max_tokens:
                break
            chosen = candidate
        return chosen

    def summarize(self, request: SummaryRequest) -> str:
        sentences = split_sentences(request.source_text())
        chosen = self.select(sentences, request.max_tokens)
        if not chosen:
            best = self.select_best(sentences)
            return truncate_to_tokens(sentences[best], request.max_tokens, self.tokenizer)
        return " ".join(sentences[i] for i in chosen)

    def select_best(self, sentences: list[str]) -> int:
        scores = self.score_sentences(sentences)
        return min(range(len(sentences)), key=lambda i: (-scores[i], i))


class RemoteSummarizer:
    """Summarizer served over HTTP: ``{"text", "max_tokens"} -> {"summary"}``.

    Output is clipped to the cap locally so the engine's budget holds even
    if the server overshoots.
    """

    def __init__(self, client, tokenizer: Tokenizer | None = None):
        self.client = client
        self.tokenizer = tokenizer or get_tokenizer()

    def summarize(self, request: SummaryRequest) -> str:
        payload = {"text": request.source_text(), "max_tokens": request.max_tokens}
        data = self.client.post_json(payload)
        summary = data.get("summary")
        if not isinstance(summary, str):
            raise BackendError(f"summarizer response lacks a 'summary' string: {data!r}")
        if self.tokenizer.count(summary) > request.max_tokens:
            summary = truncate_to_tokens(summary, request.max_tokens, self.tokenizer)
        return summary


SUMMARIZERS: Registry[Summarizer] = Registry("summarizer")
SUMMARIZERS.register("reference-extractive", ExtractiveSummarizer)


@SUMMARIZERS.register("remote-http")
def _remote_summarizer(tokenizer=None, endpoint=None, timeout_s=30.0, retries=3, max_inflight=4):
    from .http import JsonHttpClient

    if not endpoint:
        raise ValidationError("summarizer.endpoint is required for remote-http")
    client = JsonHttpClient(endpoint, timeout_s=timeout_s, retries=retries, max_inflight=max_inflight)
    return RemoteSummarizer(client, tokenizer=tokenizer)


def summarize(request: SummaryRequest) -> str:
    return ExtractiveSummarizer().summarize(request)
