"""Question-answering backends that consume assembled contexts."""

from __future__ import annotations

from .core import BackendError, ValidationError
from .registry import Registry
from .text import STOPWORDS, is_word, split_sentences, strip_label
from .tokenization import tokenize

NO_ANSWER = "unknown"


def content_tokens(text: str) -> set[str]:
    return {t for t in (tok.lower() for tok in tokenize(text)) if is_word(t) and t not in STOPWORDS}


class OverlapStub:
    """Offline stand-in for a QA model.

    Answers with the context sentence sharing the most content words
    (lowercased, stopwords dropped) with the question.  Interrogative
    sentences are never answers; segment/turn labels such as ``Q:`` or
    ``Passage:`` are stripped; ties go to the earliest sentence.  With no
    overlap at all the answer is ``NO_ANSWER``.
    """

    def answer(self, rendered_context: str, question: str) -> str:
        if not rendered_context.strip():
            raise ValidationError("rendered context is empty")
        wanted = content_tokens(question)
        best, best_score = NO_ANSWER, 0
        for sentence in split_sentences(rendered_context):
            sentence = strip_label(sentence)
            if sentence.endswith("?"):
                continue
            score = len(wanted & content_tokens(sentence))
            if score > best_score:
                best, best_score = sentence, score
        return best


class RemoteQA:
    """``{"context", "question"} -> {"answer"}`` over HTTP."""

    def __init__(self, client):
        self.client = client

    @property
    def latencies(self) -> list[float]:
        return self.client.latencies

    def answer(self, rendered_context: str, question: str) -> str:
        if not rendered_context.strip():
            raise ValidationError("rendered context is empty")
        data = self.client.post_json({"context": rendered_context, "question": question})
        answer = data.get("answer")
        if not isinstance(answer, str):
            raise BackendError(f"QA response lacks an 'answer' string: {data!r}")
        return answer if answer.strip() else NO_ANSWER


QA_BACKENDS: Registry = Registry("qa")
QA_BACKENDS.register("stub-overlap", OverlapStub)


@QA_BACKENDS.register("remote-http")
def _remote_qa(endpoint=None, timeout_s=30.0, retries=3, max_inflight=4):
    from .http import JsonHttpClient

    if not endpoint:
        raise ValidationError("qa.endpoint is required for remote-http")
    return RemoteQA(JsonHttpClient(endpoint, timeout_s=timeout_s, retries=retries,
                                   max_inflight=max_inflight))
