"""Answer-quality metrics: token F1, ROUGE-1, ROUGE-L and smoothed BLEU-4.

All metrics work on lowercased reference-tokenizer tokens (punctuation kept,
no stemming) and return values in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .core import ValidationError
from .tokenization import tokenize

METRICS = ("f1", "rouge1", "rougeL", "bleu")


def normalize(text: str) -> list[str]:
    return [t.lower() for t in tokenize(text)]


def _f_measure(overlap: float, n_pred: int, n_gold: int) -> float:
    if n_pred == 0 or n_gold == 0 or overlap == 0:
        return 0.0
    p = overlap / n_pred
    r = overlap / n_gold
    return 2 * p * r / (p + r)


def _unigram_overlap(pred: list[str], gold: list[str]) -> int:
    return sum((Counter(pred) & Counter(gold)).values())


def f1_token(prediction: str, gold: str) -> float:
    pred, ref = normalize(prediction), normalize(gold)
    return _f_measure(_unigram_overlap(pred, ref), len(pred), len(ref))


def rouge_1(prediction: str, gold: str) -> float:
    # same multiset-overlap F-measure as f1_token; kept separate as a named metric
    pred, ref = normalize(prediction), normalize(gold)
    return _f_measure(_unigram_overlap(pred, ref), len(pred), len(ref))


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(prediction: str, gold: str) -> float:
    pred, ref = normalize(prediction), normalize(gold)
    return _f_measure(lcs_length(pred, ref), len(pred), len(ref))


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(prediction: str, gold: str, max_order: int = 4) -> float:
    """Sentence BLEU, uniform weights, clipped precisions, brevity penalty.

    An order with no clipped match gets add-one smoothing on both its
    numerator and denominator, so short answers do not collapse to 0.
    """
    pred, ref = normalize(prediction), normalize(gold)
    if not pred or not ref:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand = _ngrams(pred, n)
        matches = sum((cand & _ngrams(ref, n)).values())
        total = sum(cand.values())
        if matches == 0:
            matches, total = 1, total + 1
        log_sum += math.log(matches / total)
    bp = 1.0 if len(pred) >= len(ref) else math.exp(1 - len(ref) / len(pred))
    return bp * math.exp(log_sum / max_order)


def score_all(prediction: str, gold: str) -> dict[str, float]:
    return {
        "f1": f1_token(prediction, gold),
        "rouge1": rouge_1(prediction, gold),
        "rougeL": rouge_l(prediction, gold),
        "bleu": bleu(prediction, gold),
    }


@dataclass(frozen=True)
class EvalRecord:
    conversation_id: str
    turn_index: int
    prediction: str
    gold: str
    f1: float
    rouge1: float
    rougeL: float
    bleu: float

    @classmethod
    def score(cls, conversation_id: str, turn_index: int, prediction: str, gold: str) -> "EvalRecord":
        return cls(conversation_id, turn_index, prediction, gold, **score_all(prediction, gold))

    def __post_init__(self):
        for name in METRICS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class RunReport:
    strategy: str
    records: tuple[EvalRecord, ...]
    averages: dict = field(default_factory=dict)  # metric -> mean * 100
    count: int = 0
    averaging: str = "macro over questions"

    @property
    def f1(self) -> float:
        return self.averages["f1"]


def aggregate(records: Sequence[EvalRecord], strategy) -> RunReport:
    if not records:
        raise ValidationError("cannot aggregate an empty run")
    averages = {
        name: 100.0 * math.fsum(getattr(r, name) for r in records) / len(records)
        for name in METRICS
    }
    return RunReport(str(strategy), tuple(records), averages, len(records))
