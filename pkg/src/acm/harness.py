"""Replaying datasets through context strategies and scoring the answers."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .core import ACMError, Conversation, ZoneState, initial_zone_state
from .dataset import TranscriptEntry
from .engine import ContextEngine, QABackend, StrategyKind
from .metrics import EvalRecord, aggregate, rouge_l
from .summarization import SummaryRequest, render_turns_for_summary

log = logging.getLogger("acm.harness")


@dataclass
class ConversationResult:
    conversation_id: str
    entries: list[TranscriptEntry] = field(default_factory=list)
    records: list[EvalRecord] = field(default_factory=list)
    error: ACMError | None = None
    failed_turn: int | None = None


def replay_conversation(
    engine: ContextEngine, conversation: Conversation, strategy: StrategyKind, qa: QABackend
) -> ConversationResult:
    """Ask every question of ``conversation`` in order.

    History is the dataset's gold dialogue (the prediction is scored but not
    fed back).  On the first error the remaining turns are skipped and the
    result carries the error; turns already scored are discarded so a
    conversation is reported whole or not at all.
    """
    result = ConversationResult(conversation.id)
    zone: ZoneState | None = initial_zone_state(conversation) if strategy.kind == "acm" else None
    for turn in conversation.turns:
        history = conversation.prefix(turn.index - 1)
        try:
            context, zone = engine.context_for(history, zone, turn.question, strategy)
            prediction = qa.answer(context.rendered, turn.question)
        except ACMError as exc:
            log.error("conversation=%s turn=%d strategy=%s error=%s: %s",
                      conversation.id, turn.index, strategy, type(exc).__name__, exc)
            result.error, result.failed_turn = exc, turn.index
            result.entries.clear()
            result.records.clear()
            return result
        boundaries = {"m": zone.entity_boundary, "p": zone.summary_boundary} if zone else None
        log.debug("conversation=%s turn=%d strategy=%s tokens=%d zones=%s truncated=%s",
                  conversation.id, turn.index, strategy, context.total_tokens, boundaries,
                  context.truncated)
        result.entries.append(TranscriptEntry(
            conversation_id=conversation.id,
            turn_index=turn.index,
            strategy=str(strategy),
            rendered_context=context.rendered,
            zone_boundaries=boundaries,
            segment_token_counts=dict(context.segment_token_counts),
            prediction=prediction,
            gold=turn.answer,
            truncated=context.truncated,
        ))
        result.records.append(EvalRecord.score(conversation.id, turn.index, prediction, turn.answer))
    return result


class RunAborted(ACMError):
    def __init__(self, result: ConversationResult):
        super().__init__(
            f"conversation {result.conversation_id} failed at turn {result.failed_turn}: {result.error}")
        self.result = result


def replay_all(
    engine: ContextEngine,
    conversations: Sequence[Conversation],
    strategy: StrategyKind,
    qa: QABackend,
    jobs: int = 1,
    fail_fast: bool = False,
) -> list[ConversationResult]:
    """Replay conversations (in parallel up to ``jobs``); results keep input order."""
    if jobs <= 1:
        results = []
        for conv in conversations:
            res = replay_conversation(engine, conv, strategy, qa)
            if res.error is not None and fail_fast:
                raise RunAborted(res)
            results.append(res)
        return results
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(lambda c: replay_conversation(engine, c, strategy, qa), conversations))
    if fail_fast:
        for res in results:
            if res.error is not None:
                raise RunAborted(res)
    return results


def collect(results: Sequence[ConversationResult], strategy: StrategyKind):
    entries = [e for r in results for e in r.entries]
    records = [x for r in results for x in r.records]
    report = aggregate(records, strategy) if records else None
    return entries, records, report


def sweep_grid(
    conversations: Sequence[Conversation],
    references: dict,
    summarizer,
    turn_counts: Sequence[int],
    token_grid: Sequence[int],
) -> list[tuple[int, int, float]]:
    """Mean ROUGE-L of capped summaries of the first ``k`` turns, for each (k, cap)."""
    rows = []
    for k in turn_counts:
        for cap in token_grid:
            scores = []
            for conv in conversations:
                turns = conv.turns[:k]
                if not turns:
                    continue
                summary = summarizer.summarize(SummaryRequest("", turns, cap))
                scores.append(rouge_l(summary, references[conv.id][str(k)]))
            mean = sum(scores) / len(scores) if scores else 0.0
            rows.append((k, cap, mean))
    return rows


def full_render_rouge(conversation: Conversation, reference: str, k: int) -> float:
    return rouge_l(render_turns_for_summary(conversation.turns[:k]).replace("\n", " "), reference)
