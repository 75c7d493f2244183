"""Context assembly: the three-zone rebalancing engine and the baselines.

For every question the engine lays history out as

    Passage | Key facts (oldest turns) | Summary (older turns) | Conversation (recent turns) | Question

and moves whole turns rightwards-to-leftwards through the zones (verbatim ->
summary -> entities) until the rendering fits ``ms_max`` tokens.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, NamedTuple, Optional, Protocol, Sequence

from .core import (
    AssembledContext,
    BackendError,
    BudgetOverflowError,
    Conversation,
    EntityItem,
    TokenBudget,
    Turn,
    ValidationError,
    ZoneState,
    initial_zone_state,
    record_turn,
)
from .entities import (
    EXTRACTORS,
    EntityExtractor,
    evict_oldest,
    extract_from_turns,
    integrate_entities,
    render_entity_segment,
)
from .summarization import SUMMARIZERS, Summarizer, SummaryRequest, render_turns_for_summary
from .tokenization import TOKENIZERS, Tokenizer, get_tokenizer

log = logging.getLogger(__name__)

ADDITIVE_TOKENIZERS = frozenset({"reference-ws"})


@dataclass(frozen=True)
class RenderTemplate:
    passage: str = "Passage:"
    key_facts: str = "Key facts:"
    summary: str = "Summary:"
    conversation: str = "Conversation:"
    question: str = "Question:"
    separator: str = "\n\n"


@dataclass(frozen=True)
class StrategyKind:
    kind: str
    k: Optional[int] = None

    KINDS = ("acm", "pipeline_immediate", "full_history", "k_turn")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown strategy {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "k_turn":
            if self.k is None or self.k < 1:
                raise ValidationError("k_turn strategy needs k >= 1")
        elif self.k is not None:
            raise ValidationError(f"strategy {self.kind!r} takes no k")

    @classmethod
    def parse(cls, text: str) -> "StrategyKind":
        """``acm``, ``pipeline_immediate``, ``full_history`` or ``k_turn:K``."""
        name, _, arg = text.strip().partition(":")
        if name == "k_turn":
            try:
                return cls("k_turn", int(arg))
            except ValueError:
                raise ValidationError(f"bad k in strategy {text!r}") from None
        if arg:
            raise ValidationError(f"strategy {name!r} takes no argument")
        return cls(name)

    def __str__(self) -> str:
        return f"k_turn:{self.k}" if self.kind == "k_turn" else self.kind


ACM = StrategyKind("acm")
PIPELINE_IMMEDIATE = StrategyKind("pipeline_immediate")
FULL_HISTORY = StrategyKind("full_history")


@dataclass(frozen=True)
class EngineConfig:
    budget: TokenBudget
    tokenizer: str = "reference-ws"
    summarizer: str = "reference-extractive"
    entity_extractor: str = "reference-rules"
    qa: str = "stub-overlap"
    template: RenderTemplate = field(default_factory=RenderTemplate)
    strategy: StrategyKind = ACM
    # per-backend keyword options, e.g. {"qa": {"endpoint": ..., "timeout_s": ...}}
    backend_options: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for registry, name in (
            (TOKENIZERS, self.tokenizer),
            (SUMMARIZERS, self.summarizer),
            (EXTRACTORS, self.entity_extractor),
        ):
            if name not in registry:
                raise ValidationError(
                    f"unknown {registry.kind} backend {name!r}; known: {registry.names()}"
                )


class QABackend(Protocol):
    def answer(self, rendered_context: str, question: str) -> str: ...


class Answered(NamedTuple):
    answer: str
    context: AssembledContext
    zone: ZoneState
    conversation: Conversation


@dataclass
class _Layout:
    m: int
    p: int
    items: tuple[EntityItem, ...]
    summary: str


class ContextEngine:
    """Assembles model inputs for one configuration.

    Backends are resolved from the registries named in ``config`` unless
    passed in directly.  The engine keeps no per-conversation state, so one
    instance can serve many conversations (callers own the ``ZoneState``).
    """

    def __init__(
        self,
        config: EngineConfig,
        tokenizer: Tokenizer | None = None,
        summarizer: Summarizer | None = None,
        extractor: EntityExtractor | None = None,
    ):
        self.config = config
        opts = config.backend_options
        if tokenizer is None:
            tokenizer = get_tokenizer(config.tokenizer) if not opts.get("tokenizer") else \
                TOKENIZERS.create(config.tokenizer, **opts["tokenizer"])
            additive = config.tokenizer in ADDITIVE_TOKENIZERS
        else:
            additive = getattr(tokenizer, "spec", None) is not None and \
                tokenizer.spec.name in ADDITIVE_TOKENIZERS
        self.tokenizer = tokenizer
        self.summarizer = summarizer or SUMMARIZERS.create(
            config.summarizer, tokenizer=tokenizer, **opts.get("summarizer", {}))
        self.extractor = extractor or EXTRACTORS.create(
            config.entity_extractor, **opts.get("entity_extractor", {}))
        t = config.template
        self._additive = additive and not t.separator.strip()
        self._count = lru_cache(maxsize=16384)(tokenizer.count)
        self._label_tokens = {
            name: self._count(getattr(t, name))
            for name in ("passage", "summary", "conversation", "question")
        }

    @property
    def budget(self) -> TokenBudget:
        return self.config.budget

    # rendering

    @staticmethod
    def _line(turn: Turn) -> str:
        return f"Q: {turn.question} A: {turn.answer}"

    def _pieces(self, passage, entity_segment, summary, unc_segment, question) -> list[str]:
        t = self.config.template

        def labelled(label, body, sep=" "):
            return f"{label}{sep}{body}" if label else body

        pieces = [labelled(t.passage, passage)]
        if entity_segment:
            pieces.append(entity_segment)
        if summary:
            pieces.append(labelled(t.summary, summary))
        if unc_segment:
            pieces.append(labelled(t.conversation, unc_segment, "\n"))
        pieces.append(labelled(t.question, question))
        return pieces

    def _unc_tokens(self, turns: Sequence[Turn]) -> int:
        if not turns:
            return 0
        if self._additive:
            return sum(self._count(self._line(x)) for x in turns)
        return self._count(render_turns_for_summary(turns))

    def _measure(self, passage, items, summary, unc_turns, question) -> int:
        entity_segment = render_entity_segment(items, self.config.template.key_facts)
        if not self._additive:
            unc = render_turns_for_summary(unc_turns) if unc_turns else ""
            rendered = self.config.template.separator.join(
                self._pieces(passage, entity_segment, summary, unc, question))
            return self.tokenizer.count(rendered)
        lt = self._label_tokens
        total = lt["passage"] + self._count(passage) + lt["question"] + self._count(question)
        if entity_segment:
            total += self._count(entity_segment)
        if summary:
            total += lt["summary"] + self._count(summary)
        if unc_turns:
            total += lt["conversation"] + self._unc_tokens(unc_turns)
        return total

    def _build(self, passage, items, summary, unc_turns, question, truncated=False) -> AssembledContext:
        t = self.config.template
        entity_segment = render_entity_segment(items, t.key_facts)
        unc = render_turns_for_summary(unc_turns) if unc_turns else ""
        rendered = t.separator.join(self._pieces(passage, entity_segment, summary, unc, question))
        if self._additive:
            total = self._measure(passage, items, summary, unc_turns, question)
        else:
            total = self.tokenizer.count(rendered)
        counts = {
            "passage": self._count(passage),
            "entities": self._count(entity_segment),
            "summary": self._count(summary),
            "unmodified": self._unc_tokens(unc_turns),
            "question": self._count(question),
            "total": total,
        }
        return AssembledContext(
            base_passage=passage,
            entity_segment=entity_segment,
            summary_segment=summary,
            unmodified_segment=unc,
            current_question=question,
            rendered=rendered,
            total_tokens=total,
            segment_token_counts=counts,
            verbatim_turns=tuple(x.index for x in unc_turns),
            truncated=truncated,
        )

    def _check_bare(self, conversation: Conversation, question: str) -> None:
        if not question.strip():
            raise ValidationError("question is empty")
        ms_max = self.budget.ms_max
        bare = self._measure(conversation.base_passage, (), "", (), question)
        if bare > ms_max:
            passage_tokens = self._count(conversation.base_passage)
            question_tokens = self._count(question)
            segment = "base_passage" if passage_tokens >= question_tokens else "question"
            raise BudgetOverflowError(
                f"passage ({passage_tokens} tokens) and question ({question_tokens} tokens) "
                f"alone render to {bare} tokens > ms_max={ms_max}; {segment} is oversized",
                segment=segment, total_tokens=bare, ms_max=ms_max,
            )

    # summary / entity steps

    def _resummarize(self, summary: str, turn: Turn) -> tuple[str, bool]:
        limit = self.budget.sm_limit
        request = SummaryRequest(summary, (turn,), limit)
        saturated = self._count(request.source_text()) > limit
        try:
            new = self.summarizer.summarize(request)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"summarizer failed: {exc}", cause=exc) from exc
        if self._count(new) > limit:
            raise BackendError(
                f"summarizer returned {self._count(new)} tokens, cap is {limit}")
        return new, saturated

    def _extract(self, turn: Turn) -> list[EntityItem]:
        try:
            return extract_from_turns(self.extractor, [turn])
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"entity extractor failed: {exc}", cause=exc) from exc

    # assembly

    def assemble(
        self, conversation: Conversation, zone: ZoneState, question: str
    ) -> tuple[AssembledContext, ZoneState]:
        """Build the context for ``question`` asked after ``conversation``'s turns.

        Rebalancing, starting from ``zone``:

        1. every turn from the summary boundary on is placed verbatim;
        2. while the rendering exceeds ``ms_max``, the oldest verbatim turn is
           folded into the rolling summary (capped at ``sm_limit``); the most
           recent turn is never folded;
        3. if one of those folds had more source text than ``sm_limit``
           (the summary window is saturated), then while the verbatim segment
           exceeds the floor ``threshold * ms_max`` and would still meet it
           without its oldest turn: the oldest summarized turn is reduced to
           its entities and the oldest verbatim turn is folded into the
           summary;
        4. anything still over budget, or a non-empty entity zone with the
           verbatim segment under the floor, raises ``BudgetOverflowError``.
        """
        zone.check_against(conversation)
        self._check_bare(conversation, question)
        budget = self.budget
        ms_max = budget.ms_max
        turns = conversation.turns
        n = len(turns)
        passage = conversation.base_passage
        s = _Layout(zone.entity_boundary, zone.summary_boundary, zone.entity_items, zone.summary_text)

        def total() -> int:
            return self._measure(passage, s.items, s.summary, turns[s.p - 1:], question)

        saturated = False
        while total() > ms_max and s.p < n:
            s.summary, over = self._resummarize(s.summary, turns[s.p - 1])
            saturated = saturated or over
            s.p += 1

        floor = budget.unc_floor
        if saturated:
            while s.p < n:
                if self._unc_tokens(turns[s.p - 1:]) <= floor:
                    break
                if self._unc_tokens(turns[s.p:]) < floor:
                    break
                z = integrate_entities(
                    ZoneState(conversation.id, s.m, s.p, s.items, s.summary),
                    self._extract(turns[s.m - 1]),
                    demoted=1,
                )
                s.m, s.items = z.entity_boundary, z.entity_items
                s.summary, _ = self._resummarize(s.summary, turns[s.p - 1])
                s.p += 1
                log.debug("conversation %s: entity boundary -> %d, summary boundary -> %d",
                          conversation.id, s.m, s.p)

        if budget.eec_max_tokens is not None and s.items:
            s.items = evict_oldest(s.items, budget.eec_max_tokens, self.tokenizer,
                                   self.config.template.key_facts)

        unc_turns = turns[s.p - 1:]
        final = total()
        if final > ms_max:
            sizes = {
                "entities": self._count(render_entity_segment(s.items, self.config.template.key_facts)),
                "summary": self._count(s.summary),
                "unmodified": self._unc_tokens(unc_turns),
            }
            segment = max(sizes, key=sizes.get)
            raise BudgetOverflowError(
                f"context needs {final} tokens > ms_max={ms_max} after all demotions "
                f"(entities={sizes['entities']}, summary={sizes['summary']}, "
                f"unmodified={sizes['unmodified']})",
                segment=segment, total_tokens=final, ms_max=ms_max,
            )
        unc_tokens = self._unc_tokens(unc_turns)
        if s.m > 1 and unc_tokens < floor:
            raise BudgetOverflowError(
                f"verbatim history would shrink to {unc_tokens} tokens, below the floor "
                f"{floor:g} required once entities are in use",
                segment="unmodified", total_tokens=final, ms_max=ms_max,
            )

        context = self._build(passage, s.items, s.summary, unc_turns, question)
        new_zone = ZoneState(conversation.id, s.m, s.p, s.items, s.summary)
        return context, new_zone

    def assemble_baseline(
        self, conversation: Conversation, question: str, strategy: StrategyKind
    ) -> AssembledContext:
        """Verbatim-only context: the last k turns (1, k, or all), oldest dropped to fit."""
        if strategy.kind == "acm":
            raise ValidationError("assemble_baseline does not handle the acm strategy")
        self._check_bare(conversation, question)
        turns = conversation.turns
        if strategy.kind == "pipeline_immediate":
            k = 1
        elif strategy.kind == "k_turn":
            k = strategy.k
        else:
            k = len(turns)
        included = turns[len(turns) - min(k, len(turns)):]
        passage = conversation.base_passage
        truncated = False
        while included and self._measure(passage, (), "", included, question) > self.budget.ms_max:
            included = included[1:]
            truncated = True
        return self._build(passage, (), "", included, question, truncated=truncated)

    def context_for(
        self, conversation: Conversation, zone: ZoneState | None, question: str,
        strategy: StrategyKind | None = None,
    ) -> tuple[AssembledContext, ZoneState | None]:
        """Dispatch on strategy; baselines return the zone unchanged."""
        strategy = strategy or self.config.strategy
        if strategy.kind == "acm":
            return self.assemble(conversation, zone or initial_zone_state(conversation), question)
        return self.assemble_baseline(conversation, question, strategy), zone

    def answer_question(
        self,
        conversation: Conversation,
        zone: ZoneState | None,
        question: str,
        qa_backend: QABackend,
        strategy: StrategyKind | None = None,
    ) -> Answered:
        """Assemble, ask the QA backend, then record the new turn.

        Nothing is recorded if assembly or the backend fails.
        """
        zone = zone or initial_zone_state(conversation)
        context, new_zone = self.context_for(conversation, zone, question, strategy)
        try:
            answer = qa_backend.answer(context.rendered, question)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"QA backend failed: {exc}", cause=exc) from exc
        return Answered(answer, context, new_zone, record_turn(conversation, question, answer))


class Session:
    """Mutable convenience wrapper around one live conversation."""

    def __init__(self, engine: ContextEngine, conversation: Conversation, qa_backend: QABackend,
                 strategy: StrategyKind | None = None):
        self.engine = engine
        self.conversation = conversation
        self.zone = initial_zone_state(conversation)
        self.qa = qa_backend
        self.strategy = strategy or engine.config.strategy
        self.last_context: AssembledContext | None = None

    def ask(self, question: str) -> str:
        result = self.engine.answer_question(self.conversation, self.zone, question, self.qa,
                                             self.strategy)
        self.conversation, self.zone, self.last_context = (
            result.conversation, result.zone, result.context)
        return result.answer


def assemble(conversation: Conversation, zone: ZoneState, question: str, config: EngineConfig,
             **backends: Any) -> tuple[AssembledContext, ZoneState]:
    return ContextEngine(config, **backends).assemble(conversation, zone, question)


def assemble_baseline(conversation: Conversation, question: str, strategy: StrategyKind,
                      config: EngineConfig, **backends: Any) -> AssembledContext:
    return ContextEngine(config, **backends).assemble_baseline(conversation, question, strategy)


def answer_question(conversation: Conversation, zone: ZoneState | None, question: str,
                    strategy: StrategyKind, config: EngineConfig, qa_backend: QABackend,
                    **backends: Any) -> Answered:
    engine = ContextEngine(config, **backends)
    return engine.answer_question(conversation, zone, question, qa_backend, strategy)
