"""Domain types shared across the context engine, backends and harness."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional


class ACMError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ACMError, ValueError):
    pass


class BudgetOverflowError(ACMError):
    """Raised when no amount of demotion can make a context fit the budget.

    ``segment`` names the part of the context that is responsible
    (``"base_passage"``, ``"question"``, ``"unmodified"``, ...).
    """

    def __init__(self, message: str, segment: str, total_tokens: int, ms_max: int):
        super().__init__(message)
        self.segment = segment
        self.total_tokens = total_tokens
        self.ms_max = ms_max


class BackendError(ACMError):
    """A tokenizer/summarizer/extractor/QA backend failed."""

    def __init__(self, message: str, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.cause = cause


ENTITY_CATEGORIES = ("person", "organization", "date", "location", "other")


@dataclass(frozen=True)
class Turn:
    index: int
    question: str
    answer: str

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError(f"turn index must be >= 1, got {self.index}")
        if not self.question.strip():
            raise ValidationError(f"turn {self.index}: question is empty")


@dataclass(frozen=True)
class Conversation:
    id: str
    base_passage: str
    turns: tuple[Turn, ...] = ()

    def __post_init__(self):
        if not self.base_passage.strip():
            raise ValidationError(f"conversation {self.id!r}: base passage is empty")
        object.__setattr__(self, "turns", tuple(self.turns))
        for k, turn in enumerate(self.turns):
            if turn.index != k + 1:
                raise ValidationError(
                    f"conversation {self.id!r}: turn at position {k} has index "
                    f"{turn.index}, expected {k + 1}"
                )

    @property
    def n_turns(self) -> int:
        return len(self.turns)

    def prefix(self, n: int) -> "Conversation":
        """The same conversation truncated to its first ``n`` turns."""
        return replace(self, turns=self.turns[:n])


@dataclass(frozen=True)
class TokenBudget:
    ms_max: int
    sm_limit: int = 120
    unc_floor_fraction: float = 0.75
    eec_max_tokens: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.sm_limit < self.ms_max:
            raise ValidationError(
                f"budget requires 0 < sm_limit < ms_max, got sm_limit={self.sm_limit}, "
                f"ms_max={self.ms_max}"
            )
        if not 0 < self.unc_floor_fraction < 1:
            raise ValidationError(
                f"unc_floor_fraction must lie in (0, 1), got {self.unc_floor_fraction}"
            )
        if self.eec_max_tokens is not None and self.eec_max_tokens < 1:
            raise ValidationError("eec_max_tokens must be positive when set")

    @property
    def unc_floor(self) -> float:
        return self.unc_floor_fraction * self.ms_max


@dataclass(frozen=True)
class EntityItem:
    surface: str
    category: str
    source_turn: int

    def __post_init__(self):
        if not self.surface.strip():
            raise ValidationError("entity surface is empty")
        if self.category not in ENTITY_CATEGORIES:
            raise ValidationError(f"unknown entity category {self.category!r}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.surface.lower(), self.category)


@dataclass(frozen=True)
class ZoneState:
    """Partition of a conversation's history into the three aging zones.

    Turns ``[1, entity_boundary)`` are represented by ``entity_items``,
    turns ``[entity_boundary, summary_boundary)`` by ``summary_text`` and the
    rest are kept verbatim.
    """

    conversation_ref: str
    entity_boundary: int = 1
    summary_boundary: int = 1
    entity_items: tuple[EntityItem, ...] = ()
    summary_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entity_items", tuple(self.entity_items))
        if not 1 <= self.entity_boundary <= self.summary_boundary:
            raise ValidationError(
                f"zone boundaries must satisfy 1 <= m <= p, got m={self.entity_boundary}, "
                f"p={self.summary_boundary}"
            )

    @property
    def m(self) -> int:
        return self.entity_boundary

    @property
    def p(self) -> int:
        return self.summary_boundary

    def check_against(self, conversation: Conversation) -> None:
        if self.conversation_ref != conversation.id:
            raise ValidationError(
                f"zone state belongs to {self.conversation_ref!r}, not {conversation.id!r}"
            )
        if self.summary_boundary > conversation.n_turns + 1:
            raise ValidationError(
                f"summary boundary {self.summary_boundary} beyond history of "
                f"{conversation.n_turns} turns"
            )

    def zone_of(self, turn_index: int) -> str:
        if turn_index < self.entity_boundary:
            return "entity"
        if turn_index < self.summary_boundary:
            return "summary"
        return "unmodified"


@dataclass(frozen=True)
class AssembledContext:
    base_passage: str
    entity_segment: str
    summary_segment: str
    unmodified_segment: str
    current_question: str
    rendered: str
    total_tokens: int
    segment_token_counts: dict = field(default_factory=dict)
    verbatim_turns: tuple[int, ...] = ()
    truncated: bool = False


def new_conversation(id: str, base_passage: str) -> Conversation:
    return Conversation(id=id, base_passage=base_passage)


def initial_zone_state(conversation: Conversation) -> ZoneState:
    return ZoneState(conversation_ref=conversation.id)


def record_turn(conversation: Conversation, question: str, answer: str) -> Conversation:
    """Append a question/answer pair; zone boundaries are not touched here."""
    turn = Turn(index=conversation.n_turns + 1, question=question, answer=answer)
    return replace(conversation, turns=conversation.turns + (turn,))
