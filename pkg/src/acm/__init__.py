"""Adaptive context management for conversational question answering.

Keeps a conversation's history inside a model's token budget by aging turns
through three zones: verbatim, summarized, and reduced to key entities.
"""

from .core import (
    ACMError,
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
    new_conversation,
    record_turn,
)
from .engine import (
    ACM,
    FULL_HISTORY,
    PIPELINE_IMMEDIATE,
    ContextEngine,
    EngineConfig,
    RenderTemplate,
    Session,
    StrategyKind,
    answer_question,
    assemble,
    assemble_baseline,
)

__all__ = [
    "ACM", "ACMError", "AssembledContext", "BackendError", "BudgetOverflowError",
    "ContextEngine", "Conversation", "EngineConfig", "EntityItem", "FULL_HISTORY",
    "PIPELINE_IMMEDIATE", "RenderTemplate", "Session", "StrategyKind", "TokenBudget", "Turn",
    "ValidationError", "ZoneState", "answer_question", "assemble", "assemble_baseline",
    "initial_zone_state", "new_conversation", "record_turn",
]
