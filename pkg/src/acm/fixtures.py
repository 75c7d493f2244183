"""Synthetic conversations for offline experiments.

``long_dependency_set`` builds conversations in which the user states a few
facts early, chats about the passage for a while, then asks for the facts
again.  A context that still carries the early turns (verbatim or in the
summary) lets an extractive QA backend recover the fact; a context built
from the last turn alone cannot.
"""

from __future__ import annotations

import random

from .core import Conversation, Turn
from .summarization import render_turns_for_summary

NAMES = [
    "Zephyr", "Marlowe", "Quillon", "Bramble", "Tamsin", "Orsino", "Peregrine",
    "Isolde", "Caspian", "Wrenna", "Thaddeus", "Ottoline", "Fennick", "Saoirse",
]
FACT_SLOTS = [
    ("name", "cat"), ("code", "locker"), ("color", "umbrella"), ("owner", "bicycle"),
    ("flavor", "cake"), ("brand", "guitar"), ("city", "conference"), ("author", "novel"),
    ("nickname", "captain"), ("title", "painting"),
]
FACT_VALUES = {
    "name": NAMES, "owner": NAMES, "nickname": NAMES, "author": NAMES,
    "code": ["4417", "9052", "3318", "7260", "1189"],
    "color": ["crimson", "teal", "ochre", "violet", "amber"],
    "flavor": ["pistachio", "ginger", "lavender", "hazelnut"],
    "brand": ["Gibson", "Fender", "Ibanez", "Yamaha"],
    "city": ["Lisbon", "Tallinn", "Valparaiso", "Hobart", "Quebec"],
    "title": ["Evening Tide", "Silver Orchard", "Quiet Harbor", "Red Lantern"],
}
PLACES = [
    "garden", "bakery", "library", "harbor", "station", "market", "chapel", "mill",
    "bridge", "school", "theater", "museum", "tower", "orchard", "stable", "pier",
]
ADJECTIVES = [
    "green", "quiet", "crowded", "ancient", "narrow", "bright", "wooden", "stone",
    "small", "famous", "busy", "empty", "tall", "painted", "sunny", "muddy",
]
FILLER_QUESTIONS = [
    "How would you describe the {place}?",
    "What is the {place} like?",
    "Tell me about the {place}.",
    "What can you say about the {place}?",
]
TOWNS = ["Ashford", "Bellmoor", "Corrin", "Dunmere", "Elsworth", "Fallowby"]


def _passage(rng: random.Random, town: str, places: list[str]) -> tuple[str, dict[str, str]]:
    described = {p: rng.choice(ADJECTIVES) for p in places}
    sentences = [f"{town} is a village by the river."]
    sentences += [f"The {p} is {adj}." for p, adj in described.items()]
    return " ".join(sentences), described


def long_dependency_conversation(
    rng: random.Random, conv_id: str, n_facts: int = 3, n_filler: int = 10
) -> Conversation:
    town = rng.choice(TOWNS)
    places = rng.sample(PLACES, n_filler)
    passage, described = _passage(rng, town, places)
    facts = []
    for attribute, thing in rng.sample(FACT_SLOTS, n_facts):
        value = rng.choice(FACT_VALUES[attribute])
        facts.append((attribute, thing, value))

    qa: list[tuple[str, str]] = []
    for attribute, thing, value in facts:
        qa.append((
            f"Please remember that the {attribute} of the {thing} is {value}.",
            f"Noted, the {attribute} of the {thing} is {value}.",
        ))
    for place in places:
        question = rng.choice(FILLER_QUESTIONS).format(place=place)
        qa.append((question, f"The {place} is {described[place]}."))
    for attribute, thing, value in facts:
        qa.append((f"What is the {attribute} of the {thing}?",
                   f"The {attribute} of the {thing} is {value}."))
    turns = tuple(Turn(i + 1, q, a) for i, (q, a) in enumerate(qa))
    return Conversation(id=conv_id, base_passage=passage, turns=turns)


def long_dependency_set(n: int = 30, seed: int = 0, n_facts: int = 3, n_filler: int = 10) -> list[Conversation]:
    rng = random.Random(seed)
    return [
        long_dependency_conversation(rng, f"ld-{i:03d}", n_facts=n_facts, n_filler=n_filler)
        for i in range(n)
    ]


def dependent_turns(conversation: Conversation) -> dict[int, int]:
    """Map each recall question's turn index to the turn that stated its fact."""
    out = {}
    stated = {}
    for t in conversation.turns:
        if t.question.startswith("Please remember"):
            stated[t.answer.split(", ", 1)[1].lower()] = t.index
        elif t.answer.lower() in stated:
            out[t.index] = stated[t.answer.lower()]
    return out


def reference_summaries(conversations, turn_counts, style: str = "dialogue") -> dict[str, dict[str, str]]:
    """Sidecar references for the summary sweep, keyed by conversation id then turn count.

    ``dialogue`` references are the full flattened first-k turns, so any
    extractive summary is a subsequence of its reference; ``answers`` keeps
    only the answers.
    """
    if style == "dialogue":
        make = lambda turns: render_turns_for_summary(turns).replace("\n", " ")  # noqa: E731
    elif style == "answers":
        make = lambda turns: " ".join(t.answer for t in turns)  # noqa: E731
    else:
        raise ValueError(f"unknown reference style {style!r}")
    return {
        c.id: {str(k): make(c.turns[:k]) for k in turn_counts if c.turns[:k]}
        for c in conversations
    }
