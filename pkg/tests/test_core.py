import pytest

from acm.core import (
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
from acm.dataset import load_conversations, write_conversations
from acm.registry import Registry


def test_new_conversation_is_empty():
    conv = new_conversation("c1", "Alice went to Paris.")
    assert conv.turns == ()
    assert conv.n_turns == 0


def test_empty_passage_rejected():
    with pytest.raises(ValidationError):
        new_conversation("c1", "")
    with pytest.raises(ValidationError):
        new_conversation("c1", "   \n")


def test_record_turn_appends_with_contiguous_indices():
    conv = new_conversation("c1", "Alice went to Paris.")
    one = record_turn(conv, "Who went?", "Alice.")
    assert [t.index for t in one.turns] == [1]
    two = record_turn(one, "Where?", "Paris.")
    assert [t.index for t in two.turns] == [1, 2]
    assert conv.turns == ()  # original untouched


def test_empty_question_rejected():
    conv = new_conversation("c1", "text")
    with pytest.raises(ValidationError):
        record_turn(conv, "  ", "answer")


def test_recording_does_not_touch_zone_state():
    conv = new_conversation("c1", "text")
    zone = ZoneState("c1", 2, 3, (EntityItem("Bob", "other", 1),), "summary")
    before = zone
    for i in range(50):
        conv = record_turn(conv, f"question {i}?", f"answer {i}.")
    assert zone == before
    assert [t.index for t in conv.turns] == list(range(1, 51))


def test_turn_indices_must_be_contiguous():
    with pytest.raises(ValidationError):
        Conversation("c", "text", (Turn(1, "q", "a"), Turn(3, "q", "a")))


def test_prefix():
    conv = Conversation("c", "text", tuple(Turn(i, f"q{i}", f"a{i}") for i in range(1, 6)))
    assert conv.prefix(2).turns == conv.turns[:2]
    assert conv.prefix(0).n_turns == 0


@pytest.mark.parametrize("kwargs", [
    dict(ms_max=100, sm_limit=100),
    dict(ms_max=100, sm_limit=0),
    dict(ms_max=100, sm_limit=20, unc_floor_fraction=1.0),
    dict(ms_max=100, sm_limit=20, unc_floor_fraction=0.0),
    dict(ms_max=100, sm_limit=20, eec_max_tokens=0),
])
def test_budget_validation(kwargs):
    with pytest.raises(ValidationError):
        TokenBudget(**kwargs)


def test_budget_floor():
    assert TokenBudget(200, 40, 0.75).unc_floor == 150


def test_zone_state_validation_and_lookup():
    with pytest.raises(ValidationError):
        ZoneState("c", 3, 2)
    with pytest.raises(ValidationError):
        ZoneState("c", 0, 1)
    zone = ZoneState("c", 2, 4)
    assert [zone.zone_of(i) for i in range(1, 6)] == [
        "entity", "summary", "summary", "unmodified", "unmodified"]


def test_zone_state_checked_against_conversation():
    conv = Conversation("c", "text", (Turn(1, "q", "a"),))
    initial_zone_state(conv).check_against(conv)
    ZoneState("c", 1, 2).check_against(conv)
    with pytest.raises(ValidationError):
        ZoneState("c", 1, 3).check_against(conv)
    with pytest.raises(ValidationError):
        ZoneState("other", 1, 1).check_against(conv)


def test_entity_item_validation():
    assert EntityItem("Paris", "location", 1).key == ("paris", "location")
    with pytest.raises(ValidationError):
        EntityItem("Paris", "city", 1)
    with pytest.raises(ValidationError):
        EntityItem(" ", "other", 1)


def test_conversation_round_trips_through_dataset_file(tmp_path):
    conv = Conversation("c1", "Alice went to Paris.\nShe liked it.",
                        (Turn(1, "Who went?", "Alice"), Turn(2, "Where to?", "Paris, France")))
    path = tmp_path / "data.json"
    write_conversations(path, [conv])
    assert load_conversations(path) == [conv]


def test_registry_register_create_and_unknown():
    reg = Registry("widget")
    reg.register("plain", dict)

    @reg.register("pair")
    def make_pair(a=1, b=2):
        return (a, b)

    assert reg.create("pair", b=5) == (1, 5)
    assert reg.names() == ["pair", "plain"]
    assert "plain" in reg and "missing" not in reg
    with pytest.raises(ValidationError, match="widget"):
        reg.create("missing")
