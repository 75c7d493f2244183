import csv
import json

import pytest

from acm.cli import main
from acm.dataset import read_report, read_transcript


@pytest.fixture
def fixtures(tmp_path):
    out = tmp_path / "fx"
    assert main(["make-fixtures", "--out", str(out), "--n", "5", "--seed", "3"]) == 0
    config = tmp_path / "cfg.yaml"
    config.write_text("budget:\n  ms_max: 250\n  sm_limit: 120\n  threshold: 0.75\n")
    return out / "conversations.json", out / "reference_summaries.json", config


def test_replay_writes_transcript_and_report(tmp_path, fixtures, capsys):
    dataset, _, config = fixtures
    out = tmp_path / "run"
    code = main(["replay", "--dataset", str(dataset), "--config", str(config), "--out", str(out)])
    assert code == 0
    entries = read_transcript(out / "transcript.jsonl")
    report = read_report(out / "report.json")
    assert len(entries) == report.count == sum(1 for _ in entries)
    assert all(e.strategy == "acm" and e.zone_boundaries is not None for e in entries)
    assert all(e.segment_token_counts["total"] <= 250 for e in entries)
    assert "F1" in capsys.readouterr().out


def test_replay_limit_and_baseline_strategy(tmp_path, fixtures):
    dataset, _, config = fixtures
    out = tmp_path / "run"
    assert main(["replay", "--dataset", str(dataset), "--config", str(config), "--limit", "2",
                 "--strategy", "pipeline_immediate", "--out", str(out)]) == 0
    entries = read_transcript(out / "transcript.jsonl")
    assert {e.conversation_id for e in entries} == {"ld-000", "ld-001"}
    assert all(e.zone_boundaries is None for e in entries)


def test_parallel_replay_matches_serial(tmp_path, fixtures):
    dataset, _, config = fixtures
    for jobs, name in ((1, "a"), (4, "b")):
        assert main(["replay", "--dataset", str(dataset), "--config", str(config),
                     "--jobs", str(jobs), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "transcript.jsonl").read_bytes() == \
        (tmp_path / "b" / "transcript.jsonl").read_bytes()


def test_compare_reports_deltas(tmp_path, fixtures):
    dataset, _, config = fixtures
    out = tmp_path / "cmp"
    assert main(["compare", "--dataset", str(dataset), "--config", str(config),
                 "--out", str(out)]) == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert doc["baseline"] == "pipeline_immediate"
    assert doc["deltas"]["acm"]["f1"] > 0
    assert (out / "00-acm" / "transcript.jsonl").exists()
    assert (out / "01-pipeline_immediate" / "report.json").exists()


def test_same_strategy_twice_gives_zero_deltas(tmp_path, fixtures):
    dataset, _, config = fixtures
    out = tmp_path / "cmp"
    assert main(["compare", "--dataset", str(dataset), "--config", str(config),
                 "--strategies", "k_turn:2,k_turn:2", "--out", str(out)]) == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert all(v == 0 for v in doc["deltas"]["k_turn:2"].values())


def test_sweep_grid(tmp_path, fixtures):
    dataset, refs, _ = fixtures
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--dataset", str(dataset), "--references", str(refs),
                 "--token-grid", "30,60,90,120", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 16
    assert {int(r["turn_count"]) for r in rows} == {5, 10, 15, 20}
    for k in (5, 10, 15, 20):
        scores = [float(r["mean_rouge_l"]) for r in rows if int(r["turn_count"]) == k]
        assert scores == sorted(scores)


def test_sweep_reports_missing_references(tmp_path, fixtures):
    dataset, refs, _ = fixtures
    doc = json.loads(refs.read_text())
    del doc["summaries"]["ld-002"]
    refs.write_text(json.dumps(doc))
    code = main(["sweep", "--dataset", str(dataset), "--references", str(refs),
                 "--out", str(tmp_path / "s.csv")])
    assert code == 1


def test_score(tmp_path, capsys):
    preds = tmp_path / "p.jsonl"
    preds.write_text("\n".join(json.dumps(x) for x in [
        {"conversation_id": "c", "turn_index": 1, "prediction": "the cat sat", "gold": "the cat"},
        {"conversation_id": "c", "turn_index": 2, "prediction": "dog", "gold": "dog"},
    ]) + "\n")
    assert main(["score", "--predictions", str(preds), "--out", str(tmp_path / "r.json"),
                 "--label", "mine"]) == 0
    report = read_report(tmp_path / "r.json")
    assert report.strategy == "mine"
    assert report.averages["f1"] == pytest.approx(90.0)
    assert "mine" in capsys.readouterr().out


def test_score_malformed_line(tmp_path):
    preds = tmp_path / "p.jsonl"
    preds.write_text('{"conversation_id": "c"}\n')
    assert main(["score", "--predictions", str(preds), "--out", str(tmp_path / "r.json")]) == 1


@pytest.mark.parametrize("config_text", [
    "budget:\n  ms_max: 250\n  bogus: 1\n",
    "strategy: sliding\n",
])
def test_invalid_config_exits_1(tmp_path, fixtures, config_text):
    dataset, _, _ = fixtures
    bad = tmp_path / "bad.yaml"
    bad.write_text(config_text)
    assert main(["replay", "--dataset", str(dataset), "--config", str(bad),
                 "--out", str(tmp_path / "x")]) == 1


def test_overflowing_budget_exits_2(tmp_path, fixtures):
    dataset, _, _ = fixtures
    tiny = tmp_path / "tiny.json"
    tiny.write_text(json.dumps({"budget": {"ms_max": 60, "sm_limit": 20}}))
    assert main(["replay", "--dataset", str(dataset), "--config", str(tiny),
                 "--out", str(tmp_path / "x")]) == 2
    assert main(["replay", "--dataset", str(dataset), "--config", str(tiny), "--fail-fast",
                 "--out", str(tmp_path / "y")]) == 2


def test_missing_dataset_exits_1(tmp_path):
    assert main(["replay", "--dataset", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1


def test_sample_is_seeded(tmp_path, fixtures):
    dataset, _, config = fixtures
    ids = []
    for name in ("a", "b"):
        assert main(["replay", "--dataset", str(dataset), "--config", str(config), "--sample", "0.4",
                     "--seed", "7", "--out", str(tmp_path / name)]) == 0
        ids.append({e.conversation_id for e in read_transcript(tmp_path / name / "transcript.jsonl")})
    assert ids[0] == ids[1] and len(ids[0]) == 2
