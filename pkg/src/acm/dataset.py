"""Reading CoQA-style datasets; writing transcripts and reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import Conversation, Turn, ValidationError
from .metrics import EvalRecord, METRICS, RunReport


class DatasetError(ValidationError):
    pass


def _read_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _by_turn_id(entries, what: str, where: str) -> dict[int, str]:
    if not isinstance(entries, list):
        raise DatasetError(f"{where}: '{what}' must be a list")
    out: dict[int, str] = {}
    for j, entry in enumerate(entries):
        try:
            turn_id = int(entry["turn_id"])
            text = entry["input_text"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{where}: {what}[{j}] needs integer 'turn_id' and 'input_text'") from exc
        if not isinstance(text, str):
            raise DatasetError(f"{where}: {what}[{j}] input_text is not a string")
        if turn_id in out:
            raise DatasetError(f"{where}: duplicate {what[:-1]} for turn {turn_id}")
        out[turn_id] = text
    return out


def _coqa_record(i: int, rec) -> Conversation:
    where = f"record {i}"
    if not isinstance(rec, dict):
        raise DatasetError(f"{where}: expected an object")
    for key in ("id", "story", "questions", "answers"):
        if key not in rec:
            raise DatasetError(f"{where}: missing '{key}'")
    where = f"record {i} (id={rec['id']!r})"
    questions = _by_turn_id(rec["questions"], "questions", where)
    answers = _by_turn_id(rec["answers"], "answers", where)
    unanswered = sorted(set(questions) - set(answers))
    if unanswered:
        raise DatasetError(f"{where}: no answer for turn {unanswered[0]}")
    unasked = sorted(set(answers) - set(questions))
    if unasked:
        raise DatasetError(f"{where}: no question for turn {unasked[0]}")
    ids = sorted(questions)
    if ids != list(range(1, len(ids) + 1)):
        missing = sorted(set(range(1, max(ids, default=0) + 1)) - set(ids))
        raise DatasetError(f"{where}: turn ids must run 1..n without gaps; missing turn {missing[0]}")
    try:
        return Conversation(
            id=str(rec["id"]),
            base_passage=rec["story"],
            turns=tuple(Turn(t, questions[t], answers[t]) for t in ids),
        )
    except ValidationError as exc:
        raise DatasetError(f"{where}: {exc}") from exc


def _chat_record(i: int, rec) -> Conversation:
    where = f"record {i}"
    if not isinstance(rec, dict) or "messages" not in rec or "id" not in rec:
        raise DatasetError(f"{where}: expected an object with 'id' and 'messages'")
    passage = rec.get("story", rec.get("passage"))
    if not isinstance(passage, str):
        raise DatasetError(f"{where}: missing 'story' (or 'passage')")
    turns, pending = [], None
    for j, msg in enumerate(rec["messages"]):
        role, content = msg.get("role"), msg.get("content")
        if role == "user":
            if pending is not None:
                raise DatasetError(f"{where}: message {j}: two user messages in a row")
            pending = content
        elif role == "assistant":
            if pending is None:
                raise DatasetError(f"{where}: message {j}: assistant message without a question")
            turns.append(Turn(len(turns) + 1, pending, content))
            pending = None
        else:
            raise DatasetError(f"{where}: message {j}: unknown role {role!r}")
    if pending is not None:
        raise DatasetError(f"{where}: no answer for turn {len(turns) + 1}")
    try:
        return Conversation(id=str(rec["id"]), base_passage=passage, turns=tuple(turns))
    except ValidationError as exc:
        raise DatasetError(f"{where}: {exc}") from exc


def load_conversations(path, format: str = "coqa") -> list[Conversation]:
    """Load ``{"data": [...]}`` with CoQA fields, or chat-style ``messages`` when ``format="chat"``."""
    doc = _read_json(path)
    if not isinstance(doc, dict) or not isinstance(doc.get("data"), list):
        raise DatasetError(f"{path}: top level must be an object with a 'data' list")
    parse = {"coqa": _coqa_record, "chat": _chat_record}.get(format)
    if parse is None:
        raise DatasetError(f"unknown dataset format {format!r}")
    return [parse(i, rec) for i, rec in enumerate(doc["data"])]


def conversations_to_json(conversations: Iterable[Conversation]) -> dict:
    return {
        "data": [
            {
                "id": c.id,
                "story": c.base_passage,
                "questions": [{"turn_id": t.index, "input_text": t.question} for t in c.turns],
                "answers": [{"turn_id": t.index, "input_text": t.answer} for t in c.turns],
            }
            for c in conversations
        ]
    }


def write_conversations(path, conversations: Iterable[Conversation]) -> None:
    Path(path).write_text(
        json.dumps(conversations_to_json(conversations), indent=1, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# transcripts


@dataclass(frozen=True)
class TranscriptEntry:
    conversation_id: str
    turn_index: int
    strategy: str
    rendered_context: str
    zone_boundaries: Optional[dict]  # {"m": .., "p": ..}; None for baselines
    segment_token_counts: dict
    prediction: str
    gold: str
    truncated: bool = False


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_transcript(path, entries: Iterable[TranscriptEntry]) -> None:
    """Append one JSON object per entry."""
    with open(path, "a", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(_dumps(asdict(entry)) + "\n")


def read_transcript(path) -> list[TranscriptEntry]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                out.append(TranscriptEntry(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DatasetError(f"{path}:{lineno}: bad transcript line: {exc}") from exc
    return out


# reports

COLUMNS = (("f1", "F1"), ("rougeL", "ROUGE-L"), ("rouge1", "ROUGE-1"), ("bleu", "BLEU"))


def report_to_json(report: RunReport) -> dict:
    return {
        "strategy": report.strategy,
        "count": report.count,
        "averaging": report.averaging,
        "averages": dict(report.averages),
        "records": [asdict(r) for r in report.records],
    }


def report_from_json(doc: dict) -> RunReport:
    return RunReport(
        strategy=doc["strategy"],
        records=tuple(EvalRecord(**r) for r in doc["records"]),
        averages=dict(doc["averages"]),
        count=doc["count"],
        averaging=doc.get("averaging", "macro over questions"),
    )


def read_report(path) -> RunReport:
    return report_from_json(_read_json(path))


def deltas(report: RunReport, baseline: RunReport) -> dict[str, float]:
    return {m: report.averages[m] - baseline.averages[m] for m in METRICS}


def format_table(reports: Sequence[RunReport], baseline: Optional[RunReport] = None) -> str:
    """Aligned text table, one row per strategy, scores x100 to 2 decimals.

    Rows other than ``baseline`` carry a signed delta against it, e.g.
    ``69.35 (+10.78)``.
    """
    header = ["Strategy"] + [label for _, label in COLUMNS]
    rows = [header]
    for rep in reports:
        row = [rep.strategy]
        d = deltas(rep, baseline) if baseline is not None and rep is not baseline else None
        for key, _ in COLUMNS:
            cell = f"{rep.averages[key]:.2f}"
            if d is not None:
                cell += f" ({d[key]:+.2f})"
            row.append(cell)
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def write_report(path, reports, baseline: Optional[RunReport] = None) -> tuple[Path, Path]:
    """Write ``<path>`` (JSON) and ``<path>`` with a ``.txt`` suffix (table).

    ``reports`` is one RunReport or a sequence of them; with several, the
    JSON holds a list plus per-strategy deltas against ``baseline``.
    """
    path = Path(path)
    single = isinstance(reports, RunReport)
    reports = [reports] if single else list(reports)
    if single:
        doc = report_to_json(reports[0])
    else:
        doc = {"reports": [report_to_json(r) for r in reports]}
        if baseline is not None:
            doc["baseline"] = baseline.strategy
            doc["deltas"] = {r.strategy: deltas(r, baseline) for r in reports if r is not baseline}
    try:
        path.write_text(json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                        encoding="utf-8")
        txt = path.with_suffix(".txt")
        txt.write_text(format_table(reports, baseline), encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot write report to {path}: {exc}") from exc
    return path, txt
