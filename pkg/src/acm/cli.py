"""acm command line: replay, compare, sweep, score, make-fixtures.

Exit codes: 0 success, 1 validation/config error, 2 runtime/backend error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
from pathlib import Path

from .config import load_config, make_qa_backend
from .core import ACMError, ValidationError
from .dataset import (
    DatasetError,
    load_conversations,
    write_conversations,
    write_report,
    write_transcript,
)
from .engine import ContextEngine, StrategyKind
from .fixtures import long_dependency_set, reference_summaries
from .harness import RunAborted, collect, replay_all, sweep_grid
from .metrics import EvalRecord, aggregate

log = logging.getLogger("acm.cli")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _select(conversations, limit, sample, seed):
    if sample is not None:
        if not 0 < sample <= 1:
            raise ValidationError("--sample must lie in (0, 1]")
        k = max(1, round(sample * len(conversations)))
        picked = sorted(random.Random(seed).sample(range(len(conversations)), k))
        conversations = [conversations[i] for i in picked]
    if limit is not None:
        conversations = conversations[:limit]
    return conversations


def _load_inputs(args):
    config = load_config(args.config)
    conversations = load_conversations(args.dataset, format=args.format)
    conversations = _select(conversations, args.limit, getattr(args, "sample", None), args.seed)
    return config, conversations


def _run_strategy(config, conversations, strategy: StrategyKind, out_dir: Path, jobs, fail_fast):
    engine = ContextEngine(config)
    qa = make_qa_backend(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript = out_dir / "transcript.jsonl"
    transcript.write_text("", encoding="utf-8")
    results = replay_all(engine, conversations, strategy, qa, jobs=jobs, fail_fast=fail_fast)
    for res in results:
        write_transcript(transcript, res.entries)
    entries, records, report = collect(results, strategy)
    failed = [r for r in results if r.error is not None]
    if report is not None:
        write_report(out_dir / "report.json", report)
    return report, failed


def cmd_replay(args) -> int:
    config, conversations = _load_inputs(args)
    strategy = StrategyKind.parse(args.strategy) if args.strategy else config.strategy
    report, failed = _run_strategy(config, conversations, strategy, Path(args.out), args.jobs,
                                   args.fail_fast)
    if report is None:
        log.error("no conversation completed")
        return EXIT_RUNTIME
    print((Path(args.out) / "report.txt").read_text(encoding="utf-8"), end="")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_compare(args) -> int:
    config, conversations = _load_inputs(args)
    strategies = [StrategyKind.parse(s) for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise ValidationError("--strategies is empty")
    out = Path(args.out)
    reports, any_failed = [], False
    for i, strategy in enumerate(strategies):
        sub = out / f"{i:02d}-{str(strategy).replace(':', '_')}"
        report, failed = _run_strategy(config, conversations, strategy, sub, args.jobs, args.fail_fast)
        if report is None:
            log.error("strategy %s: no conversation completed", strategy)
            return EXIT_RUNTIME
        any_failed = any_failed or bool(failed)
        reports.append(report)
    names = [str(s) for s in strategies]
    base_name = args.baseline or ("pipeline_immediate" if "pipeline_immediate" in names else names[0])
    if base_name not in names:
        raise ValidationError(f"--baseline {base_name!r} is not among --strategies")
    baseline = reports[names.index(base_name)]
    _, txt = write_report(out / "comparison.json", reports, baseline=baseline)
    print(txt.read_text(encoding="utf-8"), end="")
    return EXIT_RUNTIME if any_failed else EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    conversations = load_conversations(args.dataset, format=args.format)
    conversations = _select(conversations, args.limit, None, args.seed)
    try:
        refs = json.loads(Path(args.references).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read reference summaries {args.references}: {exc}") from exc
    refs = refs.get("summaries", refs) if isinstance(refs, dict) else None
    if not isinstance(refs, dict):
        raise DatasetError("reference summaries must be an object keyed by conversation id")
    missing = sorted(
        c.id for c in conversations
        if not isinstance(refs.get(c.id), dict) or any(str(k) not in refs[c.id] for k in args.turn_counts)
    )
    if missing:
        raise DatasetError(f"reference summaries missing for conversations: {', '.join(missing)}")
    if args.token_grid != sorted(args.token_grid) or any(t <= 0 for t in args.token_grid):
        raise ValidationError("--token-grid must be ascending positive integers")
    summarizer = ContextEngine(config).summarizer
    rows = sweep_grid(conversations, refs, summarizer, args.turn_counts, args.token_grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["turn_count", "max_tokens", "mean_rouge_l"])
        for k, cap, mean in rows:
            writer.writerow([k, cap, f"{mean:.6f}"])
    print(out.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_score(args) -> int:
    records = []
    path = Path(args.predictions)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(EvalRecord.score(str(obj["conversation_id"]), int(obj["turn_index"]),
                                            str(obj["prediction"]), str(obj["gold"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{path}:{lineno}: malformed prediction line ({exc})") from exc
    if not records:
        raise ValidationError(f"{path}: no predictions to score")
    _, txt = write_report(args.out, aggregate(records, args.label))
    print(txt.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_make_fixtures(args) -> int:
    conversations = long_dependency_set(args.n, seed=args.seed, n_facts=args.facts,
                                        n_filler=args.filler)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_conversations(out / "conversations.json", conversations)
    refs = reference_summaries(conversations, args.turn_counts)
    (out / "reference_summaries.json").write_text(
        json.dumps({"summaries": refs}, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(conversations)} conversations to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def dataset_args(p):
        p.add_argument("--dataset", required=True)
        p.add_argument("--format", choices=("coqa", "chat"), default="coqa")
        p.add_argument("--config")
        p.add_argument("--limit", type=int, help="use only the first N conversations")
        p.add_argument("--seed", type=int, default=0)

    def run_args(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--fail-fast", action="store_true")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--sample", type=float, help="deterministic random fraction of conversations")

    p = sub.add_parser("replay", help="replay a dataset under one strategy")
    dataset_args(p)
    run_args(p)
    p.add_argument("--strategy", help="acm | pipeline_immediate | full_history | k_turn:K")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("compare", help="replay under several strategies and tabulate deltas")
    dataset_args(p)
    run_args(p)
    p.add_argument("--strategies", default="acm,pipeline_immediate")
    p.add_argument("--baseline", help="strategy the deltas are measured against")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="ROUGE-L of capped summaries over a (turns x tokens) grid")
    dataset_args(p)
    p.add_argument("--references", required=True, help="JSON sidecar of reference summaries")
    p.add_argument("--turn-counts", type=_int_list, default=[5, 10, 15, 20])
    p.add_argument("--token-grid", type=_int_list, default=[60, 80, 100, 120])
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="score a JSON-lines predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="report JSON path (a .txt table is written beside it)")
    p.add_argument("--label", default="predictions", help="row label in the report")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("make-fixtures", help="write the synthetic long-dependency dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--facts", type=int, default=3)
    p.add_argument("--filler", type=int, default=10)
    p.add_argument("--turn-counts", type=_int_list, default=[5, 10, 15, 20])
    p.set_defaults(func=cmd_make_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s")
    try:
        return args.func(args)
    except RunAborted as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except ACMError as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
