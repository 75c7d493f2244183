"""Exit criteria, one test per criterion; each prints a PASS/FAIL line."""

import filecmp
import itertools
import json
import random
import time

from acm import (
    PIPELINE_IMMEDIATE,
    ACM,
    BudgetOverflowError,
    ContextEngine,
    EngineConfig,
    TokenBudget,
    Turn,
    initial_zone_state,
)
from acm.cli import main
from acm.fixtures import dependent_turns, long_dependency_set
from acm.harness import collect, replay_all
from acm.metrics import bleu, f1_token, lcs_length, normalize, rouge_1, rouge_l
from acm.qa import OverlapStub
from acm.summarization import ExtractiveSummarizer, SummaryRequest
from acm.tokenization import count_tokens

from .oracles import NaiveState, brute_force_lcs, naive_assemble, naive_bleu
from .synth import random_instance, random_text

N_RANDOM = 1000


def _lifetime_suite(seed=20240611):
    """Replay every conversation of the random suite; collect invariant violations."""
    rng = random.Random(seed)
    stats = dict(assemblies=0, overflows=0, with_entities=0, budget=0, floor=0, partition=0,
                 aging=0)
    for c in range(N_RANDOM):
        conv, budget = random_instance(rng, f"r{c}")
        engine = ContextEngine(EngineConfig(budget))
        zone = initial_zone_state(conv)
        for turn in conv.turns:
            history = conv.prefix(turn.index - 1)
            prev = zone
            try:
                ctx, zone = engine.assemble(history, zone, turn.question)
            except BudgetOverflowError:
                stats["overflows"] += 1
                break
            stats["assemblies"] += 1
            n = history.n_turns
            if ctx.total_tokens > budget.ms_max or engine.tokenizer.count(ctx.rendered) > budget.ms_max:
                stats["budget"] += 1
            if zone.m > 1:
                stats["with_entities"] += 1
                if ctx.segment_token_counts["unmodified"] < budget.unc_floor:
                    stats["floor"] += 1
            zones = [zone.zone_of(i) for i in range(1, n + 1)]
            expected = (["entity"] * (zone.m - 1) + ["summary"] * (zone.p - zone.m)
                        + ["unmodified"] * (n + 1 - zone.p))
            if not (1 <= zone.m <= zone.p <= n + 1) or zones != expected \
                    or ctx.verbatim_turns != tuple(range(zone.p, n + 1)) \
                    or any(e.source_turn >= zone.m for e in zone.entity_items):
                stats["partition"] += 1
            if zone.m < prev.m or zone.p < prev.p:
                stats["aging"] += 1
    return stats


_SUITE = {}


def _suite():
    if not _SUITE:
        start = time.perf_counter()
        _SUITE.update(_lifetime_suite())
        _SUITE["seconds"] = time.perf_counter() - start
    return _SUITE


def test_criterion_1_budget_safety(criterion):
    s = _suite()
    ok = s["budget"] == 0 and s["seconds"] < 60 and s["assemblies"] > N_RANDOM
    criterion("1 budget safety", ok,
              f"{s['budget']} violations in {s['assemblies']} assemblies over {N_RANDOM} "
              f"conversations ({s['overflows']} overflow stops), {s['seconds']:.1f}s")


def test_criterion_2_unc_floor(criterion):
    s = _suite()
    ok = s["floor"] == 0 and s["with_entities"] > 0
    criterion("2 UNC floor", ok,
              f"{s['floor']} violations in {s['with_entities']} assemblies with entities")


def test_criterion_3_partition_and_aging(criterion):
    s = _suite()
    ok = s["partition"] == 0 and s["aging"] == 0
    criterion("3 zone partition and aging", ok,
              f"{s['partition']} partition and {s['aging']} aging violations")


def test_criterion_4_oracle_equivalence(criterion):
    rng = random.Random(77)
    start = time.perf_counter()
    mismatches, compared, with_entities = [], 0, 0
    for c in range(200):
        conv, budget = random_instance(rng, f"o{c}", lo=80, hi=300, sm_hi=120, max_turns=20,
                                       max_turn_words=30)
        engine = ContextEngine(EngineConfig(budget))
        zone, state = initial_zone_state(conv), NaiveState()
        for turn in conv.turns:
            history = conv.prefix(turn.index - 1)
            try:
                ctx, zone = engine.assemble(history, zone, turn.question)
                got = ((zone.m, zone.p), ctx.segment_token_counts)
            except BudgetOverflowError:
                got = "overflow"
            try:
                counts, state = naive_assemble(state, history, turn.question, budget,
                                               engine.tokenizer, engine.summarizer, engine.extractor)
                want = ((state.m, state.p), counts)
            except BudgetOverflowError:
                want = "overflow"
            compared += 1
            if got != want:
                mismatches.append((conv.id, turn.index, got, want))
                break
            if got == "overflow":
                break
            with_entities += zone.m > 1
    seconds = time.perf_counter() - start
    ok = not mismatches and seconds < 30 and with_entities > 0
    criterion("4 oracle equivalence", ok,
              f"{len(mismatches)} mismatches in {compared} assemblies "
              f"({with_entities} with entities), {seconds:.1f}s"
              + (f"; first: {mismatches[0]}" if mismatches else ""))


def test_criterion_5_metrics(criterion):
    failures = []

    def check(name, got, want):
        if abs(got - want) > 1e-9:
            failures.append(f"{name}: {got} != {want}")

    check("f1 pinned", f1_token("the cat sat", "the cat"), 0.8)
    check("rouge_l 5x5", rouge_l("the cat sat on mat", "the cat on the mat"), 0.8)
    for text in ["the cat", "a b c d e", "Alice met Bob in Paris."]:
        for fn in (f1_token, rouge_1, rouge_l, bleu):
            check(f"{fn.__name__} self", fn(text, text), 1.0)

    lcs_pairs = 0
    for la, lb in itertools.product(range(7), repeat=2):
        for a in itertools.product("ab", repeat=la):
            for b in itertools.product("ab", repeat=lb):
                lcs_pairs += 1
                if lcs_length(a, b) != brute_force_lcs(list(a), list(b)):
                    failures.append(f"lcs {a} {b}")
    rng = random.Random(5)
    for _ in range(1500):
        a = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        b = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        lcs_pairs += 1
        if lcs_length(a, b) != brute_force_lcs(a, b):
            failures.append(f"lcs {a} {b}")

    vocab = "the cat dog sat on a mat rug big red".split()
    for _ in range(50):
        pred = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
        gold = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
        check(f"bleu {pred!r} / {gold!r}", bleu(pred, gold), naive_bleu(normalize(pred), normalize(gold)))

    criterion("5 metric correctness", not failures,
              f"{len(failures)} failures; {lcs_pairs} LCS pairs, 50 BLEU pairs"
              + (f"; first: {failures[0]}" if failures else ""))


def test_criterion_6_summary_cap(criterion):
    rng = random.Random(6)
    summarizer = ExtractiveSummarizer()
    violations = []
    for i in range(500):
        turns = tuple(
            Turn(k + 1, random_text(rng, rng.randint(1, 40), "?"), random_text(rng, rng.randint(1, 60)))
            for k in range(rng.randint(1, 10))
        )
        if rng.random() < 0.2:  # one unpunctuated run longer than any cap
            turns = (Turn(1, "what " * rng.randint(50, 300), "yes"),)
        prior = random_text(rng, rng.randint(1, 80)) if rng.random() < 0.5 else ""
        cap = rng.randint(1, 200)
        out = summarizer.summarize(SummaryRequest(prior, turns, cap))
        if count_tokens(out) > cap:
            violations.append((i, cap, count_tokens(out)))
    criterion("6 summary cap", not violations, f"{len(violations)} violations in 500 requests")


def test_criterion_7_directional(criterion):
    start = time.perf_counter()
    conversations = long_dependency_set(30, seed=0)
    gaps = [t - s for c in conversations for t, s in dependent_turns(c).items()]
    engine = ContextEngine(EngineConfig(TokenBudget(250, 120, 0.75)))
    qa = OverlapStub()
    reports = {}
    for strategy in (ACM, PIPELINE_IMMEDIATE):
        results = replay_all(engine, conversations, strategy, qa)
        assert all(r.error is None for r in results)
        reports[str(strategy)] = collect(results, strategy)[2]
    seconds = time.perf_counter() - start
    acm_f1, pipe_f1 = reports["acm"].f1, reports["pipeline_immediate"].f1
    ok = acm_f1 - pipe_f1 >= 10 and min(gaps) >= 10 and seconds < 60
    criterion("7 directional analogue", ok,
              f"ACM F1 {acm_f1:.2f} vs pipeline {pipe_f1:.2f} (delta {acm_f1 - pipe_f1:+.2f}); "
              f"facts stated >= {min(gaps)} turns earlier; {seconds:.1f}s")


def test_criterion_8_sweep(criterion, tmp_path):
    assert main(["make-fixtures", "--out", str(tmp_path / "fx"), "--n", "30"]) == 0
    csv_path = tmp_path / "sweep.csv"
    code = main(["sweep", "--dataset", str(tmp_path / "fx" / "conversations.json"),
                 "--references", str(tmp_path / "fx" / "reference_summaries.json"),
                 "--turn-counts", "5,10,15,20", "--token-grid", "60,80,100,120",
                 "--out", str(csv_path)])
    lines = csv_path.read_text().splitlines()
    rows = [line.split(",") for line in lines[1:]]
    grid = {(int(k), int(t)): float(v) for k, t, v in rows}
    complete = set(grid) == set(itertools.product([5, 10, 15, 20], [60, 80, 100, 120]))
    monotone = all(
        grid[(k, a)] <= grid[(k, b)]
        for k in (5, 10, 15, 20) for a, b in [(60, 80), (80, 100), (100, 120)]
    ) if complete else False
    ok = code == 0 and lines[0] == "turn_count,max_tokens,mean_rouge_l" and len(rows) == 16 \
        and complete and monotone
    criterion("8 sweep harness shape", ok,
              f"{len(rows)} rows, complete={complete}, non-decreasing in max_tokens={monotone}")


def test_criterion_9_reproducibility(criterion, tmp_path):
    assert main(["make-fixtures", "--out", str(tmp_path / "fx"), "--n", "6"]) == 0
    dataset = str(tmp_path / "fx" / "conversations.json")
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"budget": {"ms_max": 250, "sm_limit": 120, "threshold": 0.75}}))
    for run in ("a", "b"):
        code = main(["compare", "--dataset", dataset, "--config", str(config),
                     "--strategies", "acm,pipeline_immediate,full_history,k_turn:3",
                     "--out", str(tmp_path / run)])
        assert code == 0
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b",
                                           [str(p) for p in files_a], shallow=False)
    transcripts = [p for p in files_a if p.name == "transcript.jsonl"]
    ok = files_a == files_b and not mismatch and not errors and len(transcripts) == 4
    criterion("9 reproducibility", ok,
              f"{len(files_a)} files compared, {len(mismatch) + len(errors)} differ")
