"""Replay the long-dependency fixture under several strategies and budgets.

Prints macro F1 per (ms_max, strategy) and the ACM-minus-pipeline delta.

    python scripts/run_directional_experiment.py --budgets 220,250,300
"""

import argparse

from acm import ContextEngine, EngineConfig, StrategyKind, TokenBudget
from acm.fixtures import long_dependency_set
from acm.harness import collect, replay_all
from acm.qa import OverlapStub


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--filler", type=int, default=10)
    ap.add_argument("--budgets", default="220,250,300")
    ap.add_argument("--sm-limit", type=int, default=120)
    ap.add_argument("--threshold", type=float, default=0.75)
    ap.add_argument("--strategies", default="acm,pipeline_immediate,k_turn:3,full_history")
    args = ap.parse_args()

    conversations = long_dependency_set(args.n, seed=args.seed, n_filler=args.filler)
    strategies = [StrategyKind.parse(s) for s in args.strategies.split(",")]
    print(f"{'ms_max':>6}  {'strategy':<20} {'F1':>6} {'ROUGE-L':>8} {'BLEU':>6}  failed")
    for ms_max in (int(b) for b in args.budgets.split(",")):
        engine = ContextEngine(EngineConfig(TokenBudget(ms_max, args.sm_limit, args.threshold)))
        f1 = {}
        for strategy in strategies:
            results = replay_all(engine, conversations, strategy, OverlapStub())
            failed = sum(r.error is not None for r in results)
            _, _, report = collect(results, strategy)
            if report is None:
                print(f"{ms_max:>6}  {str(strategy):<20} {'-':>6} {'-':>8} {'-':>6}  {failed}")
                continue
            a = report.averages
            f1[str(strategy)] = a["f1"]
            print(f"{ms_max:>6}  {str(strategy):<20} {a['f1']:6.2f} {a['rougeL']:8.2f} "
                  f"{a['bleu']:6.2f}  {failed}")
        if "acm" in f1 and "pipeline_immediate" in f1:
            print(f"{ms_max:>6}  delta acm - pipeline_immediate: {f1['acm'] - f1['pipeline_immediate']:+.2f}")


if __name__ == "__main__":
    main()
