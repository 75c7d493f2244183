"""Summary-length sweep: mean ROUGE-L of capped summaries per (turns, max_tokens).

Writes a CSV and prints it as a small matrix (rows: turn count, columns: cap).

    python scripts/run_sweep.py --out sweep.csv
"""

import argparse
import csv

from acm.fixtures import long_dependency_set, reference_summaries
from acm.harness import sweep_grid
from acm.summarization import ExtractiveSummarizer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--turn-counts", default="5,10,15,20")
    ap.add_argument("--token-grid", default="30,60,90,120")
    ap.add_argument("--references", choices=("dialogue", "answers"), default="dialogue")
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    turn_counts = [int(x) for x in args.turn_counts.split(",")]
    grid = [int(x) for x in args.token_grid.split(",")]
    conversations = long_dependency_set(args.n, seed=args.seed)
    refs = reference_summaries(conversations, turn_counts, style=args.references)
    rows = sweep_grid(conversations, refs, ExtractiveSummarizer(), turn_counts, grid)

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["turn_count", "max_tokens", "mean_rouge_l"])
        for k, cap, mean in rows:
            w.writerow([k, cap, f"{mean:.6f}"])

    table = {(k, cap): mean for k, cap, mean in rows}
    print("turns " + " ".join(f"{cap:>7}" for cap in grid))
    for k in turn_counts:
        print(f"{k:>5} " + " ".join(f"{table[(k, cap)]:7.3f}" for cap in grid))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
