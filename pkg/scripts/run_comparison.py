#!/usr/bin/env python3
"""Run the six-algorithm comparison grid and print the mean table.

Usage:
    python3 scripts/run_comparison.py --policies artifacts
                                      [--out report.csv] [--seeds 1,2,3]
                                      [--vehicles 50,100,200] [--algos ...]

``--policies`` points at the directory train_baseline.py wrote
(dqn_policy.json, ppo_policy.json); omit it to compare only the four
non-learned algorithms. Wall-clock decision timing is live here, so the
report's execution-time columns reflect this machine.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from vecoff.config import default_config, load_config
from vecoff.experiments import ALGO_TAGS, DEFAULT_SEEDS, DEFAULT_VEHICLE_COUNTS, run_matrix
from vecoff.rl.policy import load_policy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--policies", help="directory with <algo>_policy.json files")
    ap.add_argument("--out", default="report.csv")
    ap.add_argument("--config", help="experiment config JSON")
    ap.add_argument("--algos", help="comma-separated subset of algorithm tags")
    ap.add_argument("--vehicles", help="comma-separated densities")
    ap.add_argument("--seeds", help="comma-separated seeds")
    args = ap.parse_args()

    config = load_config(args.config) if args.config else default_config()
    policies = {}
    if args.policies:
        for algo in ("dqn", "ppo"):
            path = os.path.join(args.policies, f"{algo}_policy.json")
            if os.path.exists(path):
                policies[algo] = load_policy(path)
    if args.algos:
        algos = args.algos.split(",")
    else:
        # all six when policies are supplied, the four non-learned otherwise
        algos = [a for a in ALGO_TAGS if a not in ("dqn", "ppo") or a in policies]
    vehicle_counts = (
        [int(v) for v in args.vehicles.split(",")]
        if args.vehicles
        else list(DEFAULT_VEHICLE_COUNTS)
    )
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else list(DEFAULT_SEEDS)

    report = run_matrix(
        config, algos=algos, vehicle_counts=vehicle_counts, seeds=seeds, policies=policies
    )
    report.to_csv(args.out)

    header = f"{'algo':<12} {'veh':>4} {'drop':>6} {'e2e_s':>8} {'objective':>10} {'win':>5} {'per_win_s':>10}"
    print(header)
    print("-" * len(header))
    for m in report.means:
        print(
            f"{m.algo:<12} {m.vehicles:>4} {m.drop_ratio:>6.3f} {m.mean_e2e_s:>8.3f} "
            f"{m.objective:>10.3f} {m.windows:>5} {m.per_window_exec_s:>10.6f}"
        )
    print(f"\nfull report at {args.out}")


if __name__ == "__main__":
    main()
