"""Run an experiment config and print the per-algorithm summary.

    python scripts/run_bench.py scripts/configs/ktspp_small.json --parallelism 4
"""
import argparse
import json

from routelp.bench import ExperimentConfig, run_experiment, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--parallelism", type=int)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    if args.parallelism:
        cfg.parallelism = args.parallelism
    rows = run_experiment(cfg)
    for s in summarize(rows):
        print(json.dumps(s))
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"instance {r.instance_id} {r.algorithm}: did not pass {r.error}")
    print(f"{len(rows) - len(failed)}/{len(rows)} rows passed")


if __name__ == "__main__":
    main()
