"""Final success rate of every strategy as the number of devices grows.

Shows where channel learning helps: with few devices the static occupancy
dominates and picking the free channel pays off; as N grows the devices'
own collisions take over and all strategies converge.

    python scripts/load_sweep.py --n 100,250,500,1000 --reps 3 --horizon 50000
"""
import argparse
import csv
import sys

from lpwa_ucb.cli import parse_scenario, simulate_strategy
from lpwa_ucb.metrics import mean_stderr
from lpwa_ucb.model import Strategy


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default="scenario1")
    parser.add_argument("--n", default="100,250,500,1000")
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--horizon", type=int, default=50_000)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    base = parse_scenario(args.config).replace(horizon=args.horizon, delay_threshold=None)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["n_devices", "strategy", "final_rate", "stderr"])
    for n in (int(v) for v in args.n.split(",")):
        for strategy in Strategy:
            cfg = base.replace(n_devices=n, strategy=strategy)
            summaries = simulate_strategy(cfg, args.reps, args.horizon // 10, args.workers)
            mean, se, _ = mean_stderr([s.final_rate for s in summaries])
            writer.writerow([n, strategy.value, f"{mean:.4f}", f"{se:.4f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
