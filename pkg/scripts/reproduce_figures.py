"""Run both channel-selection scenarios and the p_c1 validation sweep, then plot them.

    python scripts/reproduce_figures.py --reps 10 --workers 4 --out results/

Raise --reps to 1000 for full-scale averages (hours on a single core).
"""
import argparse
import csv
import logging
from pathlib import Path

from lpwa_ucb.cli import cmd_simulate, cmd_validate_approx
from lpwa_ucb.model import Strategy


def load_series(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [int(r["slot_bucket"]) for r in rows], [float(r["mean_rate"]) for r in rows], \
        [float(r["stderr"]) for r in rows]


def plot_scenario(out_dir, title):
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for strategy in Strategy:
        x, y, se = load_series(out_dir / f"series_{strategy.slug}.csv")
        ax.plot(x, y, label=strategy.value)
        ax.fill_between(x, [a - b for a, b in zip(y, se)], [a + b for a, b in zip(y, se)], alpha=0.2)
    ax.set_xlabel("slot")
    ax.set_ylabel("successful transmission rate")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "success_rate.png", dpi=120)
    plt.close(fig)


def plot_validation(rows, out_dir):
    import matplotlib.pyplot as plt

    n = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(n, [r[1] for r in rows], "o-", label="p_c (simulated)")
    ax.plot(n, [r[2] for r in rows], "s-", label="p_c1 (simulated)")
    ax.plot(n, [r[3] for r in rows], "^--", label="p_c1 (approximation)")
    ax.set_xlabel("number of devices N")
    ax.set_ylabel("collision probability")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "validate_approx.png", dpi=120)
    plt.close(fig)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    parser.add_argument("--no-plots", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    out = Path(args.out)

    rows = cmd_validate_approx(range(50, 401, 50), out / "validate_approx", reps=max(args.reps, 50),
                               seed=args.seed, workers=args.workers)
    for name in ("scenario1", "scenario2"):
        cmd_simulate(name, out / name, seed=args.seed, reps=args.reps, workers=args.workers, gnuplot=True)

    if not args.no_plots:
        plot_validation(rows, out / "validate_approx")
        plot_scenario(out / "scenario1", "Scenario 1: N=1000, occupancy 10/30/30/30 %")
        plot_scenario(out / "scenario2", "Scenario 2: N=2000, occupancy 40/30/20/10 %")


if __name__ == "__main__":
    main()
