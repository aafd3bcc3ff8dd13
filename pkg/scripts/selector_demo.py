"""Walk the monthly SI / SI+News switch on the synthetic data.

Prints each month's trailing Sharpe pair, the strategy it leads to, and the
overall share of months each candidate was held.
"""
import argparse
from pathlib import Path

from riskonoff.config import ExperimentConfig, StrategyId, Universe
from riskonoff.experiment import load_dataset, run_universe
from riskonoff.strategies import selection_frequency
from riskonoff.synthetic import write_dataset

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(ROOT / "data" / "synthetic"))
    ap.add_argument("--universe", default="SP500", choices=[u.value for u in Universe])
    ap.add_argument("--months", type=int, default=12, help="rows to print from the end")
    args = ap.parse_args()

    data = Path(args.data)
    if not (data / "prices.csv").exists():
        write_dataset(data)
    cfg = ExperimentConfig()
    run = run_universe(load_dataset(cfg, data), Universe(args.universe), (StrategyId.DynamicSINews,), cfg)
    log = run.selection.entries

    print(f"{'month':<8} {'held':<8} {'Sharpe SI':>10} {'Sharpe SI+News':>15}")
    for e in log[-args.months:]:
        print(f"{e.month:<8} {e.selected.label:<8} {e.sharpe_si:>10.2f} {e.sharpe_si_news:>15.2f}")
    freq = selection_frequency(log)
    print(f"\nSI held {freq[StrategyId.SI]:.0%} of {len(log)} months, SI+News {freq[StrategyId.SINews]:.0%}")


if __name__ == "__main__":
    main()
