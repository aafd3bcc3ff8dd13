"""Run all three universes x six strategies and print the markdown tables.

    python3 scripts/run_matrix.py [--config configs/default.json] [--data data/synthetic] [--out runs/default]
"""
import argparse
import time
from pathlib import Path

from riskonoff.config import ExperimentConfig, load_config
from riskonoff.experiment import ExperimentMatrix, run_matrix
from riskonoff.synthetic import write_dataset

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--data", default=str(ROOT / "data" / "synthetic"))
    ap.add_argument("--out", default=str(ROOT / "runs" / "default"))
    args = ap.parse_args()

    data = Path(args.data)
    if not (data / "prices.csv").exists():
        write_dataset(data)
    cfg = load_config(args.config) if args.config else ExperimentConfig()

    t0 = time.perf_counter()
    manifest = run_matrix(ExperimentMatrix.from_config(cfg), data, args.out)
    print(f"{len(manifest.experiments)} backtests in {time.perf_counter() - t0:.1f}s\n")
    for u, paths in sorted(manifest.tables.items()):
        print((Path(args.out) / paths["md"]).read_text())


if __name__ == "__main__":
    main()
