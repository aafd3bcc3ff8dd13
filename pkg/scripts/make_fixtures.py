"""Write the bundled synthetic dataset to data/synthetic/."""
import argparse
from pathlib import Path

from riskonoff.synthetic import write_dataset

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "data" / "synthetic"))
    ap.add_argument("--days", type=int, default=2520)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    print(write_dataset(args.out, n_days=args.days, seed=args.seed))
