"""Mean hop counts of TEL primaries, TEL backups and shortest paths per topology.

Thin wrapper over ``tel-lab hops`` that also prints the table.

    python scripts/run_hops.py [--reward-a 0.05] [--out results/hops]
"""

import argparse
import csv
import sys
from pathlib import Path

from tel_lab.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--topology-dir", default=str(ROOT / "data" / "topologyzoo"))
    ap.add_argument("--reward-a", default="0.05")
    ap.add_argument("--iterations", default="100")
    ap.add_argument("--out", default="results/hops")
    args = ap.parse_args()

    code = cli_main([
        "hops", "--topology-dir", args.topology_dir, "--reward-a", args.reward_a,
        "--iterations", args.iterations, "--out", args.out,
    ])
    if code:
        sys.exit(code)
    with open(Path(args.out) / "hops.csv") as f:
        for row in csv.DictReader(f):
            back = float(row["tel_backup"]) if row["tel_backup"] else float("nan")
            print(f"{row['topology']:<12} links={row['links']:>3}  primary={float(row['tel_primary']):.2f}  "
                  f"backup={back:.2f}  baseline={float(row['baseline']):.2f}  ratio={float(row['ratio']):.3f}")


if __name__ == "__main__":
    main()
