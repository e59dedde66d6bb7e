"""Mean per-path throughput with 0, 1 and 2 failed links, both modes.

    python scripts/run_throughput.py [--topologies goodnet attmpls]
"""

import argparse
import dataclasses
import statistics
from pathlib import Path

from tel_lab.experiments import run_replica
from tel_lab.scenario import Scenario

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--topologies", nargs="+", default=["goodnet", "attmpls"])
    ap.add_argument("--max-failures", type=int, default=2)
    ap.add_argument("--out", default="results/throughput")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["topology,failures,mode,mean_bps"]
    for name in args.topologies:
        sc = Scenario.load(ROOT / "scenarios" / f"{name}.json")
        g = sc.build_graph()
        for nf in range(args.max_failures + 1):
            sc.random_failures = dataclasses.replace(sc.random_failures, count=nf)
            results = [run_replica(sc, r, graph=g) for r in range(sc.replicas)]
            for mode in ("tel", "baseline"):
                mean = statistics.fmean(r.metrics[mode].mean_throughput() for r in results)
                rows.append(f"{name},{nf},{mode},{mean:.1f}")
                print(f"{name:<8} failures={nf} {mode:<8} {mean / 1e6:.4f} Mbps")
    (out / "throughput.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
