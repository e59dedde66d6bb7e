"""Flow completion time quantiles for 4.5 KB flows under 1 and 2 failures.

    python scripts/run_fct.py [--topologies goodnet attmpls] [--cpd 500 1000]
"""

import argparse
import csv
import dataclasses
from pathlib import Path

from tel_lab.experiments import quantiles, run_replica
from tel_lab.scenario import Scenario

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--topologies", nargs="+", default=["goodnet", "attmpls"])
    ap.add_argument("--failures", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--cpd", type=float, nargs="+", default=[500.0, 1000.0])
    ap.add_argument("--out", default="results/fct")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fct_quantiles.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["topology", "failures", "cpd_ms", "mode"] + [f"q{10 * i}" for i in range(1, 10)])
        for name in args.topologies:
            sc = Scenario.load(ROOT / "scenarios" / f"{name}_fct.json")
            g = sc.build_graph()
            for nf in args.failures:
                for cpd in args.cpd:
                    sc.random_failures = dataclasses.replace(sc.random_failures, count=nf)
                    sc.sim = dataclasses.replace(sc.sim, control_plane_delay=cpd)
                    results = [run_replica(sc, r, graph=g) for r in range(sc.replicas)]
                    for mode in ("tel", "baseline"):
                        qs = quantiles([v for r in results for v in r.metrics[mode].fct.values()])
                        w.writerow([name, nf, cpd, mode] + [f"{q:g}" for q in qs])
                        print(f"{name:<8} {nf}f cpd={cpd:<6g} {mode:<8} " + " ".join(f"{q:g}" for q in qs))


if __name__ == "__main__":
    main()
