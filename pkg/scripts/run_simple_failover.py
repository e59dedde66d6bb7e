"""Single-link failover on the 5-switch topology, TEL against the baseline.

    python scripts/run_simple_failover.py [--cpd 1000] [--out results/simple]
"""

import argparse
import dataclasses
from pathlib import Path

from tel_lab.experiments import run_replica
from tel_lab.scenario import Scenario

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "simple.json"))
    ap.add_argument("--cpd", type=float, nargs="+", default=[1.0, 250.0, 500.0, 1000.0, 2000.0],
                    help="baseline control-plane delays to sweep (ms)")
    ap.add_argument("--out", default="results/simple")
    args = ap.parse_args()

    base = Scenario.load(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["cpd_ms,mode,recovery_ms,delivered_bytes"]
    for cpd in args.cpd:
        sc = dataclasses.replace(base, sim=dataclasses.replace(base.sim, control_plane_delay=cpd))
        res = run_replica(sc)
        if cpd == args.cpd[0]:
            (plan,) = res.plans
            print(f"primary {' -> '.join(plan.primary.nodes)}")
            print(f"backup  {' -> '.join(plan.backup.nodes) if plan.backup else '(none)'}")
        for mode, m in res.metrics.items():
            rec = m.recovery_time(0)
            rows.append(f"{cpd:g},{mode},{rec:g},{m.total_delivered:.0f}")
            print(f"cpd={cpd:>6g} ms  {mode:<8} recovered at {rec:g} ms, delivered {m.total_delivered:,.0f} B")
    (out / "failover.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
