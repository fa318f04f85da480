"""Daily cost with and without the P2G plant on the bundled fixture."""
import argparse
import json
from pathlib import Path

from ies.conic import SolveOptions
from ies.dispatch import COST_KEYS, report, run
from ies.model import bundled, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(bundled()))
    ap.add_argument("--day", default=None, choices=("annual", "winter", "summer"))
    ap.add_argument("--gap", type=float, default=1e-3)
    ap.add_argument("--out", default="results/p2g_comparison")
    args = ap.parse_args()

    scen = load_scenario(args.scenario)
    if args.day:
        scen = scen.with_day(args.day)
    opts = SolveOptions(rel_gap_tol=args.gap)
    out = Path(args.out)
    rows = {}
    for label, flag in (("with_p2g", True), ("without_p2g", False)):
        sol = run(scen, opts, with_p2g=flag)
        report(sol, out / label)
        rows[label] = sol.costs | {"status": sol.status, "curtailed_pu": sum(sol.curtailment)}
    w, wo = rows["with_p2g"]["total"], rows["without_p2g"]["total"]
    rows["reduction"] = (wo - w) / wo
    (out / "comparison.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")

    print(f"{'component':<14}{'with P2G':>16}{'without P2G':>16}")
    for k in COST_KEYS:
        print(f"{k:<14}{rows['with_p2g'][k]:>16.2f}{rows['without_p2g'][k]:>16.2f}")
    print(f"relative reduction from P2G: {100 * rows['reduction']:.2f} %")


if __name__ == "__main__":
    main()
