"""Total cost across curtailment penalties, with the curtailed energy per point."""
import argparse
import csv
from pathlib import Path

from ies.conic import SolveOptions
from ies.dispatch import interior_minimum, sweep_penalty
from ies.model import bundled, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(bundled()))
    ap.add_argument("--deltas", default="0.01,0.05,0.08,0.12")
    ap.add_argument("--no-p2g", action="store_true")
    ap.add_argument("--gap", type=float, default=1e-3)
    ap.add_argument("--out", default="results/penalty_sweep")
    args = ap.parse_args()

    deltas = [float(v) for v in args.deltas.split(",")]
    rows = sweep_penalty(load_scenario(args.scenario), deltas, SolveOptions(rel_gap_tol=args.gap),
                         with_p2g=not args.no_p2g)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0])
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"delta={r['delta_wp']:<6g} total={r['total']:>16.2f} curtailed={r.get('curtailed_pu', 0):.4f} pu·slot")
    k = interior_minimum([r["total"] for r in rows], args.gap)
    print("interior minimum:", "none" if k is None else f"delta={deltas[k]:g}")


if __name__ == "__main__":
    main()
