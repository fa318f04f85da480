"""Carbon-adjusted daily cost for hydrogen, electric and diesel truck fleets."""
import argparse

from ies.carbon import carbon_report, compare_fleets
from ies.conic import SolveOptions
from ies.model import bundled, load_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default=str(bundled()))
    ap.add_argument("--gap", type=float, default=1e-3)
    ap.add_argument("--credit-sign", action="store_true", help="subtract priced net emissions")
    ap.add_argument("--out", default="results/carbon")
    args = ap.parse_args()

    scen = load_scenario(args.scenario)
    rows = compare_fleets(scen, options=SolveOptions(rel_gap_tol=args.gap), sign=-1 if args.credit_sign else 1)
    carbon_report(rows, args.out)
    cols = list(scen.carbon.prices_usd)
    print(f"{'fleet':<10}{'operating':>16}" + "".join(f"{c:>16}" for c in cols))
    for r in rows:
        print(f"{r['fleet']:<10}{r['base_total']:>16.2f}" + "".join(f"{r[c]:>16.2f}" for c in cols))


if __name__ == "__main__":
    main()
