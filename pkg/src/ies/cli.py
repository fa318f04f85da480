"""Command line entry point ``ies``.

Exit codes: 0 optimal, 2 gap or limit reached, 3 infeasible, 4 input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .conic import SolveOptions, dump_program
from .model import ScenarioError, apply_overrides, bundled, load_scenario

EXIT_OK, EXIT_LIMIT, EXIT_INFEASIBLE, EXIT_INPUT = 0, 2, 3, 4

log = logging.getLogger("ies")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "gap reached"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def status_code(status: str) -> int:
    if status == "optimal":
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    for name in (path, f"{path}.json"):
        cand = bundled(name)
        if cand.exists():
            return cand
    raise InputError(f"scenario {path!r} not found (neither a file nor a bundled fixture)")


def _scenario(args):
    scen = load_scenario(_resolve(args.scenario))
    if getattr(args, "override", None):
        pairs = {}
        for item in args.override:
            key, sep, value = item.partition("=")
            if not sep:
                raise InputError(f"override {item!r} must look like key=path.csv")
            pairs[key] = value
        scen = apply_overrides(scen, pairs)
    if getattr(args, "day", None):
        scen = scen.with_day(args.day)
    if getattr(args, "rho", None) is not None:
        scen = scen.with_rho(args.rho)
    if getattr(args, "delta_wp", None) is not None:
        scen = scen.with_delta_wp(args.delta_wp)
    return scen


def _options(args) -> SolveOptions:
    return SolveOptions(
        rel_gap_tol=args.gap, max_nodes=args.max_nodes,
        time_limit_s=args.time_limit if args.time_limit is not None else math.inf,
        branching=args.branching, node_order=args.node_order,
    )


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse value list {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args) -> int:
    from .dispatch import report, run, summary
    scen = _scenario(args)
    sol = run(scen, _options(args), with_p2g=not args.no_p2g, fleet=args.fleet)
    if args.out:
        report(sol, args.out)
    print(json.dumps(summary(sol), indent=2, sort_keys=True))
    return status_code(sol.status)


def cmd_sweep(args) -> int:
    from .dispatch import interior_minimum, sweep
    scen = _scenario(args)
    values = _floats(args.values)
    if args.param == "delta_wp" and any(v < 0 for v in values):
        raise InputError("curtailment penalties must be nonnegative")
    rows = sweep(scen, args.param, values, _options(args), with_p2g=not args.no_p2g, fleet=args.fleet)
    totals = [r.get("total", math.nan) for r in rows]
    k = interior_minimum(totals, args.gap)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        keys: List[str] = []
        for r in rows:
            keys += [key for key in r if key not in keys]
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        (out / "sweep.json").write_text(json.dumps(
            {"param": args.param, "rows": rows, "interior_minimum": k}, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"{args.param}={r[args.param]:g}  status={r['status']}  total={r.get('total', math.nan):.6f}")
    print("interior minimum:", "none" if k is None else f"{args.param}={values[k]:g}")
    codes = [status_code(r["status"]) if r["status"] != "error" else EXIT_LIMIT for r in rows]
    return max(codes)


def cmd_report(args) -> int:
    from .dispatch import DispatchSolution, report
    try:
        doc = json.loads(Path(args.solution).read_text())
        sol = DispatchSolution.from_dict(doc)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise InputError(f"cannot read solution {args.solution}: {exc}") from None
    for p in report(sol, args.out):
        print(p)
    return status_code(sol.status)


def cmd_validate(args) -> int:
    scen = _scenario(args)
    print(f"{scen.name}: ok ({len(scen.units)} units, {len(scen.power.buses)} buses, "
          f"{len(scen.gas.nodes)} gas nodes, {len(scen.gas.pipes)} pipes, {scen.horizon} slots)")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracles
    if args.kind == "mccormick":
        vals = _floats(args.point or "")
        if len(vals) != 8:
            raise InputError("--point needs dplus,dminus,lo_m,hi_m,lo_n,hi_n,pi_m,pi_n")
        lam = oracles.mccormick_min(vals[0], vals[1], (vals[2], vals[3]), (vals[4], vals[5]), vals[6], vals[7],
                                    literal=args.literal)
        print(f"lambda_min={lam!r}")
        return EXIT_OK
    if args.scenario is None:
        raise InputError(f"oracle {args.kind} needs a scenario")
    scen = _scenario(args)
    if args.kind == "uc":
        res = oracles.enumerate_uc(scen)
        print(json.dumps({"status": res.status, "objective": res.objective, "u": res.u}, sort_keys=True))
        return status_code(res.status)
    t = args.slot
    demands = {m: series[t] for m, series in scen.gas_demands.items()}
    res = oracles.grid_search_gas(scen.gas, demands, args.resolution)
    print(json.dumps({"status": res.status, "objective": res.objective, "pressure": res.pressure,
                      "flow": res.flow, "source": res.source}, sort_keys=True))
    return status_code(res.status)


def cmd_carbon(args) -> int:
    from .carbon import carbon_report, compare_fleets
    scen = _scenario(args)
    rows = compare_fleets(scen, options=_options(args), sign=-1 if args.credit_sign else 1)
    if args.out:
        carbon_report(rows, args.out)
    cols = list(scen.carbon.prices_usd)
    print("fleet      " + "  ".join(f"{c:>16}" for c in cols))
    for r in rows:
        print(f"{r['fleet']:<10} " + "  ".join(f"{r.get(c, math.nan):16.2f}" for c in cols))
    return EXIT_LIMIT if any(r["status"] != "optimal" for r in rows) else EXIT_OK


def cmd_dump(args) -> int:
    from .dispatch import assemble
    scen = _scenario(args)
    text = dump_program(assemble(scen, with_p2g=not args.no_p2g, fleet=args.fleet).program)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ies", description="Day-ahead electricity-gas dispatch with P2G and coal-to-hydrogen.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(sp, required=True):
        if required:
            sp.add_argument("scenario", help="scenario JSON file or bundled fixture name")
        else:
            sp.add_argument("scenario", nargs="?")
        sp.add_argument("--override", action="append", metavar="KEY=CSV",
                        help="replace a series: wind, mined, load:<bus>, gas_demand:<node>")
        sp.add_argument("--day", choices=("annual", "winter", "summer"))
        sp.add_argument("--rho", type=float)
        sp.add_argument("--delta-wp", dest="delta_wp", type=float)

    def solve_args(sp):
        sp.add_argument("--gap", type=float, default=1e-3, help="relative optimality gap")
        sp.add_argument("--max-nodes", type=int, default=100_000)
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--branching", choices=("most-fractional", "pseudo-cost"), default="most-fractional")
        sp.add_argument("--node-order", choices=("best-first", "depth-first"), default="best-first")
        sp.add_argument("--no-p2g", action="store_true")
        sp.add_argument("--fleet", choices=("hydrogen", "ev", "diesel"), default="hydrogen")

    sp = sub.add_parser("run", help="solve one day and write the reports")
    scenario_args(sp)
    solve_args(sp)
    sp.add_argument("--out", help="report directory")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="solve over a list of parameter values")
    scenario_args(sp)
    solve_args(sp)
    sp.add_argument("--param", choices=("delta_wp", "rho"), required=True)
    sp.add_argument("--values", required=True, help="comma separated, e.g. 0.01,0.05,0.08")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="rewrite the reports from a solution.json")
    sp.add_argument("solution")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("validate", help="check a scenario file")
    scenario_args(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("oracle", help="brute-force cross-checks on tiny instances")
    sp.add_argument("kind", choices=("uc", "gas", "mccormick"))
    scenario_args(sp, required=False)
    sp.add_argument("--slot", type=int, default=0)
    sp.add_argument("--resolution", type=int, default=201)
    sp.add_argument("--point", help="mccormick: dplus,dminus,lo_m,hi_m,lo_n,hi_n,pi_m,pi_n")
    sp.add_argument("--literal", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("carbon", help="carbon-adjusted comparison of truck fleets")
    scenario_args(sp)
    solve_args(sp)
    sp.add_argument("--credit-sign", action="store_true", help="subtract the priced net emissions instead")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_carbon)

    sp = sub.add_parser("dump", help="write the assembled program in the text interchange format")
    scenario_args(sp)
    sp.add_argument("--no-p2g", action="store_true")
    sp.add_argument("--fleet", choices=("hydrogen", "ev", "diesel"), default="hydrogen")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_dump)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, InputError, FileNotFoundError) as exc:
        print(f"ies: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"ies: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
