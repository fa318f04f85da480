"""CO2 ledger of a dispatch and the carbon-adjusted fleet comparison."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

from .conic import SolveOptions
from .dispatch import FLEETS, DispatchSolution, run
from .model import EmissionFactors, Scenario

log = logging.getLogger(__name__)

CARBON_FILES = ("carbon_report.csv", "carbon_report.json")


@dataclass(frozen=True)
class CarbonLedger:
    """Per-slot tCO2 figures plus the priced totals (USD)."""

    gross: tuple
    absorption: tuple
    net: tuple
    carbon_price: float
    carbon_cost: float
    base_total: float
    adjusted_total: float

    @property
    def net_total(self) -> float:
        return sum(self.net)


def _check_factors(f: EmissionFactors) -> None:
    for name in ("coal_gen", "c2h_process", "methanation_sink", "diesel_truck", "ev_grid"):
        if getattr(f, name) < 0:
            raise ValueError(f"emission factor {name} must be nonnegative")


def compute_ledger(sol: DispatchSolution, factors: EmissionFactors, carbon_price: float,
                   sign: int = 1) -> CarbonLedger:
    """Emissions, methanation absorption and the adjusted total of a solved dispatch.

    The adjusted total is ``total + sign * price * net``.  ``sign=1`` charges net
    emissions as a cost (absorption earns credit); ``sign=-1`` is the opposite
    reading where the priced term is subtracted.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    _check_factors(factors)
    T, h = sol.horizon, sol.slot_hours
    kw_per_pu = sol.base_mva * 1000.0
    gross, absorb = [], []
    for t in range(T):
        hauled = sol.mined[t] * (1.0 - sol.beta[t]) if sol.beta else 0.0
        g = factors.coal_gen * h * sum(row[t] for row in sol.fuel_tons) if sol.fuel_tons else 0.0
        g += factors.c2h_process * (sol.f_coal_h2[t] if sol.f_coal_h2 else 0.0)
        if sol.fleet == "diesel":
            g += factors.diesel_truck * hauled
        elif sol.fleet == "ev" and sol.beta:
            g += factors.ev_grid * sol.charging_pu[t] * (1.0 - sol.beta[t]) * kw_per_pu * h
        gross.append(g)
        absorb.append(factors.methanation_sink * h * (sol.f_ch4[t] if sol.f_ch4 else 0.0))
    net = [g - a for g, a in zip(gross, absorb)]
    cost = carbon_price * sum(net)
    return CarbonLedger(tuple(gross), tuple(absorb), tuple(net), carbon_price, cost,
                        sol.total, sol.total + sign * cost)


def compare_fleets(scen: Scenario, prices: Optional[Mapping[str, float]] = None,
                   options: Optional[SolveOptions] = None, sign: int = 1,
                   solutions: Optional[Mapping[str, DispatchSolution]] = None) -> List[dict]:
    """Adjusted totals for every fleet under every price, one row per fleet.

    ``prices`` maps a column name to USD per tCO2 and defaults to the
    scenario's prices.  A fleet whose solve fails gets an ``error`` entry and
    NaN cells.  Precomputed ``solutions`` are reused instead of solving again.
    """
    prices = dict(prices if prices is not None else scen.carbon.prices_usd)
    if not prices:
        raise ValueError("no carbon prices given")
    rows = []
    for fleet in FLEETS:
        row: Dict[str, object] = {"fleet": fleet}
        try:
            sol = solutions[fleet] if solutions and fleet in solutions else run(scen, options, fleet=fleet)
            if sol.status == "infeasible" or not math.isfinite(sol.total):
                raise RuntimeError(f"solve ended with status {sol.status}")
            row.update(status=sol.status, base_total=sol.total)
            for col, price in prices.items():
                led = compute_ledger(sol, scen.carbon.factors, price, sign)
                row[f"net_tco2_{col}"] = round(led.net_total, 6)
                row[col] = round(led.adjusted_total, 6)
        except Exception as exc:  # noqa: BLE001 - one bad cell must not hide the others
            log.warning("fleet %s failed: %s", fleet, exc)
            row.update(status="error", error=str(exc), base_total=math.nan, **{col: math.nan for col in prices})
        rows.append(row)
    return rows


def carbon_report(rows: Sequence[dict], out_dir: Union[str, Path]) -> List[Path]:
    """Write the fleet table as ``carbon_report.csv`` and ``carbon_report.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys: List[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    csv_path, json_path = out / CARBON_FILES[0], out / CARBON_FILES[1]
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    json_path.write_text(json.dumps(list(rows), indent=2, sort_keys=True) + "\n")
    return [csv_path, json_path]
