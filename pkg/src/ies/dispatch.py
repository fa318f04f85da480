"""Full-program assembly, solving, sweeps and CSV/JSON reports."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .conic import ConicProgram, SolveOptions, SolveResult, branch_and_bound, lsum
from .coupling import (CouplingVariables, build_coal_chain, build_hydrogen_balance, declare_coupling_variables,
                       p2g_consumption)
from .gas import GasVariables, build_gas_side, measure_tightness
from .model import Fleet, Scenario
from .power import UcVariables, build_power_side

log = logging.getLogger(__name__)

FLEETS = ("hydrogen", "ev", "diesel")
COST_KEYS = ("fuel", "start", "stop", "gas", "curtail", "truck", "coal_revenue", "total")


@dataclass
class Assembly:
    """A built program plus the handles needed to read a solution back."""

    scenario: Scenario
    program: ConicProgram
    power: UcVariables
    gas: GasVariables
    coupling: CouplingVariables
    with_p2g: bool
    fleet: Fleet
    charging_pu: List[float] = field(default_factory=list)


def resolve_fleet(scen: Scenario, kind: str = "hydrogen") -> Fleet:
    if kind not in FLEETS:
        raise ValueError(f"unknown fleet {kind!r}; expected one of {FLEETS}")
    if kind in scen.carbon.fleets:
        return scen.carbon.fleets[kind]
    if kind == "hydrogen":
        return Fleet("hydrogen", scen.prices.truck_cost_coeff)
    raise ValueError(f"scenario defines no {kind!r} fleet")


def _charging_bus(scen: Scenario, fleet: Fleet) -> int:
    if fleet.bus is not None:
        return fleet.bus
    if scen.p2g is not None:
        return scen.p2g.bus
    return scen.power.reference


def assemble(scen: Scenario, with_p2g: bool = True, fleet: str = "hydrogen",
             slack_penalty: Optional[float] = None, literal_mccormick: bool = False) -> Assembly:
    """Build the complete mixed-integer conic program for one day.

    ``with_p2g=False`` drops electrolysis and methanation but keeps coal
    gasification, so truck hydrogen stays suppliable.  Non-hydrogen fleets
    remove truck hydrogen demand; an EV fleet adds its charging load.
    """
    fl = resolve_fleet(scen, fleet)
    prog = ConicProgram(f"{scen.name}{'' if with_p2g else '-nop2g'}-{fl.kind}")
    T, h = scen.horizon, scen.slot_hours
    kw_per_pu = scen.power.base_mva * 1000.0

    cv = declare_coupling_variables(prog, scen, with_p2g)
    build_coal_chain(prog, scen, cv, trucks_use_h2=(fl.kind == "hydrogen"))
    penalty = build_hydrogen_balance(prog, scen, cv, slack_penalty)
    withdrawals: Dict[int, list] = {}
    p2g_load = p2g_consumption(prog, scen, cv)
    if p2g_load is not None:
        withdrawals[scen.p2g.bus] = list(p2g_load)

    charging = [0.0] * T
    if fl.kind == "ev" and scen.coal is not None and fl.kwh_per_ton > 0:
        bus = _charging_bus(scen, fl)
        # charging load follows the hauled tonnage (1 - beta) M
        exprs = []
        for t in range(T):
            k = fl.kwh_per_ton * scen.coal.mined[t] / h / kw_per_pu
            exprs.append(k * (1 - cv.beta[t]))
            charging[t] = k
        if bus in withdrawals:
            withdrawals[bus] = [a + b for a, b in zip(withdrawals[bus], exprs)]
        else:
            withdrawals[bus] = exprs

    uv = build_power_side(prog, scen, withdrawals)
    injections = None
    if cv.f_ch4 is not None and scen.p2g.gas_node is not None:
        injections = {scen.p2g.gas_node: cv.f_ch4}
    gv = build_gas_side(prog, scen, injections, literal_mccormick)

    # objective
    obj = lsum(lsum(row) for row in uv.fcost) + lsum(lsum(row) for row in uv.cu) + lsum(lsum(row) for row in uv.cd)
    obj = obj + scen.gas.gas_price * h * lsum(lsum(row) for row in gv.s.values())
    if scen.wind is not None and uv.Pw is not None:
        k = scen.wind.delta_wp * kw_per_pu * h
        obj = obj + k * lsum(scen.wind.availability[t] - uv.Pw[t] for t in range(T))
    if scen.coal is not None:
        margin = fl.truck_cost_coeff - scen.prices.coal_sale_price
        obj = obj + margin * lsum(scen.coal.mined[t] * (1 - cv.beta[t]) for t in range(T))
    if penalty is not None:
        obj = obj + penalty
    prog.minimize(obj)
    return Assembly(scen, prog, uv, gv, cv, bool(with_p2g and scen.p2g is not None), fl, charging)


# ---------------------------------------------------------------------------
# solution

@dataclass
class DispatchSolution:
    """Everything a report needs; arrays are nested lists for JSON round trips."""

    scenario: str
    with_p2g: bool
    fleet: str
    status: str
    objective: float
    bound: float
    nodes: int
    horizon: int
    slot_hours: float
    unit_ids: List[int]
    bus_ids: List[int]
    line_ids: List[int]
    node_ids: List[int]
    pipe_ids: List[int]
    u: List[List[int]]
    P: List[List[float]]
    fuel_tons: List[List[float]]
    Pw: List[float]
    availability: List[float]
    curtailment: List[float]
    Pl: List[List[float]]
    s: List[List[float]]
    pi: List[List[float]]
    flow: List[List[float]]
    F: List[List[float]]
    dplus: List[List[int]]
    lam: List[List[float]]
    beta: List[float]
    mined: List[float]
    f_h2: List[float]
    f_h2_prime: List[float]
    f_ch4: List[float]
    f_coal_h2: List[float]
    f_truck_h2: List[float]
    p2g_load_pu: List[float]
    charging_pu: List[float]
    costs: Dict[str, float]
    tightness: Dict[str, float]
    max_violation: float = 0.0
    message: str = ""
    base_mva: float = 100.0
    # effective tonnage-to-hydrogen coefficients (truck one is 0 for non-hydrogen fleets)
    alpha_coal: List[float] = field(default_factory=list)
    alpha_truck: List[float] = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.costs["total"]

    @property
    def gap(self) -> float:
        if not math.isfinite(self.objective):
            return math.inf
        return (self.objective - self.bound) / max(1.0, abs(self.objective))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, doc: dict) -> "DispatchSolution":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def _clean(v: float, digits: int = 10) -> float:
    """Round away solver noise so reports are stable and zeros are zeros."""
    r = round(float(v), digits)
    return 0.0 if r == 0 else r


def cost_breakdown(scen: Scenario, fleet: Fleet, u, P, Pw, s, beta) -> Dict[str, float]:
    """Cost terms evaluated from a schedule; ``total`` is their signed sum."""
    h = scen.slot_hours
    T = scen.horizon
    fuel = start = stop = 0.0
    for i, unit in enumerate(scen.units):
        prev = 1 if unit.initial_on else 0
        for t in range(T):
            fuel += h * unit.coal_price * unit.fuel_tons(P[i][t], u[i][t])
            if u[i][t] > prev:
                start += unit.start_cost
            elif u[i][t] < prev:
                stop += unit.stop_cost
            prev = u[i][t]
    gas = scen.gas.gas_price * h * sum(sum(row) for row in s)
    curtail = 0.0
    if scen.wind is not None:
        k = scen.wind.delta_wp * scen.power.base_mva * 1000.0 * h
        curtail = k * sum(max(scen.wind.availability[t] - Pw[t], 0.0) for t in range(T))
    hauled = 0.0
    if scen.coal is not None:
        hauled = sum(scen.coal.mined[t] * (1 - beta[t]) for t in range(T))
    truck = fleet.truck_cost_coeff * hauled
    revenue = scen.prices.coal_sale_price * hauled
    total = fuel + start + stop + gas + curtail + truck - revenue
    return {"fuel": fuel, "start": start, "stop": stop, "gas": gas, "curtail": curtail,
            "truck": truck, "coal_revenue": revenue, "total": total}


def extract(asm: Assembly, res: SolveResult) -> DispatchSolution:
    scen = asm.scenario
    T = scen.horizon
    uv, gv, cv = asm.power, asm.gas, asm.coupling
    units = scen.units
    pipes = scen.gas.pipes
    base = dict(
        scenario=scen.name, with_p2g=asm.with_p2g, fleet=asm.fleet.kind, status=res.status,
        objective=_clean(res.objective, 6) if res.x is not None else math.inf,
        bound=_clean(res.bound, 6) if math.isfinite(res.bound) else res.bound, nodes=res.nodes,
        horizon=T, slot_hours=scen.slot_hours, unit_ids=[un.id for un in units],
        bus_ids=list(scen.power.buses), line_ids=[ln.id for ln in scen.power.lines],
        node_ids=[nd.id for nd in scen.gas.nodes], pipe_ids=[pp.id for pp in pipes],
        availability=list(scen.wind.availability) if scen.wind is not None else [0.0] * T,
        mined=list(scen.coal.mined) if scen.coal is not None else [0.0] * T,
        charging_pu=[_clean(c) for c in asm.charging_pu], max_violation=float(res.max_violation),
        message=res.message, base_mva=scen.power.base_mva,
        alpha_coal=list(scen.coal.alpha_coal) if scen.coal is not None else [0.0] * T,
        alpha_truck=(list(scen.coal.alpha_truck) if scen.coal is not None and asm.fleet.kind == "hydrogen"
                     else [0.0] * T),
    )
    if res.x is None:
        empty = dict(u=[], P=[], fuel_tons=[], Pw=[], curtailment=[], Pl=[], s=[], pi=[], flow=[], F=[], dplus=[],
                     lam=[], beta=[], f_h2=[], f_h2_prime=[], f_ch4=[], f_coal_h2=[], f_truck_h2=[],
                     p2g_load_pu=[], costs={k: math.inf for k in COST_KEYS}, tightness={})
        return DispatchSolution(**base, **empty)
    x = res.x

    def val(e) -> float:
        return _clean(e.value(x))

    u = [[int(round(e.value(x))) for e in row] for row in uv.u]
    P = [[val(e) if u[i][t] else 0.0 for t, e in enumerate(row)] for i, row in enumerate(uv.P)]
    fuel_tons = [[_clean(units[i].fuel_tons(P[i][t], u[i][t])) for t in range(T)] for i in range(len(units))]
    Pw = [val(e) for e in uv.Pw] if uv.Pw is not None else [0.0] * T
    avail = base["availability"]
    curt = [_clean(max(avail[t] - Pw[t], 0.0)) for t in range(T)]
    zeros = [0.0] * T
    f_h2 = [val(e) for e in cv.f_h2] if cv.f_h2 is not None else zeros
    f_h2p = [val(e) for e in cv.f_h2_prime] if cv.f_h2_prime is not None else zeros
    f_ch4 = [val(e) for e in cv.f_ch4] if cv.f_ch4 is not None else zeros
    p2g_load = zeros
    if cv.cons_h2 is not None:
        kw = scen.power.base_mva * 1000.0
        p2g_load = [_clean((cv.cons_h2[t].value(x) + cv.cons_ch4[t].value(x)) / kw) for t in range(T)]
    s = [[val(e) for e in gv.s[nd.id]] for nd in scen.gas.nodes]
    pi = [[val(e) for e in gv.pi[nd.id]] for nd in scen.gas.nodes]
    Fp = np.array([[e.value(x) for e in row] for row in gv.Fp]).reshape(len(pipes), T)
    Fm = np.array([[e.value(x) for e in row] for row in gv.Fm]).reshape(len(pipes), T)
    lam = np.array([[e.value(x) for e in row] for row in gv.lam]).reshape(len(pipes), T)
    rep = measure_tightness(pipes, Fp + Fm, lam)
    beta = [min(max(val(e), 0.0), 1.0) for e in cv.beta]
    costs = {k: _clean(v, 6) for k, v in cost_breakdown(scen, asm.fleet, u, P, Pw, s, beta).items()}
    costs["total"] = _clean(sum(costs[k] for k in COST_KEYS[:6]) - costs["coal_revenue"], 6)
    tight = {
        "max_relative": _clean(rep.max_relative), "mean_relative": _clean(rep.mean_relative),
        "max_residual": _clean(rep.max_residual, 8), "flagged": len(rep.flagged()), "tol": rep.tol,
        "weymouth_c": [pp.c for pp in pipes],
    }
    return DispatchSolution(
        **base, u=u, P=P, fuel_tons=fuel_tons, Pw=Pw, curtailment=curt,
        Pl=[[val(e) for e in row] for row in uv.Pl], s=s, pi=pi,
        flow=[[_clean(v) for v in row] for row in (Fp - Fm)], F=[[_clean(v) for v in row] for row in (Fp + Fm)],
        dplus=[[int(round(e.value(x))) for e in row] for row in gv.dplus],
        lam=[[_clean(v) for v in row] for row in lam], beta=beta, f_h2=f_h2, f_h2_prime=f_h2p, f_ch4=f_ch4,
        f_coal_h2=[val(e) for e in cv.f_coal_h2], f_truck_h2=[val(e) for e in cv.f_truck_h2],
        p2g_load_pu=p2g_load, costs=costs, tightness=tight,
    )


def run(scen: Scenario, options: Optional[SolveOptions] = None, with_p2g: bool = True, fleet: str = "hydrogen",
        slack_penalty: Optional[float] = None, literal_mccormick: bool = False) -> DispatchSolution:
    asm = assemble(scen, with_p2g, fleet, slack_penalty, literal_mccormick)
    log.info("assembled %s: %s", asm.program.name, asm.program.count())
    res = branch_and_bound(asm.program, options or SolveOptions())
    log.info("%s: status %s objective %.6g nodes %d", asm.program.name, res.status, res.objective, res.nodes)
    return extract(asm, res)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_PARAMS = ("delta_wp", "rho")


def sweep(scen: Scenario, param: str, values: Sequence[float], options: Optional[SolveOptions] = None,
          with_p2g: bool = True, fleet: str = "hydrogen") -> List[dict]:
    """One row per value; failures are recorded in the row and the sweep continues."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        row = {param: float(v)}
        try:
            s = scen.with_delta_wp(v) if param == "delta_wp" else scen.with_rho(v)
            sol = run(s, options, with_p2g, fleet)
            row.update(status=sol.status, **sol.costs)
            row["curtailed_pu"] = _clean(sum(sol.curtailment))
        except Exception as exc:  # noqa: BLE001 - a failed point must not end the sweep
            log.warning("sweep point %s=%s failed: %s", param, v, exc)
            row.update(status="error", error=str(exc), total=math.nan)
        rows.append(row)
    return rows


def sweep_penalty(scen: Scenario, deltas: Sequence[float], options: Optional[SolveOptions] = None,
                  with_p2g: bool = True) -> List[dict]:
    if any(d < 0 for d in deltas):
        raise ValueError("curtailment penalties must be nonnegative")
    return sweep(scen, "delta_wp", deltas, options, with_p2g)


def interior_minimum(totals: Sequence[float], rel_tol: float = 0.0) -> Optional[int]:
    """Index of a strict interior minimum of the sequence, if any.

    With ``rel_tol`` every other point must exceed the minimum by more than
    ``rel_tol * |other|``; differences below the solve gap are not evidence.
    """
    if len(totals) < 3 or any(not math.isfinite(v) for v in totals):
        return None
    k = int(np.argmin(totals))
    if not 0 < k < len(totals) - 1:
        return None
    if all(totals[j] - totals[k] > rel_tol * max(1.0, abs(totals[j])) for j in range(len(totals)) if j != k):
        return k
    return None


# ---------------------------------------------------------------------------
# reports

REPORT_FILES = ("costs.csv", "unit_output.csv", "gas_state.csv", "coupling.csv", "tightness.csv", "summary.json")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def summary(sol: DispatchSolution) -> dict:
    """Run summary without timings, so identical runs give identical bytes."""
    return {
        "scenario": sol.scenario, "with_p2g": sol.with_p2g, "fleet": sol.fleet, "status": sol.status,
        "objective": sol.objective, "bound": sol.bound, "gap": _clean(sol.gap, 9), "nodes": sol.nodes,
        "total": sol.costs["total"], "costs": sol.costs,
        "curtailed_pu": _clean(sum(sol.curtailment)),
        "tightness": {k: v for k, v in sol.tightness.items() if k != "weymouth_c"},
        "max_violation": float(f"{sol.max_violation:.3e}"),
    }


def report(sol: DispatchSolution, out_dir: Union[str, Path]) -> List[Path]:
    """Write the six report files (plus ``solution.json``) into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    T = sol.horizon
    paths = [out / f for f in REPORT_FILES]
    _write_csv(paths[0], ("component", "value"), [(k, sol.costs[k]) for k in COST_KEYS[:-1]])
    _write_csv(paths[1], ("unit", "slot", "u", "P", "fuel_tons"),
               [(uid, t, sol.u[i][t], sol.P[i][t], sol.fuel_tons[i][t])
                for i, uid in enumerate(sol.unit_ids) for t in range(T)] if sol.u else [])
    rows = []
    if sol.s:
        for k, nid in enumerate(sol.node_ids):
            for t in range(T):
                rows.append(("node", nid, t, sol.s[k][t], sol.pi[k][t], "", "", ""))
        for k, pid in enumerate(sol.pipe_ids):
            for t in range(T):
                rows.append(("pipe", pid, t, "", "", sol.flow[k][t], sol.dplus[k][t], sol.lam[k][t]))
    _write_csv(paths[2], ("kind", "id", "slot", "source", "pi", "flow", "dplus", "lam"), rows)
    ac = sol.alpha_coal or [0.0] * T
    at = sol.alpha_truck or [0.0] * T
    _write_csv(paths[3], ("slot", "beta", "mined", "hauled", "alpha_coal", "alpha_truck", "f_h2", "f_h2_prime",
                          "f_ch4", "f_coal_h2", "f_truck_h2", "p2g_load_pu", "charging_pu", "availability", "Pw",
                          "curtailment", "slot_hours"),
               [(t, sol.beta[t], sol.mined[t], _clean(sol.mined[t] * (1.0 - sol.beta[t])), ac[t], at[t],
                 sol.f_h2[t], sol.f_h2_prime[t], sol.f_ch4[t], sol.f_coal_h2[t], sol.f_truck_h2[t],
                 sol.p2g_load_pu[t], sol.charging_pu[t], sol.availability[t], sol.Pw[t], sol.curtailment[t],
                 sol.slot_hours) for t in range(T)] if sol.beta else [])
    trows = []
    if sol.F:
        cs = sol.tightness.get("weymouth_c", [])
        for k, pid in enumerate(sol.pipe_ids):
            for t in range(T):
                r = sol.lam[k][t] - (sol.F[k][t] / cs[k]) ** 2
                trows.append((pid, t, sol.F[k][t], sol.lam[k][t], _clean(r, 8),
                              _clean(abs(r) / max(abs(sol.lam[k][t]), 1.0), 10)))
    _write_csv(paths[4], ("pipe", "slot", "F", "lam", "residual", "relative"), trows)
    paths[5].write_text(json.dumps(summary(sol), indent=2, sort_keys=True) + "\n")
    (out / "solution.json").write_text(json.dumps(sol.to_dict(), sort_keys=True) + "\n")
    return paths
