"""Power-side constraint builders: unit commitment, reserve, ramping and DC line flows."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence

from .conic import ConicProgram, LinExpr, encode_quadratic_epigraph, lsum
from .model import Scenario, ThermalUnit


@dataclass
class UcVariables:
    """Handles indexed ``[unit position][slot]`` / ``[bus or line position][slot]``."""

    u: List[List[LinExpr]]
    P: List[List[LinExpr]]
    fcost: List[List[LinExpr]]
    cu: List[List[LinExpr]]
    cd: List[List[LinExpr]]
    Pw: Optional[List[LinExpr]]
    theta: Dict[int, List[LinExpr]] = field(default_factory=dict)
    Pl: List[List[LinExpr]] = field(default_factory=list)


def declare_uc_variables(prog: ConicProgram, scen: Scenario) -> UcVariables:
    T = scen.horizon
    u, P, fc, cu, cd = [], [], [], [], []
    for unit in scen.units:
        k = unit.id
        u.append([prog.var(f"u[{k},{t}]", binary=True) for t in range(T)])
        P.append([prog.var(f"P[{k},{t}]", 0.0, unit.p_max) for t in range(T)])
        top = scen.slot_hours * unit.coal_price * unit.fuel_tons(unit.p_max)
        fc.append([prog.var(f"fcost[{k},{t}]", 0.0, scale=top or None) for t in range(T)])
        cu.append([prog.var(f"cu[{k},{t}]", 0.0, scale=unit.start_cost or None) for t in range(T)])
        cd.append([prog.var(f"cd[{k},{t}]", 0.0, scale=unit.stop_cost or None) for t in range(T)])
    Pw = None
    if scen.wind is not None:
        Pw = [prog.var(f"Pw[{t}]", 0.0, scen.wind.availability[t]) for t in range(T)]
    ref = scen.power.reference
    theta = {}
    if scen.power.lines:
        for b in scen.power.buses:
            if b == ref:
                theta[b] = [prog.var(f"theta[{b},{t}]", 0.0, 0.0) for t in range(T)]
            else:
                theta[b] = [prog.var(f"theta[{b},{t}]") for t in range(T)]
    Pl = [[prog.var(f"Pl[{ln.id},{t}]", ln.p_min, ln.p_max) for t in range(T)] for ln in scen.power.lines]
    return UcVariables(u, P, fc, cu, cd, Pw, theta, Pl)


def build_output_limits(prog: ConicProgram, unit: ThermalUnit, u: Sequence[LinExpr], P: Sequence[LinExpr]) -> None:
    """u*P_min <= P <= u*P_max, so an offline unit produces nothing."""
    for t, (ut, pt) in enumerate(zip(u, P)):
        prog.add(pt >= unit.p_min * ut, f"pmin[{unit.id},{t}]")
        prog.add(pt <= unit.p_max * ut, f"pmax[{unit.id},{t}]")


def build_fuel_cost(prog: ConicProgram, unit: ThermalUnit, P: LinExpr, u: LinExpr, fcost: LinExpr,
                    hours: float = 1.0, name: str = "") -> None:
    """fcost >= hours * coal_price * (a P^2 + b P + c u)."""
    if unit.a < 0:
        raise ValueError(f"unit {unit.id}: negative quadratic coefficient")
    k = hours * unit.coal_price
    encode_quadratic_epigraph(prog, k * unit.a, k * unit.b, k * unit.c, P, u, fcost, name)


def build_balance(prog: ConicProgram, scen: Scenario, v: UcVariables,
                  withdrawals: Optional[Mapping[int, Sequence[LinExpr]]] = None) -> None:
    """Nodal balance per bus and slot.

    Generation + wind - load - extra withdrawals (P2G, charging) equals the net
    line export of the bus.  Summed over buses this is the system balance; a
    network without lines gets the system balance directly.
    """
    withdrawals = withdrawals or {}
    T = scen.horizon
    lines = scen.power.lines
    if not lines:
        for t in range(T):
            gen = lsum(P[t] for P in v.P)
            if v.Pw is not None:
                gen = gen + v.Pw[t]
            extra = lsum(w[t] for w in withdrawals.values())
            prog.add(gen - extra == scen.load_at(t), f"balance[sys,{t}]")
        return
    zero = (0.0,) * T
    for t in range(T):
        for b in scen.power.buses:
            gen = lsum(v.P[i][t] for i, unit in enumerate(scen.units) if unit.bus == b)
            if v.Pw is not None and scen.wind.bus == b:
                gen = gen + v.Pw[t]
            extra = withdrawals[b][t] if b in withdrawals else 0.0
            export = lsum(v.Pl[pos][t] for pos, ln in enumerate(lines) if ln.frm == b) \
                - lsum(v.Pl[pos][t] for pos, ln in enumerate(lines) if ln.to == b)
            prog.add(gen - extra - scen.loads.get(b, zero)[t] == export, f"balance[{b},{t}]")


def build_reserve(prog: ConicProgram, scen: Scenario, v: UcVariables) -> None:
    """Committed headroom covers rho times the total load."""
    rho = scen.power.reserve_rho
    if not 0 <= rho < 1:
        raise ValueError(f"reserve coefficient {rho} outside [0, 1)")
    for t in range(scen.horizon):
        headroom = lsum(unit.p_max * v.u[i][t] - v.P[i][t] for i, unit in enumerate(scen.units))
        prog.add(headroom >= rho * scen.load_at(t), f"reserve[{t}]")


def capacity_requirement(scen: Scenario, t: int) -> float:
    """Committed capacity every feasible point needs in slot ``t``.

    Balance gives sum(P) >= max(0, load - wind) (extra withdrawals are
    nonnegative) and the reserve rule adds rho * load on top.
    """
    wind = scen.wind.availability[t] if scen.wind is not None else 0.0
    load = scen.load_at(t)
    return scen.power.reserve_rho * load + max(0.0, load - wind)


def minimal_covers(capacities: Sequence[float], need: float, max_units: int = 12) -> List[tuple]:
    """Minimal unit sets whose shutdown leaves less than ``need`` capacity."""
    n = len(capacities)
    if need <= 0 or n > max_units:
        return []
    total = sum(capacities)
    covers: List[tuple] = []
    for size in range(0, n + 1):
        for combo in itertools.combinations(range(n), size):
            if any(set(c) <= set(combo) for c in covers):
                continue
            if total - sum(capacities[i] for i in combo) < need - 1e-9:
                covers.append(combo)
    return covers


def build_capacity_cuts(prog: ConicProgram, scen: Scenario, v: UcVariables) -> int:
    """Cover inequalities sum(u[i] for i in C) >= 1 implied by the capacity requirement.

    They cut fractional commitments only; every integer-feasible schedule
    satisfies them.  Returns the number of rows added.
    """
    caps = [unit.p_max for unit in scen.units]
    added = 0
    for t in range(scen.horizon):
        for cover in minimal_covers(caps, capacity_requirement(scen, t)):
            prog.add(lsum(v.u[i][t] for i in cover) >= 1.0, f"cover[{t},{'-'.join(str(i) for i in cover)}]")
            added += 1
    return added


def build_ramp(prog: ConicProgram, unit: ThermalUnit, u: Sequence[LinExpr], P: Sequence[LinExpr]) -> None:
    """Ramp limits while online; start-up and shut-down steps may reach max(R, P_min)."""
    su = max(unit.ramp_up, unit.p_min)
    sd = max(unit.ramp_down, unit.p_min)
    prev_u: LinExpr = LinExpr(const=1.0 if unit.initial_on else 0.0)
    prev_p: LinExpr = LinExpr(const=unit.p_init)
    for t in range(len(P)):
        prog.add(P[t] - prev_p <= unit.ramp_up * prev_u + su * (1 - prev_u), f"rampup[{unit.id},{t}]")
        prog.add(prev_p - P[t] <= unit.ramp_down * u[t] + sd * (1 - u[t]), f"rampdn[{unit.id},{t}]")
        prev_u, prev_p = u[t], P[t]


def build_min_updown(prog: ConicProgram, unit: ThermalUnit, u: Sequence[LinExpr]) -> None:
    """Minimum down (TS) and up (TO) durations; windows are cut at the horizon end."""
    T = len(u)
    prev: LinExpr = LinExpr(const=1.0 if unit.initial_on else 0.0)
    for t in range(T):
        if unit.min_down > 1:
            end = min(t + unit.min_down, T)
            span = end - t
            prog.add(lsum(1 - u[k] for k in range(t, end)) >= span * (prev - u[t]), f"mindown[{unit.id},{t}]")
        if unit.min_up > 1:
            end = min(t + unit.min_up, T)
            span = end - t
            prog.add(lsum(u[k] for k in range(t, end)) >= span * (u[t] - prev), f"minup[{unit.id},{t}]")
        prev = u[t]


def build_startstop_costs(prog: ConicProgram, unit: ThermalUnit, u: Sequence[LinExpr],
                          cu: Sequence[LinExpr], cd: Sequence[LinExpr]) -> LinExpr:
    """Epigraphs of max(H*(u_t - u_{t-1}), 0) and max(J*(u_{t-1} - u_t), 0); returns their sum."""
    if unit.start_cost < 0 or unit.stop_cost < 0:
        raise ValueError(f"unit {unit.id}: negative start/stop cost")
    prev: LinExpr = LinExpr(const=1.0 if unit.initial_on else 0.0)
    for t in range(len(u)):
        prog.add(cu[t] >= unit.start_cost * (u[t] - prev), f"startcost[{unit.id},{t}]")
        prog.add(cd[t] >= unit.stop_cost * (prev - u[t]), f"stopcost[{unit.id},{t}]")
        prev = u[t]
    return lsum(cu) + lsum(cd)


def build_line_flows(prog: ConicProgram, scen: Scenario, v: UcVariables) -> None:
    """DC flow law Pl = (theta_from - theta_to) / x; limits sit on the Pl bounds."""
    for pos, ln in enumerate(scen.power.lines):
        for t in range(scen.horizon):
            prog.add(v.Pl[pos][t] == (v.theta[ln.frm][t] - v.theta[ln.to][t]) / ln.x, f"dcflow[{ln.id},{t}]")


def build_power_side(prog: ConicProgram, scen: Scenario,
                     withdrawals: Optional[Mapping[int, Sequence[LinExpr]]] = None,
                     cover_cuts: bool = True) -> UcVariables:
    """Declare all power variables and emit every power-side constraint."""
    v = declare_uc_variables(prog, scen)
    for i, unit in enumerate(scen.units):
        build_output_limits(prog, unit, v.u[i], v.P[i])
        for t in range(scen.horizon):
            build_fuel_cost(prog, unit, v.P[i][t], v.u[i][t], v.fcost[i][t], scen.slot_hours, f"fuel[{unit.id},{t}]")
        build_ramp(prog, unit, v.u[i], v.P[i])
        build_min_updown(prog, unit, v.u[i])
        build_startstop_costs(prog, unit, v.u[i], v.cu[i], v.cd[i])
    build_reserve(prog, scen, v)
    if cover_cuts:
        build_capacity_cuts(prog, scen, v)
    build_line_flows(prog, scen, v)
    build_balance(prog, scen, v, withdrawals)
    return v



def uc_program(scen: Scenario, cover_cuts: bool = True):
    """Commitment-only program: system balance, no lines, wind or coupling.

    Returns ``(program, variables)``; the objective is fuel plus start/stop cost.
    """
    bare = replace(scen, power=replace(scen.power, lines=()), wind=None)
    prog = ConicProgram(f"{scen.name}-uc")
    v = build_power_side(prog, bare, cover_cuts=cover_cuts)
    prog.minimize(lsum(lsum(r) for r in v.fcost) + lsum(lsum(r) for r in v.cu) + lsum(lsum(r) for r in v.cd))
    return prog, v
