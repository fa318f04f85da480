"""Coal gasification, truck hydrogen demand, P2G conversion and safety accounting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from .conic import ConicProgram, LinExpr
from .model import SafetyLimits, Scenario

H2_PER_CH4 = 4.0  # mol H2 consumed per mol CH4 in CO2 methanation


def _check_share(beta: float) -> None:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"gasification share beta={beta} outside [0, 1]")


def c2h_output(mined: float, beta: float, alpha_coal: float) -> float:
    """Hydrogen from gasifying a share ``beta`` of the mined coal."""
    _check_share(beta)
    return alpha_coal * beta * mined


def truck_demand(mined: float, beta: float, alpha_truck: float) -> float:
    """Hydrogen burnt by trucks hauling the coal that is not gasified."""
    _check_share(beta)
    return alpha_truck * (1.0 - beta) * mined


def p2g_load_kw(f_h2: float, f_ch4: float, alpha_h2: float, alpha_ch4_elec: float, alpha_ch4_meth: float) -> float:
    """Electric draw of the electrolysis + methanation train (kW)."""
    return alpha_h2 * f_h2 + (H2_PER_CH4 * alpha_ch4_elec + alpha_ch4_meth) * f_ch4


def energy_content(mass_kg: float, species: str, limits: SafetyLimits = SafetyLimits()) -> float:
    """Lower-heating energy (MJ) of a mass of H2 or CH4."""
    if mass_kg < 0:
        raise ValueError("mass must be nonnegative")
    q = {"h2": limits.q_h2, "ch4": limits.q_ch4}.get(species.lower())
    if q is None:
        raise ValueError(f"unknown species {species!r}")
    return mass_kg * q


def check_safety(c_h2: Optional[float], c_ch4: Optional[float], limits: SafetyLimits = SafetyLimits(),
                 literal: bool = False) -> List[str]:
    """Names of violated concentration windows (empty list means safe).

    By default a concentration inside a flammability or explosion window is a
    violation.  ``literal=True`` flips this and requires the concentration to
    sit inside each window instead.
    """
    windows = []
    if c_h2 is not None:
        windows += [("h2-flammable", c_h2, limits.lfl_h2, limits.ufl_h2),
                    ("h2-explosive", c_h2, limits.lel_h2, limits.uel_h2)]
    if c_ch4 is not None:
        windows += [("ch4-flammable", c_ch4, limits.lfl_ch4, limits.ufl_ch4),
                    ("ch4-explosive", c_ch4, limits.lel_ch4, limits.uel_ch4)]
    out = []
    for name, c, lo, hi in windows:
        if not 0.0 <= c <= 100.0:
            raise ValueError(f"concentration {c} outside [0, 100] vol-%")
        inside = lo <= c <= hi
        if inside != literal:
            out.append(name)
    return out


# ---------------------------------------------------------------------------
# builders

@dataclass
class CouplingVariables:
    """Per-slot handles; P2G entries are None when the plant is ablated."""

    beta: List[LinExpr]
    f_coal_h2: List[LinExpr]
    f_truck_h2: List[LinExpr]
    f_h2: Optional[List[LinExpr]] = None
    f_h2_prime: Optional[List[LinExpr]] = None
    f_ch4: Optional[List[LinExpr]] = None
    cons_h2: Optional[List[LinExpr]] = None
    cons_ch4: Optional[List[LinExpr]] = None
    slack_short: Optional[List[LinExpr]] = None
    slack_excess: Optional[List[LinExpr]] = None


def declare_coupling_variables(prog: ConicProgram, scen: Scenario, with_p2g: bool = True) -> CouplingVariables:
    T = scen.horizon
    beta = [prog.var(f"beta[{t}]", 0.0, 1.0) for t in range(T)]
    coal = scen.coal
    fc = [prog.var(f"f_coal_h2[{t}]", 0.0, scale=(coal.alpha_coal[t] * coal.mined[t] if coal else 0.0) or None)
          for t in range(T)]
    ft = [prog.var(f"f_truck_h2[{t}]", 0.0, scale=(coal.alpha_truck[t] * coal.mined[t] if coal else 0.0) or None)
          for t in range(T)]
    v = CouplingVariables(beta, fc, ft)
    if with_p2g and scen.p2g is not None:
        p = scen.p2g
        v.f_h2 = [prog.var(f"f_h2[{t}]", 0.0, p.f_h2_max) for t in range(T)]
        v.f_h2_prime = [prog.var(f"f_h2_prime[{t}]", 0.0, scale=4 * p.f_ch4_max or None) for t in range(T)]
        v.f_ch4 = [prog.var(f"f_ch4[{t}]", 0.0, p.f_ch4_max) for t in range(T)]
        v.cons_h2 = [prog.var(f"cons_h2[{t}]", 0.0, scale=p.alpha_h2_eff(t) * p.f_h2_max or None) for t in range(T)]
        v.cons_ch4 = [prog.var(f"cons_ch4[{t}]", 0.0, scale=p.f_ch4_max * (
            4 * p.alpha_ch4_elec_eff(t) + p.alpha_ch4_meth_eff(t)) or None) for t in range(T)]
    return v


def build_coal_chain(prog: ConicProgram, scen: Scenario, v: CouplingVariables, trucks_use_h2: bool = True) -> None:
    """Gasifier output and truck demand as linear functions of beta (m3 per slot)."""
    coal = scen.coal
    for t in range(scen.horizon):
        M = coal.mined[t] if coal is not None else 0.0
        a_coal = coal.alpha_coal[t] if coal is not None else 0.0
        a_truck = coal.alpha_truck[t] if coal is not None and trucks_use_h2 else 0.0
        prog.add(v.f_coal_h2[t] == a_coal * M * v.beta[t], f"c2h[{t}]")
        prog.add(v.f_truck_h2[t] == a_truck * M * (1 - v.beta[t]), f"truckh2[{t}]")


def build_hydrogen_balance(prog: ConicProgram, scen: Scenario, v: CouplingVariables,
                           slack_penalty: Optional[float] = None) -> Optional[LinExpr]:
    """Station hydrogen from P2G plus gasifier output meets truck demand each slot.

    With ``slack_penalty`` the balance gets nonnegative shortfall/excess
    slacks priced in the objective; the penalty expression is returned.
    """
    h = scen.slot_hours
    penalty = None
    if slack_penalty is not None:
        v.slack_short = [prog.var(f"h2_short[{t}]", 0.0) for t in range(scen.horizon)]
        v.slack_excess = [prog.var(f"h2_excess[{t}]", 0.0) for t in range(scen.horizon)]
        penalty = LinExpr()
    for t in range(scen.horizon):
        supply = v.f_coal_h2[t]
        if v.f_h2 is not None:
            supply = supply + h * v.f_h2[t]
        if slack_penalty is not None:
            supply = supply + v.slack_short[t] - v.slack_excess[t]
            penalty = penalty + slack_penalty * (v.slack_short[t] + v.slack_excess[t])
        prog.add(supply == v.f_truck_h2[t], f"h2bal[{t}]")
    return penalty


def p2g_consumption(prog: ConicProgram, scen: Scenario, v: CouplingVariables) -> Optional[List[LinExpr]]:
    """Stoichiometry and electric draw of the plant.

    Returns the per-slot electric load in p.u. for the power balance, or None
    when the plant is absent.
    """
    if v.f_h2 is None:
        return None
    p = scen.p2g
    kw_per_pu = scen.power.base_mva * 1000.0
    load = []
    for t in range(scen.horizon):
        prog.add(v.f_h2_prime[t] == H2_PER_CH4 * v.f_ch4[t], f"stoich[{t}]")
        prog.add(v.cons_h2[t] == p.alpha_h2_eff(t) * v.f_h2[t], f"cons_h2[{t}]")
        prog.add(v.cons_ch4[t] == p.alpha_ch4_elec_eff(t) * v.f_h2_prime[t] + p.alpha_ch4_meth_eff(t) * v.f_ch4[t],
                 f"cons_ch4[{t}]")
        load.append((v.cons_h2[t] + v.cons_ch4[t]) / kw_per_pu)
    return load
