"""Brute-force reference solvers for tiny instances.

Nothing here calls the model builders or the conic solver.  The equations are
re-derived from the raw scenario fields so that agreement with the main solver
means something.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from .model import GasNetwork, Scenario

MAX_UC_BINARIES = 12
MAX_GAS_NODES = 3


class OracleError(ValueError):
    """Instance outside what an oracle can handle, or a grid too coarse to hit it."""


# ---------------------------------------------------------------------------
# unit commitment by enumeration

@dataclass
class UcOracleResult:
    status: str
    objective: float
    u: List[List[int]] = field(default_factory=list)
    P: List[List[float]] = field(default_factory=list)
    patterns_checked: int = 0


def _durations_ok(u: Sequence[int], on0: bool, min_up: int, min_down: int) -> bool:
    T = len(u)
    prev = 1 if on0 else 0
    for t in range(T):
        if u[t] != prev:
            hold = min_up if u[t] == 1 else min_down
            if any(u[k] != u[t] for k in range(t, min(t + hold, T))):
                return False
        prev = u[t]
    return True


def _transition_cost(u: Sequence[int], on0: bool, start: float, stop: float) -> float:
    prev, total = (1 if on0 else 0), 0.0
    for v in u:
        if v > prev:
            total += start
        elif v < prev:
            total += stop
        prev = v
    return total


def _dispatch(units, pattern: np.ndarray, demand: Sequence[float], hours: float
              ) -> Optional[Tuple[float, np.ndarray]]:
    """Cheapest output for a fixed schedule, or None when none exists.

    A linear program first decides feasibility and supplies a start point,
    then SLSQP minimises the convex quadratic fuel cost.
    """
    N, T = pattern.shape
    idx = {}
    for i in range(N):
        for t in range(T):
            if pattern[i, t]:
                idx[i, t] = len(idx)
    n = len(idx)
    lo = np.zeros(n)
    hi = np.zeros(n)
    for (i, t), k in idx.items():
        lo[k], hi[k] = units[i].p_min, units[i].p_max
    A_eq = np.zeros((T, n))
    for (i, t), k in idx.items():
        A_eq[t, k] = 1.0
    b_eq = np.asarray(demand, dtype=float)
    rows, rhs = [], []
    for i, un in enumerate(units):
        p_prev = un.initial_p if un.initial_p is not None else (un.p_min if un.initial_on else 0.0)
        on_prev = bool(un.initial_on)
        start_step = max(un.ramp_up, un.p_min)
        stop_step = max(un.ramp_down, un.p_min)
        for t in range(T):
            on = bool(pattern[i, t])
            # P_t - P_{t-1} <= up ; P_{t-1} - P_t <= down, with P of an offline slot = 0
            up = un.ramp_up if on_prev else start_step
            down = un.ramp_down if on else stop_step
            for sign, limit in ((1.0, up), (-1.0, down)):
                row = np.zeros(n)
                const = 0.0
                if on:
                    row[idx[i, t]] += sign
                if t == 0:
                    const -= sign * p_prev
                elif pattern[i, t - 1]:
                    row[idx[i, t - 1]] -= sign
                rows.append(row)
                rhs.append(limit - const)
            on_prev = on
    A_ub = np.asarray(rows) if rows else None
    b_ub = np.asarray(rhs) if rows else None
    if n == 0:
        if np.any(np.abs(b_eq) > 1e-9) or (b_ub is not None and np.any(b_ub < -1e-9)):
            return None
        return 0.0, np.zeros(0)
    lp = linprog(np.zeros(n), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                 bounds=list(zip(lo, hi)), method="highs")
    if lp.status != 0:
        return None
    qa = np.array([units[i].a for (i, t) in idx]) * hours * np.array([units[i].coal_price for (i, t) in idx])
    qb = np.array([units[i].b for (i, t) in idx]) * hours * np.array([units[i].coal_price for (i, t) in idx])
    cons = [{"type": "eq", "fun": lambda x: A_eq @ x - b_eq, "jac": lambda x: A_eq}]
    if A_ub is not None:
        cons.append({"type": "ineq", "fun": lambda x: b_ub - A_ub @ x, "jac": lambda x: -A_ub})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # bound clipping inside SLSQP line search
        res = minimize(lambda x: float(qa @ (x * x) + qb @ x), lp.x, jac=lambda x: 2 * qa * x + qb,
                       bounds=list(zip(lo, hi)), constraints=cons, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 500})
    # SLSQP often stops with a line-search warning at the optimum; judge the point itself
    x, cost = lp.x, float(qa @ (lp.x * lp.x) + qb @ lp.x)
    cand = np.clip(res.x, lo, hi)
    feasible = np.all(np.abs(A_eq @ cand - b_eq) <= 1e-9) and (A_ub is None or np.all(A_ub @ cand <= b_ub + 1e-9))
    if feasible and float(qa @ (cand * cand) + qb @ cand) < cost:
        x, cost = cand, float(qa @ (cand * cand) + qb @ cand)
    P = np.zeros((N, T))
    for (i, t), k in idx.items():
        P[i, t] = x[k]
    return cost, P


def enumerate_uc(scen: Scenario) -> UcOracleResult:
    """Best commitment over all 2^(units*slots) schedules, system balance only.

    Lines, wind and coupling are ignored; reserve, ramping, minimum up/down
    times and start/stop costs are applied.
    """
    units = list(scen.units)
    N, T = len(units), scen.horizon
    if N * T > MAX_UC_BINARIES:
        raise OracleError(f"{N * T} commitment binaries exceed the enumeration limit {MAX_UC_BINARIES}")
    h, rho = scen.slot_hours, scen.power.reserve_rho
    demand = [scen.load_at(t) for t in range(T)]
    # admissible rows per unit, then all combinations of rows
    per_unit = []
    for un in units:
        rows = [r for r in itertools.product((0, 1), repeat=T)
                if _durations_ok(r, un.initial_on, un.min_up, un.min_down)]
        per_unit.append(rows)
    best = UcOracleResult("infeasible", math.inf)
    # fixed cost is a lower bound on a schedule only when output is never paid for
    prune = all(un.a >= 0 and un.b >= 0 for un in units)
    checked = 0
    for combo in itertools.product(*per_unit):
        pat = np.array(combo, dtype=int).reshape(N, T)
        cap = np.array([un.p_max for un in units]) @ pat
        floor = np.array([un.p_min for un in units]) @ pat
        if np.any(cap < (1.0 + rho) * np.asarray(demand) - 1e-12) or np.any(floor > np.asarray(demand) + 1e-12):
            continue
        fixed = sum(h * un.coal_price * un.c * sum(combo[i]) +
                    _transition_cost(combo[i], un.initial_on, un.start_cost, un.stop_cost)
                    for i, un in enumerate(units))
        if prune and fixed >= best.objective:
            continue
        checked += 1
        out = _dispatch(units, pat, demand, h)
        if out is None:
            continue
        total = fixed + out[0]
        if total < best.objective:
            best = UcOracleResult("optimal", total, pat.tolist(), out[1].tolist())
    best.patterns_checked = checked
    return best


# ---------------------------------------------------------------------------
# gas network by grid search

@dataclass
class GasOracleResult:
    status: str
    objective: float
    pressure: Dict[int, float] = field(default_factory=dict)
    flow: Dict[int, float] = field(default_factory=dict)
    source: Dict[int, float] = field(default_factory=dict)
    points: int = 0


def _tree_sides(net: GasNetwork) -> Dict[int, set]:
    """For each pipe, the node set on its 'from' side once the pipe is cut."""
    ids = [nd.id for nd in net.nodes]
    sides = {}
    for pp in net.pipes:
        seen, stack = {pp.frm}, [pp.frm]
        while stack:
            m = stack.pop()
            for q in net.pipes:
                if q is pp:
                    continue
                for a, b in ((q.frm, q.to), (q.to, q.frm)):
                    if a == m and b not in seen:
                        seen.add(b)
                        stack.append(b)
        if pp.to in seen:
            raise OracleError("grid search handles radial (tree) networks only")
        sides[pp.id] = seen
    reach = set()
    if ids:
        reach, stack = {ids[0]}, [ids[0]]
        while stack:
            m = stack.pop()
            for q in net.pipes:
                for a, b in ((q.frm, q.to), (q.to, q.frm)):
                    if a == m and b not in reach:
                        reach.add(b)
                        stack.append(b)
    if reach != set(ids):
        raise OracleError("gas network is not connected")
    return sides


def grid_search_gas(net: GasNetwork, demands: Mapping[int, float], resolution: int = 201,
                    pressure_weights: Optional[Mapping[int, float]] = None) -> GasOracleResult:
    """Cheapest operating point honouring the Weymouth equality exactly.

    Source outputs (all but one source, the last closes the balance) and the
    pressure of the first node are put on a grid.  Pipe flows then follow
    from the balance, and the other pressures follow from
    sign(f) f^2 = C^2 (pi_from - pi_to).  Every accepted grid point is
    therefore exactly feasible and the result is an upper bound on the true
    optimum.
    """
    nodes = list(net.nodes)
    if len(nodes) > MAX_GAS_NODES:
        raise OracleError(f"grid search handles at most {MAX_GAS_NODES} nodes")
    if resolution < 2:
        raise OracleError("resolution must be at least 2")
    sides = _tree_sides(net)
    weights = dict(pressure_weights or {})
    d = {nd.id: float(demands.get(nd.id, 0.0)) for nd in nodes}
    total = sum(d.values())
    if total > sum(nd.s_hi for nd in nodes) + 1e-9 or total < sum(nd.s_lo for nd in nodes) - 1e-9:
        return GasOracleResult("infeasible", math.inf)
    free = [nd for nd in nodes if nd.s_hi > nd.s_lo]
    fixed_src = {nd.id: nd.s_lo for nd in nodes if nd.s_hi <= nd.s_lo}
    grid_nodes, closer = free[:-1], (free[-1] if free else None)
    grids = [np.linspace(nd.s_lo, nd.s_hi, resolution) for nd in grid_nodes]
    root = nodes[0]
    best = GasOracleResult("infeasible", math.inf)
    points = 0
    for combo in itertools.product(*grids):
        src = dict(fixed_src)
        src.update({nd.id: float(v) for nd, v in zip(grid_nodes, combo)})
        if closer is not None:
            rest = total - sum(src.values())
            if rest < closer.s_lo - 1e-9 or rest > closer.s_hi + 1e-9:
                continue
            src[closer.id] = min(max(rest, closer.s_lo), closer.s_hi)
        elif abs(sum(src.values()) - total) > 1e-9:
            continue
        net_inj = {m: src[m] - d[m] for m in d}
        flow = {pp.id: sum(net_inj[m] for m in sides[pp.id]) for pp in net.pipes}
        cap_ok = True
        for pp in net.pipes:
            cap = pp.f_max if pp.f_max is not None else pp.c * math.sqrt(
                max(net.node(pp.frm).pi_hi, net.node(pp.to).pi_hi))
            if abs(flow[pp.id]) > cap + 1e-9:
                cap_ok = False
        if not cap_ok:
            continue
        # pressure offsets relative to the root follow from the tree
        offset = {root.id: 0.0}
        while len(offset) < len(nodes):
            for pp in net.pipes:
                drop = math.copysign(flow[pp.id] ** 2, flow[pp.id]) / pp.c ** 2
                if pp.frm in offset and pp.to not in offset:
                    offset[pp.to] = offset[pp.frm] - drop
                elif pp.to in offset and pp.frm not in offset:
                    offset[pp.frm] = offset[pp.to] + drop
        lo = max(nd.pi_lo - offset[nd.id] for nd in nodes)
        hi = min(nd.pi_hi - offset[nd.id] for nd in nodes)
        if lo > hi + 1e-12:
            continue
        cost_src = net.gas_price * sum(src.values())
        for pr in np.linspace(lo, hi, resolution) if hi > lo else [lo]:
            points += 1
            pi = {m: float(pr) + offset[m] for m in offset}
            obj = cost_src + sum(w * pi[m] for m, w in weights.items())
            if obj < best.objective - 1e-12:
                best = GasOracleResult("optimal", obj, pi, dict(flow), dict(src))
    best.points = points
    if best.status != "optimal":
        raise OracleError("no feasible grid point; refine the resolution or check pressure boxes")
    return best


# ---------------------------------------------------------------------------
# McCormick envelope

def mccormick_min(dplus: float, dminus: float, pi_m_box: Tuple[float, float], pi_n_box: Tuple[float, float],
                  pi_m: float, pi_n: float, literal: bool = False) -> float:
    """Smallest lam allowed by the envelope of lam = (dplus - dminus) * (pi_m - pi_n).

    Uses the textbook McCormick inequalities for w = d * x with
    d in [-1, 1] and x in [lo_m - hi_n, hi_m - lo_n].  ``literal=True`` instead
    takes the largest of the four lower bounds in the alternative sign
    pattern (which over-estimates reversed flow).
    """
    for box in (pi_m_box, pi_n_box):
        if not (math.isfinite(box[0]) and math.isfinite(box[1])) or box[0] > box[1]:
            raise OracleError("pressure boxes must be finite and ordered")
    d = dplus - dminus
    x = pi_m - pi_n
    xl = pi_m_box[0] - pi_n_box[1]
    xu = pi_m_box[1] - pi_n_box[0]
    if literal:
        return max(-x + (d + 1) * xl, -x + (d - 1) * xu, -x + (d + 1) * xu, x + (d - 1) * xl)
    dl, du = -1.0, 1.0
    lower = max(dl * x + d * xl - dl * xl, du * x + d * xu - du * xu)
    upper = min(du * x + d * xl - du * xl, dl * x + d * xu - dl * xu)
    if lower > upper + 1e-9 * (1.0 + abs(upper)):
        raise OracleError("point outside the boxes: envelope is empty")
    return lower
