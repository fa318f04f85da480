"""Gas-side builders: nodal balance, flow directions, McCormick envelope and Weymouth cone."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .conic import ConicProgram, LinExpr, lsum
from .model import GasNetwork, GasPipe, Scenario

TIGHTNESS_TOL = 1e-4


def ends(pipe: GasPipe):
    """Pipe end points in canonical order (lower node id first) and the orientation sign.

    Builders work in this order so relabeling a pipe (m, n) as (n, m) emits
    the very same program; only the reported sign changes.
    """
    if pipe.frm <= pipe.to:
        return pipe.frm, pipe.to, 1.0
    return pipe.to, pipe.frm, -1.0


@dataclass
class GasVariables:
    """Handles indexed ``[node id][slot]`` and ``[pipe position][slot]``.

    ``fwd``/``bwd`` and ``dfwd``/``dbwd`` run along the canonical pipe order of
    :func:`ends`.  ``Fp``, ``Fm``, ``dplus``, ``dminus`` view them along the
    declared orientation.  ``F`` is the flow magnitude; the signed flow along
    the declared orientation is ``Fp - Fm``.
    """

    s: Dict[int, List[LinExpr]]
    pi: Dict[int, List[LinExpr]]
    fwd: List[List[LinExpr]]
    bwd: List[List[LinExpr]]
    dfwd: List[List[LinExpr]]
    dbwd: List[List[LinExpr]]
    lam: List[List[LinExpr]]
    orient: List[float] = field(default_factory=list)
    F: List[List[LinExpr]] = field(default_factory=list)

    def _view(self, same, other):
        return [a if o > 0 else b for a, b, o in zip(same, other, self.orient)]

    @property
    def Fp(self):
        return self._view(self.fwd, self.bwd)

    @property
    def Fm(self):
        return self._view(self.bwd, self.fwd)

    @property
    def dplus(self):
        return self._view(self.dfwd, self.dbwd)

    @property
    def dminus(self):
        return self._view(self.dbwd, self.dfwd)


def declare_gas_variables(prog: ConicProgram, net: GasNetwork, horizon: int) -> GasVariables:
    T = horizon
    s = {nd.id: [prog.var(f"s[{nd.id},{t}]", nd.s_lo, nd.s_hi) for t in range(T)] for nd in net.nodes}
    pi = {nd.id: [prog.var(f"pi[{nd.id},{t}]", nd.pi_lo, nd.pi_hi) for t in range(T)] for nd in net.nodes}
    fw, bw, dp, dm, lam, F, orient = [], [], [], [], [], [], []
    for pp in net.pipes:
        cap = net.flow_cap(pp)
        k = pp.id
        m, n, sign = ends(pp)
        fw.append([prog.var(f"Fp[{k},{t}]", 0.0, cap) for t in range(T)])
        bw.append([prog.var(f"Fm[{k},{t}]", 0.0, cap) for t in range(T)])
        dp.append([prog.var(f"dplus[{k},{t}]", binary=True) for t in range(T)])
        dm.append([prog.var(f"dminus[{k},{t}]", binary=True) for t in range(T)])
        a, b = net.node(m), net.node(n)
        spread = max(abs(a.pi_hi - b.pi_lo), abs(b.pi_hi - a.pi_lo)) or None
        lam.append([prog.var(f"lam[{k},{t}]", 0.0, scale=spread) for t in range(T)])
        F.append([fw[-1][t] + bw[-1][t] for t in range(T)])
        orient.append(sign)
    return GasVariables(s, pi, fw, bw, dp, dm, lam, orient, F)


def build_nodal_balance(prog: ConicProgram, net: GasNetwork, v: GasVariables, demands: Mapping[int, Sequence[float]],
                        injections: Optional[Mapping[int, Sequence[LinExpr]]] = None) -> None:
    """Outflow = inflow + source - demand + injection, per node and slot."""
    injections = injections or {}
    T = len(next(iter(v.s.values()))) if v.s else 0
    pairs = [ends(pp)[:2] for pp in net.pipes]
    for t in range(T):
        for nd in net.nodes:
            m = nd.id
            out = lsum(v.fwd[k][t] - v.bwd[k][t] for k, (a, _) in enumerate(pairs) if a == m)
            inflow = lsum(v.fwd[k][t] - v.bwd[k][t] for k, (_, b) in enumerate(pairs) if b == m)
            rhs = inflow + v.s[m][t] - (demands[m][t] if m in demands else 0.0)
            if m in injections:
                rhs = rhs + injections[m][t]
            prog.add(out == rhs, f"gasbal[{m},{t}]")


def build_direction_vars(prog: ConicProgram, net: GasNetwork, pipe_pos: int, v: GasVariables) -> None:
    """dplus + dminus = 1; each directional flow only on its own side."""
    pp = net.pipes[pipe_pos]
    cap = net.flow_cap(pp)
    for t in range(len(v.dfwd[pipe_pos])):
        dp, dm = v.dfwd[pipe_pos][t], v.dbwd[pipe_pos][t]
        prog.add(dp + dm == 1.0, f"dir[{pp.id},{t}]")
        prog.add(v.fwd[pipe_pos][t] <= cap * dp, f"fwdcap[{pp.id},{t}]")
        prog.add(v.bwd[pipe_pos][t] <= cap * dm, f"bwdcap[{pp.id},{t}]")
        prog.pair(dp, dm)
        prog.hint(dp, v.fwd[pipe_pos][t] - v.bwd[pipe_pos][t])


def mccormick_rows(d: LinExpr, x: LinExpr, x_lo: float, x_hi: float, literal: bool = False):
    """Envelope of lam = d * x for d in [-1, 1], x in [x_lo, x_hi].

    Returns ``(lower, upper)`` lists of expressions with ``lam >= lower`` and
    ``lam <= upper``.  Exact whenever d is at -1 or +1.  ``literal`` returns the
    four lower bounds in the sign pattern found in some published statements,
    which is not exact for reversed flow and is kept only for comparison.
    """
    if not (math.isfinite(x_lo) and math.isfinite(x_hi)):
        raise ValueError("McCormick envelope needs finite pressure boxes")
    if literal:
        return [
            -x + (d + 1) * x_lo,
            -x + (d - 1) * x_hi,
            -x + (d + 1) * x_hi,
            x + (d - 1) * x_lo,
        ], []
    lower = [-x + (d + 1) * x_lo, x + (d - 1) * x_hi]
    upper = [-x + (d + 1) * x_hi, x + (d - 1) * x_lo]
    return lower, upper


def build_mccormick(prog: ConicProgram, net: GasNetwork, pipe_pos: int, v: GasVariables,
                    literal: bool = False) -> None:
    """Tie lam to (dplus - dminus) * (pi_m - pi_n) with box-derived envelopes."""
    pp = net.pipes[pipe_pos]
    m, n, _ = ends(pp)
    a, b = net.node(m), net.node(n)
    x_lo, x_hi = a.pi_lo - b.pi_hi, a.pi_hi - b.pi_lo
    for t in range(len(v.lam[pipe_pos])):
        d = v.dfwd[pipe_pos][t] - v.dbwd[pipe_pos][t]
        x = v.pi[m][t] - v.pi[n][t]
        lam = v.lam[pipe_pos][t]
        lower, upper = mccormick_rows(d, x, x_lo, x_hi, literal)
        for r, e in enumerate(lower):
            prog.add(lam >= e, f"mcc_lo{r}[{pp.id},{t}]")
        for r, e in enumerate(upper):
            prog.add(lam <= e, f"mcc_up{r}[{pp.id},{t}]")


def build_soc(prog: ConicProgram, pipe: GasPipe, F: LinExpr, lam: LinExpr, name: str = "") -> None:
    """||(2F/C, lam - 1)|| <= lam + 1, i.e. (F/C)^2 <= lam."""
    if pipe.c <= 0:
        raise ValueError(f"pipe {pipe.id}: Weymouth constant must be positive")
    prog.add_soc(lam + 1.0, [F * (2.0 / pipe.c), lam - 1.0], name or f"weymouth[{pipe.id}]")


def norm_form_holds(F: float, C: float, lam: float) -> bool:
    """Membership in the cone exactly as ``build_soc`` states it."""
    return math.hypot(2.0 * F / C, lam - 1.0) <= lam + 1.0


def square_form_holds(F: float, C: float, lam: float) -> bool:
    return (F / C) ** 2 <= lam


def build_gas_network(prog: ConicProgram, net: GasNetwork, demands: Mapping[int, Sequence[float]], horizon: int,
                      injections: Optional[Mapping[int, Sequence[LinExpr]]] = None,
                      literal_mccormick: bool = False) -> GasVariables:
    v = declare_gas_variables(prog, net, horizon)
    for k, pp in enumerate(net.pipes):
        build_direction_vars(prog, net, k, v)
        build_mccormick(prog, net, k, v, literal_mccormick)
        for t in range(horizon):
            build_soc(prog, pp, v.F[k][t], v.lam[k][t], f"weymouth[{pp.id},{t}]")
    build_nodal_balance(prog, net, v, demands, injections)
    return v


def build_gas_side(prog: ConicProgram, scen: Scenario,
                   injections: Optional[Mapping[int, Sequence[LinExpr]]] = None,
                   literal_mccormick: bool = False) -> GasVariables:
    return build_gas_network(prog, scen.gas, scen.gas_demands, scen.horizon, injections, literal_mccormick)


def gas_program(net: GasNetwork, demands: Mapping[int, float],
                pressure_weights: Optional[Mapping[int, float]] = None):
    """Single-slot gas program: source cost plus optional linear pressure weights.

    A negative weight rewards a high pressure at that node, which pushes the
    relaxed pipes onto the cone boundary.  Returns ``(program, variables)``.
    """
    prog = ConicProgram("gas")
    v = build_gas_network(prog, net, {m: [d] for m, d in demands.items()}, 1)
    obj = net.gas_price * lsum(v.s[nd.id][0] for nd in net.nodes)
    for m, w in (pressure_weights or {}).items():
        obj = obj + w * v.pi[m][0]
    prog.minimize(obj)
    return prog, v


# ---------------------------------------------------------------------------
# tightness

@dataclass(frozen=True)
class TightnessReport:
    """Residuals lam - (F/C)^2 per pipe (rows) and slot (columns)."""

    pipe_ids: tuple
    residual: np.ndarray
    relative: np.ndarray
    tol: float = TIGHTNESS_TOL

    @property
    def max_relative(self) -> float:
        return float(self.relative.max()) if self.relative.size else 0.0

    @property
    def mean_relative(self) -> float:
        return float(self.relative.mean()) if self.relative.size else 0.0

    @property
    def max_residual(self) -> float:
        return float(self.residual.max()) if self.residual.size else 0.0

    def flagged(self) -> List[tuple]:
        """(pipe id, slot) pairs whose relative residual exceeds ``tol``."""
        rows, cols = np.nonzero(self.relative > self.tol)
        return [(self.pipe_ids[r], int(c)) for r, c in zip(rows, cols)]


def measure_tightness(pipes: Sequence[GasPipe], F: np.ndarray, lam: np.ndarray,
                      tol: float = TIGHTNESS_TOL) -> TightnessReport:
    """F and lam are arrays shaped (pipes, slots)."""
    if not pipes:
        return TightnessReport((), np.zeros((0, 0)), np.zeros((0, 0)), tol)
    F = np.asarray(F, dtype=float).reshape(len(pipes), -1)
    lam = np.asarray(lam, dtype=float).reshape(len(pipes), -1)
    C = np.array([pp.c for pp in pipes], dtype=float).reshape(-1, 1)
    res = lam - (F / C) ** 2
    rel = np.abs(res) / np.maximum(np.abs(lam), 1.0)
    return TightnessReport(tuple(pp.id for pp in pipes), res, rel, tol)
