"""Mixed-integer second-order cone programs: modelling layer, convex solve, branch and bound.

Programs are built incrementally through :class:`ConicProgram` using small affine
expressions (:class:`LinExpr`).  The continuous relaxation is handed to Clarabel
(a primal-dual interior point method for conic programs); the branch-and-bound
search over binary variables is implemented here.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import clarabel
import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

INF = math.inf
_SETTLED = ("Solved", "AlmostSolved", "PrimalInfeasible", "AlmostPrimalInfeasible", "DualInfeasible",
            "AlmostDualInfeasible")


class SolverError(RuntimeError):
    """Numerical failure of the convex subsolver; never swallowed silently."""


class LinExpr:
    """Affine expression ``sum(coef * x[idx]) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Dict[int, float]] = None, const: float = 0.0):
        self.terms = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def lift(other) -> "LinExpr":
        if isinstance(other, LinExpr):
            return other
        return LinExpr(const=float(other))

    @property
    def index(self) -> int:
        """Variable index of a bare variable expression."""
        if len(self.terms) != 1 or self.const != 0.0:
            raise ValueError("not a single variable")
        (idx, coef), = self.terms.items()
        if coef != 1.0:
            raise ValueError("not a single variable")
        return idx

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def __add__(self, other):
        other = LinExpr.lift(other)
        out = LinExpr(self.terms, self.const + other.const)
        for k, v in other.terms.items():
            out.terms[k] = out.terms.get(k, 0.0) + v
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-LinExpr.lift(other))

    def __rsub__(self, other):
        return LinExpr.lift(other) + (-self)

    def __mul__(self, k):
        if isinstance(k, LinExpr):
            raise TypeError("bilinear products are not affine")
        k = float(k)
        return LinExpr({i: v * k for i, v in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def __le__(self, other) -> "Constraint":
        return Constraint(self - other, "<=")

    def __ge__(self, other) -> "Constraint":
        return Constraint(LinExpr.lift(other) - self, "<=")

    def __eq__(self, other) -> "Constraint":  # type: ignore[override]
        return Constraint(self - other, "==")

    __hash__ = None  # type: ignore[assignment]

    def value(self, x: np.ndarray) -> float:
        return self.const + sum(v * x[k] for k, v in self.terms.items())

    def __repr__(self) -> str:
        body = " + ".join(f"{v:g}*x{k}" for k, v in sorted(self.terms.items()))
        return f"LinExpr({body or '0'} + {self.const:g})"


def lsum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        it = LinExpr.lift(it)
        out.const += it.const
        for k, v in it.terms.items():
            out.terms[k] = out.terms.get(k, 0.0) + v
    return out


@dataclass
class Constraint:
    """``expr <= 0`` or ``expr == 0``."""

    expr: LinExpr
    sense: str
    name: str = ""


@dataclass
class SocConstraint:
    """``|| args || <= head``."""

    head: LinExpr
    args: List[LinExpr]
    name: str = ""


@dataclass
class SolveOptions:
    rel_gap_tol: float = 1e-4
    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    abs_gap_tol: float = 0.0
    max_nodes: int = 100_000
    time_limit_s: float = INF
    branching: str = "most-fractional"
    node_order: str = "best-first"
    heuristic_every: int = 20
    # branch on binaries without a sign hint first; hinted ones are left to rounding
    hinted_last: bool = True

    def __post_init__(self):
        if self.rel_gap_tol <= 0 or self.feas_tol <= 0 or self.int_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.branching not in ("most-fractional", "pseudo-cost"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.node_order not in ("best-first", "depth-first"):
            raise ValueError(f"unknown node order {self.node_order!r}")


@dataclass
class SolveResult:
    status: str
    x: Optional[np.ndarray]
    objective: float
    bound: float
    nodes: int = 0
    cone_slack: Optional[np.ndarray] = None
    max_violation: float = 0.0
    message: str = ""
    elapsed_s: float = 0.0

    @property
    def gap(self) -> float:
        if self.x is None or not math.isfinite(self.bound):
            return INF
        return (self.objective - self.bound) / max(1.0, abs(self.objective))


class ConicProgram:
    """Minimise a linear objective over linear and second-order cone constraints.

    Variables are continuous or binary; binaries keep bounds within [0, 1].
    """

    def __init__(self, name: str = "program"):
        self.name = name
        self.names: List[str] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.binary: List[bool] = []
        self.scales: List[Optional[float]] = []
        self.linear: List[Constraint] = []
        self.socs: List[SocConstraint] = []
        self.objective = LinExpr()
        # binary -> binary fixed to 1 - value whenever the first is branched on
        self.complements: Dict[int, int] = {}
        # binary -> expression whose sign suggests the rounded value
        self.hints: Dict[int, LinExpr] = {}
        self._by_name: Dict[str, int] = {}

    # -- building -------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.names)

    def var(self, name: str, lb: float = -INF, ub: float = INF, binary: bool = False,
            scale: Optional[float] = None) -> LinExpr:
        """Declare a variable; ``scale`` is its typical magnitude (default: from bounds)."""
        if name in self._by_name:
            raise ValueError(f"duplicate variable {name!r}")
        if binary:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ValueError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        idx = len(self.names)
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.binary.append(bool(binary))
        self.scales.append(scale)
        self._by_name[name] = idx
        return LinExpr({idx: 1.0})

    def __getitem__(self, name: str) -> LinExpr:
        return LinExpr({self._by_name[name]: 1.0})

    def index(self, name: str) -> int:
        return self._by_name[name]

    def has(self, name: str) -> bool:
        return name in self._by_name

    def add(self, con: Constraint, name: str = "") -> Constraint:
        if not isinstance(con, Constraint):
            raise TypeError("expected a Constraint (use <=, >= or == on LinExpr)")
        self._check(con.expr)
        if name:
            con.name = name
        self.linear.append(con)
        return con

    def add_soc(self, head, args: Sequence, name: str = "") -> SocConstraint:
        head = LinExpr.lift(head)
        args = [LinExpr.lift(a) for a in args]
        for e in [head, *args]:
            self._check(e)
        cone = SocConstraint(head, args, name)
        self.socs.append(cone)
        return cone

    def minimize(self, expr) -> None:
        expr = LinExpr.lift(expr)
        self._check(expr)
        self.objective = expr

    def add_objective(self, expr) -> None:
        expr = LinExpr.lift(expr)
        self._check(expr)
        self.objective = self.objective + expr

    def pair(self, primary: LinExpr, complement: LinExpr) -> None:
        i, j = primary.index, complement.index
        if not (self.binary[i] and self.binary[j]):
            raise ValueError("only binaries can be paired")
        self.complements[i] = j

    def hint(self, binary: LinExpr, expr: LinExpr) -> None:
        self.hints[binary.index] = LinExpr.lift(expr)

    def _check(self, expr: LinExpr) -> None:
        n = len(self.names)
        for k in expr.terms:
            if not 0 <= k < n:
                raise ValueError(f"expression references undeclared variable {k}")

    # -- inspection -----------------------------------------------------
    def count(self) -> Dict[str, int]:
        return {
            "variables": self.n,
            "binaries": int(sum(self.binary)),
            "equalities": sum(1 for c in self.linear if c.sense == "=="),
            "inequalities": sum(1 for c in self.linear if c.sense == "<="),
            "cones": len(self.socs),
        }

    def values(self, x: np.ndarray, prefix: str) -> Dict[str, float]:
        return {nm: float(x[i]) for i, nm in enumerate(self.names) if nm.startswith(prefix)}

    def compile(self) -> "CompiledProgram":
        return CompiledProgram(self)


class CompiledProgram:
    """Sparse matrix form ``A x + s = b`` with ``s`` in zero x nonneg x SOC cones."""

    def __init__(self, prog: ConicProgram):
        self.prog = prog
        n = prog.n
        rows, cols, vals, b = [], [], [], []
        eqs = [c for c in prog.linear if c.sense == "=="]
        les = [c for c in prog.linear if c.sense == "<="]
        r = 0
        for con in itertools.chain(eqs, les):
            for k, v in con.expr.terms.items():
                if v != 0.0:
                    rows.append(r)
                    cols.append(k)
                    vals.append(v)
            b.append(-con.expr.const)
            r += 1
        self.n_eq, self.n_le = len(eqs), len(les)
        self.cone_dims = []
        for cone in prog.socs:
            for e in (cone.head, *cone.args):
                for k, v in e.terms.items():
                    if v != 0.0:
                        rows.append(r)
                        cols.append(k)
                        vals.append(-v)
                b.append(e.const)
                r += 1
            self.cone_dims.append(1 + len(cone.args))
        self.A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n))
        self.b = np.asarray(b, dtype=float)
        self.c = np.zeros(n)
        for k, v in prog.objective.terms.items():
            self.c[k] = v
        self.c0 = prog.objective.const
        self.lb = np.asarray(prog.lb, dtype=float)
        self.ub = np.asarray(prog.ub, dtype=float)
        self.binaries = np.flatnonzero(np.asarray(prog.binary, dtype=bool))
        self.n_lin = self.n_eq + self.n_le
        # column scaling: the inner solver sees x / col_scale
        self.col_scale = np.ones(n)
        for j in range(n):
            given = prog.scales[j]
            if given is not None and given > 0:
                self.col_scale[j] = given
            else:
                finite = [abs(v) for v in (self.lb[j], self.ub[j]) if math.isfinite(v)]
                self.col_scale[j] = max([1.0, *finite])
        cs = self.c * self.col_scale
        scale = np.max(np.abs(cs)) if n and np.any(cs) else 1.0
        self.obj_scale = max(scale, 1e-12)

    def solve(self, lb: np.ndarray, ub: np.ndarray, feas_tol: float = 1e-6) -> SolveResult:
        """Solve the convex program for the given variable bounds."""
        t0 = time.perf_counter()
        n = self.A.shape[1]
        if np.any(lb > ub + 1e-12):
            return SolveResult("infeasible", None, INF, INF, message="empty bounds")
        fixed = ub - lb <= 1e-12
        free = np.flatnonzero(~fixed)
        xfix = np.where(fixed, lb, 0.0)
        b = self.b - self.A @ xfix
        D = self.col_scale[free]
        A = self.A[:, free] @ sp.diags(D)
        const = self.c0 + float(self.c @ xfix)
        # drop linear rows that no longer involve free variables
        nnz = np.diff(A.tocsr().indptr)
        lin_empty = np.flatnonzero(nnz[: self.n_lin] == 0)
        if lin_empty.size:
            tol = 1e-7 * (1.0 + np.abs(self.b[lin_empty]))
            eq_part = lin_empty[lin_empty < self.n_eq]
            le_part = lin_empty[lin_empty >= self.n_eq]
            if np.any(np.abs(b[eq_part]) > tol[: eq_part.size]) or np.any(b[le_part] < -tol[eq_part.size:]):
                return SolveResult("infeasible", None, INF, INF, message="fixed variables violate a constraint")
        keep_eq = np.flatnonzero(nnz[: self.n_eq] > 0)
        keep_le = self.n_eq + np.flatnonzero(nnz[self.n_eq: self.n_lin] > 0)
        soc_rows = np.arange(self.n_lin, self.A.shape[0])
        # finite bounds on free variables become nonnegative rows
        lbf, ubf = lb[free] / D, ub[free] / D
        has_ub = np.flatnonzero(np.isfinite(ubf))
        has_lb = np.flatnonzero(np.isfinite(lbf))
        nf = free.size
        bound_A = sp.vstack([
            sp.csr_matrix((np.ones(has_ub.size), (np.arange(has_ub.size), has_ub)), shape=(has_ub.size, nf)),
            sp.csr_matrix((-np.ones(has_lb.size), (np.arange(has_lb.size), has_lb)), shape=(has_lb.size, nf)),
        ])
        bound_b = np.concatenate([ubf[has_ub], -lbf[has_lb]])
        Ar = A.tocsr()
        A_full = sp.vstack([Ar[keep_eq], Ar[keep_le], bound_A, Ar[soc_rows]]).tocsc()
        b_full = np.concatenate([b[keep_eq], b[keep_le], bound_b, b[soc_rows]])
        cones = []
        if keep_eq.size:
            cones.append(clarabel.ZeroConeT(int(keep_eq.size)))
        n_nonneg = keep_le.size + bound_b.size
        if n_nonneg:
            cones.append(clarabel.NonnegativeConeT(int(n_nonneg)))
        cones.extend(clarabel.SecondOrderConeT(d) for d in self.cone_dims)
        q = self.c[free] * D / self.obj_scale
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = 200
        # defaults (1e-8) leave ~1e-5 relative error on badly scaled columns
        settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = 1e-9
        if nf == 0:
            x = xfix.copy()
            res = SolveResult("optimal", x, const, const)
        else:
            sol = clarabel.DefaultSolver(sp.csc_matrix((nf, nf)), q, A_full, b_full, cones, settings).solve()
            status = str(sol.status)
            if status not in _SETTLED:
                # stalls on nearly infeasible nodes usually clear without equilibration
                settings.equilibrate_enable = False
                retry = clarabel.DefaultSolver(sp.csc_matrix((nf, nf)), q, A_full, b_full, cones, settings).solve()
                if str(retry.status) in _SETTLED:
                    sol, status = retry, str(retry.status)
            if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
                return SolveResult("infeasible", None, INF, INF, message=status,
                                   elapsed_s=time.perf_counter() - t0)
            if status in ("DualInfeasible", "AlmostDualInfeasible"):
                raise SolverError("relaxation is unbounded")
            x = xfix.copy()
            # interior-point iterates can sit a hair outside the box
            x[free] = np.clip(np.asarray(sol.x) * D, lb[free], ub[free])
            obj = float(self.c @ x) + self.c0
            bound = float(sol.obj_val_dual) * self.obj_scale + const
            if status not in ("Solved", "AlmostSolved"):
                viol = self.violation(x, lb, ub)
                if viol > feas_tol:
                    raise SolverError(
                        f"conic solve ended with {status}: r_prim={sol.r_prim:.3g} "
                        f"r_dual={sol.r_dual:.3g} violation={viol:.3g}")
                log.warning("accepting %s point with violation %.2g", status, viol)
            res = SolveResult("optimal", x, obj, min(bound, obj), message=status)
        res.max_violation = self.violation(res.x, lb, ub)
        res.cone_slack = self.cone_slack(res.x)
        res.elapsed_s = time.perf_counter() - t0
        return res

    def cone_slack(self, x: np.ndarray) -> np.ndarray:
        s = self.b[self.n_lin:] - self.A[self.n_lin:] @ x
        out, r = [], 0
        for d in self.cone_dims:
            out.append(s[r] - np.linalg.norm(s[r + 1: r + d]))
            r += d
        return np.asarray(out)

    def violation(self, x: np.ndarray, lb: Optional[np.ndarray] = None, ub: Optional[np.ndarray] = None) -> float:
        """Largest scaled primal violation of rows, cones and bounds."""
        lb = self.lb if lb is None else lb
        ub = self.ub if ub is None else ub
        Ax = self.A @ x
        scale = 1.0 + np.abs(self.b) + np.abs(self.A) @ np.abs(x)
        res = (Ax - self.b) / scale
        worst = 0.0
        if self.n_eq:
            worst = max(worst, float(np.max(np.abs(res[: self.n_eq]))))
        if self.n_le:
            worst = max(worst, float(np.max(res[self.n_eq: self.n_lin])))
        if self.cone_dims:
            s = self.b[self.n_lin:] - Ax[self.n_lin:]
            sc = scale[self.n_lin:]
            r = 0
            for d in self.cone_dims:
                gap = np.linalg.norm(s[r + 1: r + d]) - s[r]
                worst = max(worst, float(gap / np.max(sc[r: r + d])))
                r += d
        bscale = 1.0 + np.abs(x)
        with np.errstate(invalid="ignore"):
            worst = max(worst, float(np.max(np.nan_to_num((lb - x) / bscale, nan=0.0, neginf=0.0), initial=0.0)))
            worst = max(worst, float(np.max(np.nan_to_num((x - ub) / bscale, nan=0.0, neginf=0.0), initial=0.0)))
        return max(worst, 0.0)


def solve_relaxation(prog: ConicProgram, options: Optional[SolveOptions] = None) -> SolveResult:
    """Solve ``prog`` with every binary relaxed to [0, 1]."""
    options = options or SolveOptions()
    cp = prog.compile() if isinstance(prog, ConicProgram) else prog
    res = cp.solve(cp.lb.copy(), cp.ub.copy(), options.feas_tol)
    if res.x is not None and res.max_violation > options.feas_tol:
        raise SolverError(f"relaxation point violates constraints by {res.max_violation:.3g}")
    return res


def encode_quadratic_epigraph(prog: ConicProgram, a: float, b: float, c: float,
                              P: LinExpr, u, epi: LinExpr, name: str = "") -> None:
    """Constrain ``epi >= a*P**2 + b*P + c*u`` as a rotated cone.

    With ``w = epi - b*P - c*u`` the cone ``||(2*sqrt(a)*P, w - 1)|| <= w + 1`` is
    equivalent to ``a*P**2 <= w``.  ``a == 0`` gives a plain linear row.
    """
    if a < 0:
        raise ValueError(f"quadratic coefficient {a} < 0 makes the cost nonconvex")
    w = epi - b * P - c * LinExpr.lift(u)
    if a == 0:
        prog.add(w >= 0, name)
        return
    prog.add_soc(w + 1.0, [2.0 * math.sqrt(a) * P, w - 1.0], name)


# ---------------------------------------------------------------------------
# plain-text interchange

DUMP_HEADER = "ies-conic 1"


def _fmt(v: float) -> str:
    return repr(float(v))


def _expr_text(prog: ConicProgram, e: LinExpr) -> str:
    parts = [_fmt(e.const)]
    for k in sorted(e.terms):
        parts += [_fmt(e.terms[k]), prog.names[k]]
    return " ".join(parts)


def dump_program(prog: ConicProgram) -> str:
    """Serialise a program, one item per line (see docs/format.md)."""
    lines = [f"# {DUMP_HEADER}", f"program {prog.name}"]
    for j, nm in enumerate(prog.names):
        sc = f" {_fmt(prog.scales[j])}" if prog.scales[j] is not None else ""
        lines.append(f"var {nm} {_fmt(prog.lb[j])} {_fmt(prog.ub[j])} {'B' if prog.binary[j] else 'C'}{sc}")
    lines.append(f"obj {_expr_text(prog, prog.objective)}")
    for con in prog.linear:
        sense = "eq" if con.sense == "==" else "le"
        lines.append(f"{sense} {con.name or '-'} {_expr_text(prog, con.expr)}")
    for cone in prog.socs:
        body = " | ".join(_expr_text(prog, e) for e in (cone.head, *cone.args))
        lines.append(f"soc {cone.name or '-'} | {body}")
    for i, j in sorted(prog.complements.items()):
        lines.append(f"pair {prog.names[i]} {prog.names[j]}")
    return "\n".join(lines) + "\n"


def load_program(text: str) -> ConicProgram:
    """Inverse of :func:`dump_program`; raises ValueError on malformed lines."""
    prog = ConicProgram()

    def expr(tokens: List[str], lineno: int) -> LinExpr:
        if not tokens or len(tokens) % 2 != 1:
            raise ValueError(f"line {lineno}: expected 'const (coef name)*'")
        e = LinExpr(const=float(tokens[0]))
        for coef, nm in zip(tokens[1::2], tokens[2::2]):
            if not prog.has(nm):
                raise ValueError(f"line {lineno}: unknown variable {nm!r}")
            e = e + float(coef) * prog[nm]
        return e

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, *rest = line.split()
        if kind == "program":
            prog.name = rest[0] if rest else prog.name
        elif kind == "var":
            if len(rest) not in (4, 5) or rest[3] not in ("B", "C"):
                raise ValueError(f"line {lineno}: expected 'var name lb ub B|C [scale]'")
            prog.var(rest[0], float(rest[1]), float(rest[2]), binary=rest[3] == "B",
                     scale=float(rest[4]) if len(rest) == 5 else None)
        elif kind == "obj":
            prog.minimize(expr(rest, lineno))
        elif kind in ("eq", "le"):
            if not rest:
                raise ValueError(f"line {lineno}: missing constraint name")
            name = "" if rest[0] == "-" else rest[0]
            prog.add(Constraint(expr(rest[1:], lineno), "==" if kind == "eq" else "<="), name)
        elif kind == "soc":
            name = "" if rest[0] == "-" else rest[0]
            chunks = " ".join(rest[1:]).split("|")[1:]
            if len(chunks) < 2:
                raise ValueError(f"line {lineno}: a cone needs a head and at least one argument")
            es = [expr(c.split(), lineno) for c in chunks]
            prog.add_soc(es[0], es[1:], name)
        elif kind == "pair":
            prog.pair(prog[rest[0]], prog[rest[1]])
        else:
            raise ValueError(f"line {lineno}: unknown record {kind!r}")
    return prog


# ---------------------------------------------------------------------------
# branch and bound

@dataclass(order=True)
class _Node:
    key: Tuple
    bound: float = field(compare=False)
    lb: np.ndarray = field(compare=False, repr=False)
    ub: np.ndarray = field(compare=False, repr=False)
    depth: int = field(compare=False, default=0)
    branched: Optional[Tuple[int, int, float]] = field(compare=False, default=None)


class _PseudoCosts:
    def __init__(self):
        self.sum = {}
        self.cnt = {}

    def update(self, var: int, direction: int, gain: float, frac: float) -> None:
        if frac <= 1e-9 or not math.isfinite(gain):
            return
        key = (var, direction)
        self.sum[key] = self.sum.get(key, 0.0) + max(gain, 0.0) / frac
        self.cnt[key] = self.cnt.get(key, 0) + 1

    def score(self, var: int, f: float) -> Optional[float]:
        down = self.cnt.get((var, 0))
        up = self.cnt.get((var, 1))
        if not down or not up:
            return None
        gd = self.sum[(var, 0)] / down * f
        gu = self.sum[(var, 1)] / up * (1 - f)
        return max(gd, 1e-6) * max(gu, 1e-6)


def _fractional(x: np.ndarray, cands: np.ndarray, tol: float) -> np.ndarray:
    f = x[cands]
    dist = np.minimum(f, 1.0 - f)
    return cands[dist > tol]


def branch_and_bound(prog: ConicProgram, options: Optional[SolveOptions] = None) -> SolveResult:
    """Solve the mixed-integer program to ``options.rel_gap_tol``.

    Deterministic for fixed options: nodes are ordered by (bound, creation id)
    and branching ties go to the lowest variable index.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    cp = prog.compile() if isinstance(prog, ConicProgram) else prog
    prog = cp.prog
    comp = prog.complements
    secondary = set(comp.values())
    cands = np.asarray([j for j in cp.binaries if j not in secondary], dtype=int)
    pc = _PseudoCosts()

    best_x: Optional[np.ndarray] = None
    best_obj = INF
    counter = itertools.count()
    open_nodes: List[_Node] = []
    explored = 0
    status = None

    def push(node_bound, lb, ub, depth, branched):
        nid = next(counter)
        if options.node_order == "best-first":
            key = (node_bound, nid)
        else:
            key = (-depth, nid)
        heapq.heappush(open_nodes, _Node(key, node_bound, lb, ub, depth, branched))

    def cutoff() -> float:
        if best_x is None:
            return INF
        return best_obj - max(options.rel_gap_tol * max(1.0, abs(best_obj)), options.abs_gap_tol)

    def fix(lb, ub, j, val):
        lb[j] = ub[j] = val
        k = comp.get(j)
        if k is not None:
            lb[k] = ub[k] = 1.0 - val

    def try_incumbent(lb, ub, xbin_vals) -> bool:
        nonlocal best_x, best_obj
        lb2, ub2 = lb.copy(), ub.copy()
        for j, v in zip(cp.binaries, xbin_vals):
            lb2[j] = ub2[j] = v
        try:
            res = cp.solve(lb2, ub2, options.feas_tol)
        except SolverError as exc:
            log.debug("incumbent polish failed: %s", exc)
            return False
        if res.x is None or res.max_violation > options.feas_tol:
            return False
        if best_x is None or res.objective < best_obj - 1e-12 * max(1.0, abs(best_obj)):
            best_x, best_obj = res.x, res.objective
            log.info("node %d: incumbent %.10g", explored, best_obj)
            return True
        return False

    def rounding(x, lb, ub) -> None:
        vals = x[cp.binaries]
        tried = set()
        for thr in (0.5, 0.1, 1e-3):
            r = np.empty_like(vals)
            for pos, j in enumerate(cp.binaries):
                if lb[j] == ub[j]:
                    r[pos] = lb[j]
                elif j in prog.hints:
                    r[pos] = 1.0 if prog.hints[j].value(x) > 0 else 0.0
                elif j in secondary:
                    r[pos] = np.nan
                elif j in comp:
                    r[pos] = 1.0 if vals[pos] >= 0.5 else 0.0
                else:
                    r[pos] = 1.0 if vals[pos] >= thr else 0.0
            where = {j: p for p, j in enumerate(cp.binaries)}
            for i, k in comp.items():
                r[where[k]] = 1.0 - r[where[i]]
            key = r.tobytes()
            if key in tried:
                continue
            tried.add(key)
            if try_incumbent(lb, ub, r):
                return

    root_lb, root_ub = cp.lb.copy(), cp.ub.copy()
    push(-INF, root_lb, root_ub, 0, None)
    pruned_bound = INF
    while open_nodes:
        if explored >= options.max_nodes:
            status = "node-limit"
            break
        if time.perf_counter() - t0 > options.time_limit_s:
            status = "time-limit"
            break
        node = heapq.heappop(open_nodes)
        if node.bound >= cutoff():
            pruned_bound = min(pruned_bound, node.bound)
            continue
        explored += 1
        try:
            res = cp.solve(node.lb, node.ub, options.feas_tol)
        except SolverError as exc:
            raise SolverError(f"node {explored} (depth {node.depth}): {exc}") from exc
        if res.x is None:
            continue
        nb = max(res.bound, node.bound)
        if node.branched is not None and options.branching == "pseudo-cost":
            var, direction, frac = node.branched
            pc.update(var, direction, nb - node.bound, frac)
        if nb >= cutoff():
            pruned_bound = min(pruned_bound, nb)
            continue
        frac = _fractional(res.x, cands, options.int_tol)
        if frac.size == 0:
            try_incumbent(node.lb, node.ub, np.round(res.x[cp.binaries]))
            continue
        only_hinted = all(int(j) in prog.hints for j in frac)
        if explored == 1 or only_hinted or explored % options.heuristic_every == 0:
            rounding(res.x, node.lb, node.ub)
            if nb >= cutoff():
                pruned_bound = min(pruned_bound, nb)
                continue
        pool = frac
        if options.hinted_last and not only_hinted:
            pool = np.asarray([j for j in frac if int(j) not in prog.hints], dtype=int)
        j = _choose(res.x, pool, options.branching, pc)
        fj = float(res.x[j])
        for val in (0.0, 1.0):
            lb, ub = node.lb.copy(), node.ub.copy()
            fix(lb, ub, j, val)
            push(nb, lb, ub, node.depth + 1, (j, int(val), fj if val == 0.0 else 1.0 - fj))
        if options.node_order == "best-first" and open_nodes and best_x is not None:
            lowest = min(open_nodes[0].bound, pruned_bound)
            if (best_obj - lowest) / max(1.0, abs(best_obj)) <= options.rel_gap_tol:
                break
    open_bound = min((nd.bound for nd in open_nodes), default=INF)
    bound = min(open_bound, pruned_bound)
    if best_x is None:
        return SolveResult(status or "infeasible", None, INF, bound, nodes=explored,
                           elapsed_s=time.perf_counter() - t0)
    bound = min(bound, best_obj)
    if status is None:
        gap = (best_obj - bound) / max(1.0, abs(best_obj))
        status = "optimal" if gap <= options.rel_gap_tol else "gap-limit"
    res = SolveResult(status, best_x, best_obj, bound, nodes=explored,
                      cone_slack=cp.cone_slack(best_x), max_violation=cp.violation(best_x),
                      elapsed_s=time.perf_counter() - t0)
    return res


def _choose(x: np.ndarray, frac: np.ndarray, rule: str, pc: _PseudoCosts) -> int:
    f = x[frac]
    dist = np.minimum(f, 1.0 - f)
    if rule == "pseudo-cost":
        best, best_score = None, -INF
        for j, fj in zip(frac, f):
            s = pc.score(int(j), float(fj))
            if s is not None and s > best_score + 1e-12:
                best, best_score = int(j), s
        if best is not None:
            return best
    # most fractional, lowest index on ties (frac is sorted ascending)
    return int(frac[int(np.argmax(dist >= dist.max() - 1e-12))])
