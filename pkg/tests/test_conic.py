import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ies.conic import (ConicProgram, LinExpr, SolveOptions, branch_and_bound, dump_program,
                       encode_quadratic_epigraph, load_program, lsum, solve_relaxation)
from ies.oracles import enumerate_uc

from conftest import uc_scenario, unit_doc
from ies.power import uc_program


def test_unit_cone_minimum():
    p = ConicProgram()
    x = p.var("x")
    p.add_soc(1.0, [x, LinExpr(const=0.0)])
    p.minimize(x)
    res = solve_relaxation(p)
    assert res.x[0] == pytest.approx(-1.0, abs=1e-7)


def test_epigraph_minimum_with_fixed_flow():
    p = ConicProgram()
    F = p.var("F", 3.0, 3.0)
    lam = p.var("lam")
    p.add_soc(lam + 1.0, [2.0 * F / 1.0, lam - 1.0])
    p.minimize(lam)
    assert solve_relaxation(p).objective == pytest.approx(9.0, abs=1e-6)


def test_increasing_fuel_cost_sits_at_lower_limit(fixture_scenario):
    unit = fixture_scenario.units[1]
    p = ConicProgram()
    P = p.var("P", 0.25, 1.0)
    f = p.var("f")
    encode_quadratic_epigraph(p, unit.a, unit.b, unit.c, P, 1.0, f)
    p.minimize(f)
    res = solve_relaxation(p)
    assert res.x[0] == pytest.approx(0.25, abs=1e-6)


def test_pure_square_epigraph():
    p = ConicProgram()
    P = p.var("P", 2.0, 2.0)
    f = p.var("f")
    encode_quadratic_epigraph(p, 1.0, 0.0, 0.0, P, 0.0, f)
    p.minimize(f)
    res = solve_relaxation(p)
    assert res.objective == pytest.approx(4.0, abs=1e-6)
    assert res.cone_slack[0] == pytest.approx(0.0, abs=1e-5)


def test_linear_cost_emits_no_cone():
    p = ConicProgram()
    P, f = p.var("P", 0, 1), p.var("f")
    encode_quadratic_epigraph(p, 0.0, 2.0, 1.0, P, 1.0, f)
    assert not p.socs and len(p.linear) == 1


def test_quadratic_epigraph_rejects_negative_curvature():
    p = ConicProgram()
    with pytest.raises(ValueError):
        encode_quadratic_epigraph(p, -1.0, 0, 0, p.var("P"), 1.0, p.var("f"))


def test_table_unit_three_cost_at_point_six(fixture_scenario):
    unit = fixture_scenario.units[2]
    p = ConicProgram()
    P = p.var("P", 0.6, 0.6)
    f = p.var("f")
    encode_quadratic_epigraph(p, unit.a, unit.b, unit.c, P, 1.0, f)
    p.minimize(f)
    assert solve_relaxation(p).objective == pytest.approx(1074.246, abs=1e-3)


def test_integral_root_needs_no_branching():
    p = ConicProgram()
    z = p.var("z", binary=True)
    x = p.var("x", 0, 5)
    p.add(x >= 2.0 * z)
    p.minimize(x - 3.0 * z)
    res = branch_and_bound(p)
    assert res.status == "optimal" and res.nodes == 1
    assert res.x[0] == pytest.approx(1.0)
    assert res.objective == pytest.approx(-1.0, abs=1e-7)


def test_single_unit_two_slots_matches_enumeration():
    scen = uc_scenario([unit_doc(1, p_min=0.2, p_max=1.0, c=5.0, start_cost=3.0, stop_cost=1.0,
                                 initial_on=False)], [0.0, 0.5], rho=0.0)
    oracle = enumerate_uc(scen)
    prog, _ = uc_program(scen)
    res = branch_and_bound(prog, SolveOptions(rel_gap_tol=1e-9))
    assert oracle.u == [[0, 1]]
    assert res.objective == pytest.approx(oracle.objective, rel=1e-6)


def test_infeasible_program_reports_status():
    p = ConicProgram()
    z = p.var("z", binary=True)
    p.add(z >= 0.3)
    p.add(z <= 0.7)
    p.minimize(z)
    assert branch_and_bound(p).status == "infeasible"


def test_node_limit_is_honest():
    # knapsack that needs branching
    p = ConicProgram()
    zs = [p.var(f"z{i}", binary=True) for i in range(8)]
    w = [3, 5, 7, 9, 11, 13, 15, 17]
    p.add(lsum(wi * z for wi, z in zip(w, zs)) >= 26.5)
    p.minimize(lsum((wi + 0.1 * i) * z for i, (wi, z) in enumerate(zip(w, zs))))
    res = branch_and_bound(p, SolveOptions(max_nodes=2))
    assert res.status in ("node-limit", "optimal")
    if res.status == "node-limit":
        assert res.nodes == 2


def test_options_validate():
    with pytest.raises(ValueError):
        SolveOptions(rel_gap_tol=0)
    with pytest.raises(ValueError):
        SolveOptions(branching="random")
    with pytest.raises(ValueError):
        SolveOptions(node_order="breadth-first")


def test_binary_bounds_clamped_and_duplicates_rejected():
    p = ConicProgram()
    p.var("z", -3, 7, binary=True)
    assert (p.lb[0], p.ub[0]) == (0.0, 1.0)
    with pytest.raises(ValueError):
        p.var("z")


def test_undeclared_variable_rejected():
    p = ConicProgram()
    p.var("x")
    with pytest.raises(ValueError):
        p.minimize(LinExpr({5: 1.0}))


def test_deterministic_node_counts():
    def build():
        p = ConicProgram()
        zs = [p.var(f"z{i}", binary=True) for i in range(10)]
        y = p.var("y", 0, 10)
        p.add(lsum((i + 2) * z for i, z in enumerate(zs)) + y >= 17.5)
        p.add_soc(y + 1.0, [lsum(zs) * 0.3, y - 1.0])
        p.minimize(lsum((1.5 + 0.37 * i) * z for i, z in enumerate(zs)) + 2.0 * y)
        return p
    a, b = branch_and_bound(build()), branch_and_bound(build())
    assert a.nodes == b.nodes and np.array_equal(a.x, b.x) and a.objective == b.objective


@pytest.mark.parametrize("order", ["best-first", "depth-first"])
@pytest.mark.parametrize("rule", ["most-fractional", "pseudo-cost"])
def test_search_variants_agree(order, rule):
    p = ConicProgram()
    zs = [p.var(f"z{i}", binary=True) for i in range(7)]
    w = [4, 6, 7, 9, 10, 12, 15]
    p.add(lsum(wi * z for wi, z in zip(w, zs)) >= 23.5)
    p.minimize(lsum((wi * 1.1 + (i % 3)) * z for i, (wi, z) in enumerate(zip(w, zs))))
    res = branch_and_bound(p, SolveOptions(rel_gap_tol=1e-9, node_order=order, branching=rule))
    best = min(sum((w[i] * 1.1 + (i % 3)) * b[i] for i in range(7))
               for b in itertools.product((0, 1), repeat=7) if sum(w[i] * b[i] for i in range(7)) >= 23.5)
    assert res.objective == pytest.approx(best, rel=1e-7)


def test_dump_roundtrip(tiny3):
    from ies.dispatch import assemble
    prog = assemble(tiny3).program
    text = dump_program(prog)
    again = load_program(text)
    assert dump_program(again) == text
    assert again.count() == prog.count()
    assert solve_relaxation(again).objective == pytest.approx(solve_relaxation(prog).objective, rel=1e-7)


@pytest.mark.parametrize("bad", ["var x 0 1", "obj 1.0 2.0", "le c 0.0 1.0 nope", "soc c | 1.0", "frob x"])
def test_dump_rejects_malformed(bad):
    with pytest.raises(ValueError):
        load_program("var y 0.0 1.0 C\n" + bad + "\n")


# ---------------------------------------------------------------------------
# properties

@st.composite
def small_misocp(draw):
    n = draw(st.integers(2, 5))
    cost = draw(st.lists(st.floats(-3, 5, allow_nan=False), min_size=n, max_size=n))
    weights = draw(st.lists(st.floats(0.5, 4, allow_nan=False), min_size=n, max_size=n))
    need = draw(st.floats(0.0, sum(weights)))
    radius = draw(st.floats(1.0, 3.0))
    return cost, weights, need, radius


def _build(cost, weights, need, radius):
    p = ConicProgram()
    zs = [p.var(f"z{i}", binary=True) for i in range(len(cost))]
    y = p.var("y", -5, 5)
    p.add(lsum(w * z for w, z in zip(weights, zs)) >= need)
    p.add_soc(radius, [y - 1.0, lsum(zs) * 0.5])
    p.minimize(lsum(c * z for c, z in zip(cost, zs)) + y)
    return p


def _brute(cost, weights, need, radius):
    best = math.inf
    for b in itertools.product((0, 1), repeat=len(cost)):
        if sum(w * v for w, v in zip(weights, b)) < need - 1e-9:
            continue
        h = 0.5 * sum(b)
        if h > radius:
            continue
        y = 1.0 - math.sqrt(radius ** 2 - h ** 2)
        best = min(best, sum(c * v for c, v in zip(cost, b)) + max(y, -5))
    return best


@settings(max_examples=40, deadline=None)
@given(small_misocp())
def test_relaxation_sandwich_and_enumeration(inst):
    p = _build(*inst)
    brute = _brute(*inst)
    res = branch_and_bound(p, SolveOptions(rel_gap_tol=1e-9))
    if math.isinf(brute):
        assert res.status == "infeasible"
        return
    relax = solve_relaxation(_build(*inst))
    assert relax.objective <= res.objective + 1e-6 * max(1, abs(res.objective))
    assert res.objective == pytest.approx(brute, rel=1e-6, abs=1e-6)
    assert res.bound <= res.objective + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=6))
def test_lsum_matches_python_sum(vals):
    p = ConicProgram()
    xs = [p.var(f"x{i}") for i in range(len(vals))]
    e = lsum(v * x for v, x in zip(vals, xs))
    point = np.ones(len(vals))
    assert e.value(point) == pytest.approx(sum(vals), abs=1e-9)


def test_stalled_node_is_retried_to_a_certificate():
    # unit 3 is held off for two slots but forced on in slot 1: the node is infeasible
    import json
    from pathlib import Path
    from ies.conic import CompiledProgram
    from ies.dispatch import assemble
    from ies.model import parse_scenario
    doc = json.loads((Path(__file__).parent / "golden" / "stalled_uc.json").read_text())
    prog = assemble(parse_scenario(doc)).program
    cp = CompiledProgram(prog)
    lb, ub = cp.lb.copy(), cp.ub.copy()
    for name, v in (("u[2,0]", 0.0), ("u[2,2]", 1.0), ("u[3,0]", 0.0), ("u[3,1]", 1.0)):
        j = prog.names.index(name)
        lb[j] = ub[j] = v
    assert cp.solve(lb, ub).status == "infeasible"
