from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ies.conic import ConicProgram, LinExpr, solve_relaxation
from ies.coupling import (H2_PER_CH4, build_coal_chain, build_hydrogen_balance, c2h_output, check_safety,
                          declare_coupling_variables, energy_content, p2g_consumption, p2g_load_kw, truck_demand)
from ies.model import SafetyLimits

share = st.floats(0.0, 1.0)
amount = st.floats(0.0, 1e4)


@pytest.mark.parametrize("alpha,beta,mined,expected", [(0.05, 0.2, 100, 1.0), (3.0, 0.0, 80, 0.0),
                                                       (400, 0.1, 50, 2000.0)])
def test_c2h_output(alpha, beta, mined, expected):
    assert c2h_output(mined, beta, alpha) == pytest.approx(expected)


@pytest.mark.parametrize("alpha,beta,mined,expected", [(2.0, 1.0, 100, 0.0), (2.0, 0.25, 100, 150.0),
                                                       (2.0, 0.5, 0.0, 0.0)])
def test_truck_demand(alpha, beta, mined, expected):
    assert truck_demand(mined, beta, alpha) == pytest.approx(expected)


@pytest.mark.parametrize("fn", [c2h_output, truck_demand])
def test_share_outside_unit_interval_rejected(fn):
    with pytest.raises(ValueError):
        fn(10.0, 1.2, 1.0)


def test_p2g_load_examples():
    assert p2g_load_kw(0.0, 10.0, 0.0, 2.0, 0.5) == pytest.approx(85.0)
    assert p2g_load_kw(0.0, 0.0, 4.5, 2.0, 0.5) == 0.0
    assert p2g_load_kw(200.0, 0.0, 4.5, 2.0, 0.5) == pytest.approx(900.0)


@pytest.mark.parametrize("mass,species,mj", [(1.0, "h2", 119.96), (1.0, "ch4", 50.0), (0.0, "h2", 0.0)])
def test_energy_content(mass, species, mj):
    assert energy_content(mass, species) == pytest.approx(mj)


def test_energy_content_rejects_unknown_species():
    with pytest.raises(ValueError):
        energy_content(1.0, "propane")


def test_safety_checks():
    limits = SafetyLimits()
    assert check_safety(2.0, None, limits) == []
    assert "ch4-flammable" in check_safety(None, 10.0, limits)
    assert check_safety(0.0, 0.0, limits) == []
    # literal reading demands the mixture sit inside each window
    assert check_safety(10.0, None, limits, literal=True) == []
    assert len(check_safety(2.0, None, limits, literal=True)) == 2


def test_safety_rejects_bad_concentration():
    with pytest.raises(ValueError):
        check_safety(120.0, None)


@given(amount, share, share, st.floats(0.0, 500.0), st.floats(0.0, 50.0))
def test_beta_monotonicity(mined, b1, b2, a_coal, a_truck):
    lo, hi = sorted((b1, b2))
    assert c2h_output(mined, lo, a_coal) <= c2h_output(mined, hi, a_coal) + 1e-9
    assert truck_demand(mined, lo, a_truck) >= truck_demand(mined, hi, a_truck) - 1e-9


@given(amount, share)
def test_gasified_plus_trucked_is_mined(mined, beta):
    # unit yields turn both functions into tonnages
    assert c2h_output(mined, beta, 1.0) + truck_demand(mined, beta, 1.0) == pytest.approx(mined, abs=1e-9)


@given(st.floats(0, 500), st.floats(0, 500), st.floats(0, 10), st.floats(0, 10), st.floats(0, 10))
def test_p2g_load_structure(f_h2, f_ch4, a_h2, a_elec, a_meth):
    got = p2g_load_kw(f_h2, f_ch4, a_h2, a_elec, a_meth)
    assert got >= 0
    assert got == pytest.approx(a_h2 * f_h2 + (4 * a_elec + a_meth) * f_ch4, rel=1e-12, abs=1e-9)
    assert p2g_load_kw(2 * f_h2, 2 * f_ch4, a_h2, a_elec, a_meth) == pytest.approx(2 * got, rel=1e-12, abs=1e-9)


# ---------------------------------------------------------------------------
# builders on the tiny fixture

def _coupling(tiny3, fix=None, with_p2g=True):
    prog = ConicProgram()
    v = declare_coupling_variables(prog, tiny3, with_p2g)
    build_coal_chain(prog, tiny3, v)
    build_hydrogen_balance(prog, tiny3, v)
    load = p2g_consumption(prog, tiny3, v)
    for name, value in (fix or {}).items():
        prog.add(prog[name] == value)
    return prog, v, load


def test_zero_truck_demand_forces_zero_supply(tiny3):
    idle = replace(tiny3, coal=replace(tiny3.coal, mined=(0.0,) * tiny3.horizon))
    prog, v, _ = _coupling(idle)
    prog.minimize(-v.f_h2[0])
    res = solve_relaxation(prog)
    assert v.f_truck_h2[0].value(res.x) == pytest.approx(0.0, abs=1e-7)
    assert v.f_h2[0].value(res.x) == pytest.approx(0.0, abs=1e-6)
    assert v.f_coal_h2[0].value(res.x) == pytest.approx(0.0, abs=1e-6)


def test_station_hydrogen_closes_the_gap(tiny3):
    # alpha_coal 200 and alpha_truck 50 with 10 t mined
    beta = 0.05
    prog, v, _ = _coupling(tiny3, {"beta[0]": beta})
    prog.minimize(LinExpr())
    res = solve_relaxation(prog)
    coal, demand = 200 * 10 * beta, 50 * 10 * (1 - beta)
    assert v.f_coal_h2[0].value(res.x) == pytest.approx(coal, abs=1e-6)
    assert v.f_h2[0].value(res.x) == pytest.approx(demand - coal, abs=1e-5)


def test_fixed_beta_without_p2g_can_be_infeasible(tiny3):
    prog, v, load = _coupling(tiny3, {"beta[0]": 0.5}, with_p2g=False)
    assert load is None and v.f_h2 is None
    prog.minimize(LinExpr())
    assert solve_relaxation(prog).status == "infeasible"


def test_stoichiometry_and_load(tiny3):
    # beta 0.2 lets C2H alone meet the trucks: 2000 * 0.2 == 500 * 0.8
    prog, v, load = _coupling(tiny3, {"f_ch4[0]": 100.0, "f_h2[0]": 0.0, "beta[0]": 0.2})
    prog.minimize(LinExpr())
    res = solve_relaxation(prog)
    p = tiny3.p2g
    assert v.f_h2_prime[0].value(res.x) == pytest.approx(H2_PER_CH4 * 100.0, rel=1e-8)
    kw = (4 * p.alpha_ch4_elec_eff(0) + p.alpha_ch4_meth_eff(0)) * 100.0
    assert load[0].value(res.x) * tiny3.power.base_mva * 1000 == pytest.approx(kw, rel=1e-7)


def test_efficiencies_rescale_consumption(tiny3):
    p = tiny3.p2g
    assert p.alpha_h2_eff(0) == pytest.approx(p.alpha_h2 / p.eta_elec[0])
    assert p.alpha_ch4_meth_eff(0) == pytest.approx(p.alpha_ch4_meth / p.eta_meth[0])
