import ast
import inspect

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ies import oracles
from ies.model import GasNetwork, GasNode, GasPipe
from ies.oracles import OracleError, enumerate_uc, grid_search_gas, mccormick_min

from conftest import uc_scenario, unit_doc

pressure = st.floats(0.0, 1e4, allow_nan=False)


def test_oracles_do_not_import_builders():
    tree = ast.parse(inspect.getsource(oracles))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
    assert not imported & {"power", "gas", "conic", "coupling", "dispatch"}


def test_single_unit_runs_at_load():
    res = enumerate_uc(uc_scenario([unit_doc(1)], [0.4], rho=0.0))
    assert res.status == "optimal"
    assert res.u == [[1]]
    assert res.P[0][0] == pytest.approx(0.4)


def test_identical_pair_runs_one_unit():
    units = [unit_doc(1, p_max=1.0, c=30.0), unit_doc(2, p_max=1.0, c=30.0)]
    res = enumerate_uc(uc_scenario(units, [1.0], rho=0.0))
    assert sorted(r[0] for r in res.u) == [0, 1]
    one = 30.0 + 0.1 + 20.0
    assert res.objective == pytest.approx(one, rel=1e-9)


def test_load_above_capacity_infeasible():
    res = enumerate_uc(uc_scenario([unit_doc(1, p_max=1.0), unit_doc(2, p_max=0.5)], [1.6], rho=0.0))
    assert res.status == "infeasible"


def test_too_many_binaries_rejected():
    with pytest.raises(OracleError):
        enumerate_uc(uc_scenario([unit_doc(1), unit_doc(2), unit_doc(3), unit_doc(4)], [0.5] * 4))


def test_two_node_weymouth_drop():
    net = GasNetwork((GasNode(1, 0, 10000, 0, 100), GasNode(2, 0, 10000, 0, 0)), (GasPipe(1, 1, 2, 10.0),), 1.0)
    res = grid_search_gas(net, {2: 20.0}, 41)
    assert res.flow[1] == pytest.approx(20.0)
    assert res.pressure[1] - res.pressure[2] == pytest.approx(4.0)


def test_zero_demand_equal_pressures():
    net = GasNetwork((GasNode(1, 100, 200, 0, 100), GasNode(2, 100, 200, 0, 0)), (GasPipe(1, 1, 2, 10.0),), 1.0)
    res = grid_search_gas(net, {}, 21)
    assert res.flow[1] == 0.0
    assert res.pressure[1] == res.pressure[2]


def test_demand_beyond_sources_infeasible():
    net = GasNetwork((GasNode(1, 100, 200, 0, 10), GasNode(2, 100, 200, 0, 0)), (GasPipe(1, 1, 2, 10.0),), 1.0)
    assert grid_search_gas(net, {2: 20.0}).status == "infeasible"


def test_unreachable_pressures_reported():
    net = GasNetwork((GasNode(1, 100, 110, 0, 100), GasNode(2, 0, 50, 0, 0)), (GasPipe(1, 1, 2, 10.0),), 1.0)
    with pytest.raises(OracleError, match="no feasible grid point"):
        grid_search_gas(net, {2: 20.0}, 21)


def test_meshed_network_rejected():
    nodes = tuple(GasNode(i, 0, 100, 0, 10) for i in (1, 2, 3))
    pipes = (GasPipe(1, 1, 2, 5.0), GasPipe(2, 2, 3, 5.0), GasPipe(3, 3, 1, 5.0))
    with pytest.raises(OracleError, match="tree"):
        grid_search_gas(GasNetwork(nodes, pipes, 1.0), {})


def test_mccormick_examples():
    assert mccormick_min(1, 0, (1500, 1500), (1000, 1000), 1500, 1000) == pytest.approx(500.0)
    assert mccormick_min(1, 0, (-200, 200), (-200, 200), 50, 50) == 0.0
    assert mccormick_min(0, 1, (1000, 1000), (1500, 1500), 1000, 1500) == pytest.approx(500.0)


def test_mccormick_bad_box():
    with pytest.raises(OracleError):
        mccormick_min(1, 0, (5, 1), (0, 0), 3, 0)


@given(st.sampled_from([(1, 0), (0, 1)]), pressure, pressure)
def test_point_boxes_give_the_product(direction, pm, pn):
    dp, dm = direction
    lam = mccormick_min(dp, dm, (pm, pm), (pn, pn), pm, pn)
    assert abs(lam - (dp - dm) * (pm - pn)) <= 1e-9 * max(1.0, abs(pm - pn))
