import copy
import json

import numpy as np
import pytest

from ies.conic import SolveOptions
from ies.dispatch import run
from ies.model import GasNetwork, GasNode, GasPipe, bundled, load_scenario, parse_scenario

FIXTURE_GAP = 1e-3
FIXTURE_OPTIONS = SolveOptions(rel_gap_tol=FIXTURE_GAP)
DELTAS = (0.01, 0.05, 0.08, 0.12)

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def base_doc(horizon=1):
    """Smallest valid scenario document: one bus, no gas, no coupling."""
    return {
        "name": "toy", "horizon": horizon, "slot_hours": 1.0,
        "power": {"buses": [1], "reserve_rho": 0.05, "ref_bus": 1},
        "gas": {"nodes": [], "pipes": []},
        "units": [], "wind": None, "p2g": None, "coal": None, "safety": {}, "prices": {},
        "loads": {"1": [0.0] * horizon}, "gas_demands": {},
    }


def unit_doc(uid, **kw):
    d = {"id": uid, "bus": 1, "p_max": 1.0, "p_min": 0.1, "a": 0.1, "b": 20.0, "c": 10.0, "ramp_up": 1.0,
         "min_up": 1, "min_down": 1, "start_cost": 0.0, "stop_cost": 0.0, "initial_on": True}
    d.update(kw)
    return d


def uc_scenario(units, loads, rho=0.05):
    doc = base_doc(len(loads))
    doc["units"] = units
    doc["loads"] = {"1": list(loads)}
    doc["power"]["reserve_rho"] = rho
    return parse_scenario(doc)


def random_uc_doc(rng):
    """Random commitment toy with at most 12 binaries."""
    N = int(rng.integers(1, 4))
    T = int(rng.integers(1, min(4, 12 // N) + 1))
    units = []
    for i in range(N):
        pmax = float(rng.uniform(0.5, 2.0))
        units.append(unit_doc(
            i + 1, p_max=round(pmax, 3), p_min=round(float(rng.uniform(0.05, 0.4)) * pmax, 3),
            a=round(float(rng.uniform(0.0, 0.5)), 3), b=round(float(rng.uniform(10, 50)), 2),
            c=round(float(rng.uniform(0, 100)), 1), ramp_up=round(float(rng.uniform(0.3, 1.5)) * pmax, 3),
            min_up=int(rng.integers(1, 3)), min_down=int(rng.integers(1, 3)),
            start_cost=round(float(rng.uniform(0, 80)), 1), stop_cost=round(float(rng.uniform(0, 30)), 1),
            initial_on=bool(rng.integers(0, 2)),
        ))
    cap = sum(u["p_max"] for u in units)
    loads = [round(float(rng.uniform(0.1, 0.85)) * cap, 3) for _ in range(T)]
    doc = base_doc(T)
    doc["units"] = units
    doc["loads"] = {"1": loads}
    return doc


def gas_toys():
    """name -> (network, demands, pressure weights); negative weights push pipes onto the cone."""
    two = GasNetwork((GasNode(1, 100, 110, 0, 100), GasNode(2, 100, 106, 0, 0)), (GasPipe(1, 1, 2, 10.0),), 1.0)
    path = GasNetwork((GasNode(1, 90, 120, 0, 60), GasNode(2, 80, 115, 0, 0), GasNode(3, 85, 118, 0, 40)),
                      (GasPipe(1, 1, 2, 8.0), GasPipe(2, 3, 2, 6.0)), 1.0)
    rev = GasNetwork((GasNode(1, 90, 120, 0, 0), GasNode(2, 80, 115, 0, 80), GasNode(3, 85, 118, 0, 0)),
                     (GasPipe(1, 1, 2, 8.0), GasPipe(2, 2, 3, 6.0)), 0.5)
    return {
        "2node": (two, {2: 20.0}, {2: -1.0}),
        "3path": (path, {2: 50.0, 3: 5.0}, {2: -2.0}),
        "3rev": (rev, {1: 30.0, 3: 20.0}, {1: -1.0, 3: -1.0}),
    }


@pytest.fixture(scope="session")
def tiny3_doc():
    return json.loads(bundled("tiny3.json").read_text())


@pytest.fixture
def tiny3_doc_copy(tiny3_doc):
    return copy.deepcopy(tiny3_doc)


@pytest.fixture(scope="session")
def tiny3():
    return load_scenario(bundled("tiny3.json"))


@pytest.fixture(scope="session")
def fixture_scenario():
    return load_scenario(bundled())


@pytest.fixture(scope="session")
def tiny3_solution(tiny3):
    return run(tiny3, SolveOptions(rel_gap_tol=1e-6))


class FixtureSolves:
    """Full-fixture solves shared by the whole session, computed on first use."""

    def __init__(self, scen):
        self.scen = scen
        self._cache = {}

    def get(self, key):
        if key not in self._cache:
            self._cache[key] = self._solve(key)
        return self._cache[key]

    def _solve(self, key):
        kind, value = key
        s = self.scen
        if kind == "base":
            return run(s, FIXTURE_OPTIONS)
        if kind == "no_p2g":
            return run(s, FIXTURE_OPTIONS, with_p2g=False)
        if kind == "rho":
            return run(s.with_rho(value), FIXTURE_OPTIONS)
        if kind == "delta":
            if value == s.wind.delta_wp:
                return self.get(("base", None))
            return run(s.with_delta_wp(value), FIXTURE_OPTIONS)
        if kind == "fleet":
            if value == "hydrogen":
                return self.get(("base", None))
            return run(s, FIXTURE_OPTIONS, fleet=value)
        raise KeyError(key)

    def all_solved(self):
        return dict(self._cache)


@pytest.fixture(scope="session")
def solves(fixture_scenario):
    return FixtureSolves(fixture_scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
