"""Domain types, scenario ingestion and validation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import jsonschema

MBTU_TO_M3 = 28.3
Q_H2 = 119.96  # MJ/kg
Q_CH4 = 50.00  # MJ/kg

Series = Tuple[float, ...]


class ScenarioError(ValueError):
    """Invalid scenario input: schema, invariant or series-length violation."""


def convert_gas_price(price_per_mbtu: float, mbtu_to_m3: float = MBTU_TO_M3) -> float:
    """$/MBTU -> $/m3."""
    if price_per_mbtu < 0:
        raise ValueError(f"gas price must be nonnegative, got {price_per_mbtu}")
    return price_per_mbtu / mbtu_to_m3


def substitute_pressure(p_lo: float, p_hi: float) -> Tuple[float, float]:
    """Pressure bounds (bar) -> pressure-square bounds (bar^2)."""
    if p_lo < 0 or p_hi < 0:
        raise ValueError(f"pressure bounds must be nonnegative, got [{p_lo}, {p_hi}]")
    return p_lo * p_lo, p_hi * p_hi


@dataclass(frozen=True)
class Line:
    id: int
    frm: int
    to: int
    x: float
    p_min: float
    p_max: float


@dataclass(frozen=True)
class PowerNetwork:
    buses: Tuple[int, ...]
    lines: Tuple[Line, ...]
    base_mva: float = 100.0
    reserve_rho: float = 0.05
    ref_bus: Optional[int] = None

    @property
    def reference(self) -> int:
        return self.buses[0] if self.ref_bus is None else self.ref_bus


@dataclass(frozen=True)
class ThermalUnit:
    id: int
    bus: int
    p_max: float
    p_min: float
    a: float
    b: float
    c: float
    ramp_up: float
    ramp_down: float
    min_down: int
    min_up: int
    start_cost: float
    stop_cost: float
    coal_price: float
    initial_on: bool = True
    initial_p: Optional[float] = None

    @property
    def p_init(self) -> float:
        if self.initial_p is not None:
            return self.initial_p
        return self.p_min if self.initial_on else 0.0

    def fuel_tons(self, p: float, on: float = 1.0) -> float:
        return self.a * p * p + self.b * p + self.c * on


@dataclass(frozen=True)
class GasNode:
    id: int
    pi_lo: float
    pi_hi: float
    s_lo: float = 0.0
    s_hi: float = 0.0
    p_lo: float = 0.0
    p_hi: float = 0.0


@dataclass(frozen=True)
class GasPipe:
    id: int
    frm: int
    to: int
    c: float
    f_max: Optional[float] = None


@dataclass(frozen=True)
class GasNetwork:
    nodes: Tuple[GasNode, ...] = ()
    pipes: Tuple[GasPipe, ...] = ()
    gas_price: float = 0.0

    def node(self, nid: int) -> GasNode:
        for nd in self.nodes:
            if nd.id == nid:
                return nd
        raise KeyError(nid)

    def flow_cap(self, pipe: GasPipe) -> float:
        if pipe.f_max is not None:
            return pipe.f_max
        top = max(self.node(pipe.frm).pi_hi, self.node(pipe.to).pi_hi)
        return pipe.c * math.sqrt(top)


@dataclass(frozen=True)
class WindFarm:
    bus: int
    availability: Series
    delta_wp: float
    cap_kw: float
    profiles: Mapping[str, Series] = field(default_factory=dict)


@dataclass(frozen=True)
class P2GPlant:
    bus: int
    gas_node: Optional[int]
    eta_elec: Series
    eta_meth: Series
    alpha_h2: float
    alpha_ch4_elec: float
    alpha_ch4_meth: float
    f_h2_max: float
    f_ch4_max: float

    def alpha_h2_eff(self, t: int) -> float:
        return self.alpha_h2 / self.eta_elec[t]

    def alpha_ch4_elec_eff(self, t: int) -> float:
        return self.alpha_ch4_elec / self.eta_elec[t]

    def alpha_ch4_meth_eff(self, t: int) -> float:
        return self.alpha_ch4_meth / self.eta_meth[t]


@dataclass(frozen=True)
class CoalChain:
    mined: Series
    alpha_coal: Series
    alpha_truck: Series


@dataclass(frozen=True)
class SafetyLimits:
    lfl_h2: float = 4.0
    ufl_h2: float = 75.0
    lel_h2: float = 4.0
    uel_h2: float = 77.0
    lfl_ch4: float = 5.0
    ufl_ch4: float = 15.0
    lel_ch4: float = 5.0
    uel_ch4: float = 17.0
    q_h2: float = Q_H2
    q_ch4: float = Q_CH4


@dataclass(frozen=True)
class PriceBook:
    carbon_price: float = 0.0
    mbtu_to_m3: float = MBTU_TO_M3
    coal_sale_price: float = 0.0
    truck_cost_coeff: float = 0.0


@dataclass(frozen=True)
class EmissionFactors:
    coal_gen: float = 0.0          # tCO2 per ton coal burned
    c2h_process: float = 0.0       # tCO2 per m3 H2 from gasification
    methanation_sink: float = 0.0  # tCO2 absorbed per m3 CH4
    diesel_truck: float = 0.0      # tCO2 per ton transported
    ev_grid: float = 0.0           # tCO2 per kWh charged


@dataclass(frozen=True)
class Fleet:
    kind: str
    truck_cost_coeff: float
    kwh_per_ton: float = 0.0
    bus: Optional[int] = None


@dataclass(frozen=True)
class CarbonSettings:
    factors: EmissionFactors = EmissionFactors()
    prices_usd: Mapping[str, float] = field(default_factory=dict)
    fleets: Mapping[str, Fleet] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    horizon: int
    slot_hours: float
    power: PowerNetwork
    gas: GasNetwork
    units: Tuple[ThermalUnit, ...]
    wind: Optional[WindFarm]
    p2g: Optional[P2GPlant]
    coal: Optional[CoalChain]
    safety: SafetyLimits
    prices: PriceBook
    loads: Mapping[int, Series]
    gas_demands: Mapping[int, Series]
    carbon: CarbonSettings = CarbonSettings()
    name: str = "scenario"

    def load_at(self, t: int) -> float:
        return sum(s[t] for s in self.loads.values())

    def with_rho(self, rho: float) -> "Scenario":
        s = replace(self, power=replace(self.power, reserve_rho=rho))
        validate(s)
        return s

    def with_delta_wp(self, delta: float) -> "Scenario":
        if self.wind is None:
            raise ScenarioError("scenario has no wind farm")
        s = replace(self, wind=replace(self.wind, delta_wp=delta))
        validate(s)
        return s

    def with_wind(self, availability: Sequence[float]) -> "Scenario":
        if self.wind is None:
            raise ScenarioError("scenario has no wind farm")
        s = replace(self, wind=replace(self.wind, availability=tuple(float(v) for v in availability)))
        validate(s)
        return s

    def with_day(self, day: str) -> "Scenario":
        if self.wind is None or day not in self.wind.profiles:
            raise ScenarioError(f"no wind profile named {day!r}")
        return self.with_wind(self.wind.profiles[day])


# ---------------------------------------------------------------------------
# ingestion

def _schema() -> dict:
    text = resources.files("ies").joinpath("schemas/scenario.schema.json").read_text()
    return json.loads(text)


def _series(value, horizon: int, what: str) -> Series:
    if isinstance(value, (int, float)):
        return tuple(float(value) for _ in range(horizon))
    out = tuple(float(v) for v in value)
    if len(out) != horizon:
        raise ScenarioError(f"series-length mismatch: {what} has {len(out)} entries, horizon is {horizon}")
    return out


def parse_scenario(doc: dict) -> Scenario:
    """Build a validated :class:`Scenario` from a decoded JSON document."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {exc.message}") from None

    T = int(doc["horizon"])
    pw = doc["power"]
    lines = tuple(
        Line(i + 1, ln["from"], ln["to"], ln["x"], ln.get("p_min", -ln.get("p_max", math.inf)),
             ln.get("p_max", math.inf))
        for i, ln in enumerate(pw.get("lines", []))
    )
    power = PowerNetwork(tuple(pw["buses"]), lines, pw.get("base_mva", 100.0),
                         pw.get("reserve_rho", 0.05), pw.get("ref_bus"))

    g = doc["gas"]
    nodes = []
    for nd in g.get("nodes", []):
        try:
            pi_lo, pi_hi = substitute_pressure(nd["p_lo"], nd["p_hi"])
        except ValueError as exc:
            raise ScenarioError(f"gas node {nd['id']}: {exc}") from None
        nodes.append(GasNode(nd["id"], pi_lo, pi_hi, nd.get("s_lo", 0.0), nd.get("s_hi", 0.0),
                             nd["p_lo"], nd["p_hi"]))
    pipes = tuple(GasPipe(i + 1, pp["from"], pp["to"], pp["weymouth_c"], pp.get("f_max"))
                  for i, pp in enumerate(g.get("pipes", [])))
    prices_doc = doc.get("prices", {})
    mbtu = prices_doc.get("mbtu_to_m3", MBTU_TO_M3)
    if "gas_price_per_mbtu" in g:
        gas_price = convert_gas_price(g["gas_price_per_mbtu"], mbtu)
    else:
        gas_price = g.get("gas_price", 0.0)
    gas = GasNetwork(tuple(nodes), pipes, gas_price)

    units = tuple(
        ThermalUnit(
            id=u["id"], bus=u["bus"], p_max=u["p_max"], p_min=u["p_min"], a=u["a"], b=u["b"], c=u["c"],
            ramp_up=u["ramp_up"], ramp_down=u.get("ramp_down", u["ramp_up"]),
            min_down=u.get("min_down", 1), min_up=u.get("min_up", 1),
            start_cost=u.get("start_cost", 0.0), stop_cost=u.get("stop_cost", 0.0),
            coal_price=u.get("coal_price", doc.get("coal_price", 1.0)),
            initial_on=u.get("initial_on", True), initial_p=u.get("initial_p"),
        )
        for u in doc["units"]
    )

    wind = None
    if doc.get("wind") is not None:
        w = doc["wind"]
        profiles = {k: _series(v, T, f"wind.profiles.{k}") for k, v in w.get("profiles", {}).items()}
        if "availability" in w:
            avail = _series(w["availability"], T, "wind.availability")
        elif "annual" in profiles:
            avail = profiles["annual"]
        else:
            raise ScenarioError("wind needs an availability series or an 'annual' profile")
        wind = WindFarm(w["bus"], avail, w.get("delta_wp", 0.0), w.get("cap_kw", math.inf), profiles)

    p2g = None
    if doc.get("p2g") is not None:
        p = doc["p2g"]
        p2g = P2GPlant(
            bus=p["bus"], gas_node=p.get("gas_node"),
            eta_elec=_series(p["eta_elec"], T, "p2g.eta_elec"),
            eta_meth=_series(p["eta_meth"], T, "p2g.eta_meth"),
            alpha_h2=p["alpha_h2"], alpha_ch4_elec=p["alpha_ch4_elec"], alpha_ch4_meth=p["alpha_ch4_meth"],
            f_h2_max=p["f_h2_max"], f_ch4_max=p["f_ch4_max"],
        )

    coal = None
    if doc.get("coal") is not None:
        c = doc["coal"]
        coal = CoalChain(_series(c["mined"], T, "coal.mined"), _series(c["alpha_coal"], T, "coal.alpha_coal"),
                         _series(c["alpha_truck"], T, "coal.alpha_truck"))

    safety = SafetyLimits(**doc.get("safety", {}))
    prices = PriceBook(
        carbon_price=prices_doc.get("carbon_price", 0.0), mbtu_to_m3=mbtu,
        coal_sale_price=prices_doc.get("coal_sale_price", 0.0),
        truck_cost_coeff=prices_doc.get("truck_cost_coeff", 0.0),
    )
    loads = {int(k): _series(v, T, f"loads.{k}") for k, v in doc.get("loads", {}).items()}
    gas_demands = {int(k): _series(v, T, f"gas_demands.{k}") for k, v in doc.get("gas_demands", {}).items()}

    carbon = CarbonSettings()
    if doc.get("carbon") is not None:
        cd = doc["carbon"]
        fx = cd.get("fx_to_usd", {})
        prices_usd = {}
        for key, spec in cd.get("prices", {}).items():
            rate = fx.get(spec.get("currency", "USD"), 1.0 if spec.get("currency", "USD") == "USD" else None)
            if rate is None:
                raise ScenarioError(f"carbon price {key!r}: no exchange rate for {spec['currency']}")
            prices_usd[key] = spec["value"] * rate
        fleets = {
            k: Fleet(k, f.get("truck_cost_coeff", prices.truck_cost_coeff), f.get("kwh_per_ton", 0.0), f.get("bus"))
            for k, f in cd.get("fleets", {}).items()
        }
        carbon = CarbonSettings(EmissionFactors(**cd.get("factors", {})), prices_usd, fleets)

    scen = Scenario(T, doc.get("slot_hours", 1.0), power, gas, units, wind, p2g, coal, safety, prices,
                    loads, gas_demands, carbon, doc.get("name", "scenario"))
    validate(scen)
    return scen


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return parse_scenario(doc)


def bundled(name: str = "ieee30_belgium24.json") -> Path:
    """Path of a fixture shipped in ``ies/data``."""
    return Path(str(resources.files("ies").joinpath("data").joinpath(name)))


def read_series_csv(path: Union[str, Path], horizon: int) -> Series:
    """Read a ``slot,value`` CSV into a series of length ``horizon``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["slot", "value"]:
            raise ScenarioError(f"{path}: header must be 'slot,value'")
        rows = [(int(r["slot"]), float(r["value"])) for r in reader]
    slots = sorted(s for s, _ in rows)
    if slots != list(range(len(rows))) and slots != list(range(1, len(rows) + 1)):
        raise ScenarioError(f"{path}: slots must be consecutive")
    if len(rows) != horizon:
        raise ScenarioError(f"series-length mismatch: {path} has {len(rows)} rows, horizon is {horizon}")
    return tuple(v for _, v in sorted(rows))


def apply_overrides(scen: Scenario, overrides: Mapping[str, Union[str, Path]]) -> Scenario:
    """Replace series from CSV files.

    Keys: ``wind``, ``mined``, ``load:<bus>``, ``gas_demand:<node>``.
    """
    T = scen.horizon
    loads, gas_demands = dict(scen.loads), dict(scen.gas_demands)
    wind, coal = scen.wind, scen.coal
    for key, path in overrides.items():
        series = read_series_csv(path, T)
        if key == "wind":
            if wind is None:
                raise ScenarioError("override 'wind' but scenario has no wind farm")
            wind = replace(wind, availability=series)
        elif key == "mined":
            if coal is None:
                raise ScenarioError("override 'mined' but scenario has no coal chain")
            coal = replace(coal, mined=series)
        elif key.startswith("load:"):
            loads[int(key[5:])] = series
        elif key.startswith("gas_demand:"):
            gas_demands[int(key[11:])] = series
        else:
            raise ScenarioError(f"unknown override key {key!r}")
    out = replace(scen, loads=loads, gas_demands=gas_demands, wind=wind, coal=coal)
    validate(out)
    return out


# ---------------------------------------------------------------------------
# invariants

def _fail(msg: str):
    raise ScenarioError(msg)


def validate(s: Scenario) -> None:
    T = s.horizon
    if T < 1:
        _fail("horizon must be >= 1")
    if s.slot_hours <= 0:
        _fail("slot_hours must be positive")
    buses = set(s.power.buses)
    if len(buses) != len(s.power.buses):
        _fail("duplicate bus ids")
    if s.power.reference not in buses:
        _fail(f"reference bus {s.power.reference} does not exist")
    if not 0 <= s.power.reserve_rho < 1:
        _fail(f"reserve coefficient rho={s.power.reserve_rho} outside [0, 1)")
    for ln in s.power.lines:
        if ln.frm not in buses or ln.to not in buses:
            _fail(f"line {ln.id} references a missing bus")
        if ln.x <= 0:
            _fail(f"line {ln.id}: reactance must be positive")
        if not ln.p_min <= 0 <= ln.p_max:
            _fail(f"line {ln.id}: flow limits must satisfy p_min <= 0 <= p_max")
    ids = set()
    for u in s.units:
        if u.id in ids:
            _fail(f"duplicate unit id {u.id}")
        ids.add(u.id)
        if u.bus not in buses:
            _fail(f"unit {u.id} references missing bus {u.bus}")
        if not 0 <= u.p_min <= u.p_max:
            _fail(f"unit {u.id}: need 0 <= p_min <= p_max")
        if u.a < 0:
            _fail(f"unit {u.id}: quadratic cost coefficient a < 0 (nonconvex)")
        if u.ramp_up <= 0 or u.ramp_down <= 0:
            _fail(f"unit {u.id}: ramp limits must be positive")
        if u.min_down < 1 or u.min_up < 1:
            _fail(f"unit {u.id}: minimum up/down times must be >= 1")
        if u.start_cost < 0 or u.stop_cost < 0:
            _fail(f"unit {u.id}: start/stop costs must be nonnegative")
        if u.coal_price < 0:
            _fail(f"unit {u.id}: coal price must be nonnegative")
    for bus, series in s.loads.items():
        if bus not in buses:
            _fail(f"load at missing bus {bus}")
        if len(series) != T:
            _fail(f"series-length mismatch: load at bus {bus}")
    gnodes = {nd.id: nd for nd in s.gas.nodes}
    for nd in s.gas.nodes:
        if not 0 <= nd.pi_lo < nd.pi_hi and not (nd.pi_lo == nd.pi_hi >= 0):
            _fail(f"gas node {nd.id}: need 0 <= pi_lo < pi_hi")
        if nd.s_lo > nd.s_hi:
            _fail(f"gas node {nd.id}: source bounds s_lo > s_hi")
    for pp in s.gas.pipes:
        if pp.frm not in gnodes or pp.to not in gnodes:
            _fail(f"pipe {pp.id} references a missing gas node")
        if pp.c <= 0:
            _fail(f"pipe {pp.id}: Weymouth constant must be positive")
    for nid, series in s.gas_demands.items():
        if nid not in gnodes:
            _fail(f"gas demand at missing node {nid}")
        if len(series) != T:
            _fail(f"series-length mismatch: gas demand at node {nid}")
    if s.gas.gas_price < 0:
        _fail("gas price must be nonnegative")
    if s.wind is not None:
        w = s.wind
        if w.bus not in buses:
            _fail(f"wind farm references missing bus {w.bus}")
        if len(w.availability) != T:
            _fail("series-length mismatch: wind availability")
        cap_pu = w.cap_kw / (s.power.base_mva * 1000.0)
        for t, v in enumerate(w.availability):
            if v < 0:
                _fail(f"wind availability negative at slot {t}")
            if v > cap_pu * (1 + 1e-9):
                _fail(f"wind availability exceeds nameplate at slot {t}")
        if w.delta_wp < 0:
            _fail("curtailment penalty delta_wp must be nonnegative")
    if s.p2g is not None:
        p = s.p2g
        if p.bus not in buses:
            _fail(f"P2G plant references missing bus {p.bus}")
        if p.gas_node is not None and p.gas_node not in gnodes:
            _fail(f"P2G plant references missing gas node {p.gas_node}")
        for t in range(T):
            if not 0.57 <= p.eta_elec[t] <= 0.73:
                _fail(f"electrolysis efficiency outside [0.57, 0.73] at slot {t}")
            if not 0.50 <= p.eta_meth[t] <= 0.64:
                _fail(f"methanation efficiency outside [0.50, 0.64] at slot {t}")
            if not p.eta_elec[t] > p.eta_meth[t]:
                _fail(f"efficiency ordering eta_elec > eta_meth violated at slot {t}")
        if min(p.alpha_h2, p.alpha_ch4_elec, p.alpha_ch4_meth) < 0:
            _fail("P2G consumption coefficients must be nonnegative")
        if p.f_h2_max < 0 or p.f_ch4_max < 0:
            _fail("P2G capacities must be nonnegative")
    if s.coal is not None:
        c = s.coal
        if any(v < 0 for v in c.mined):
            _fail("coal mined must be nonnegative")
        if any(v < 0 for v in (*c.alpha_coal, *c.alpha_truck)):
            _fail("coal/truck hydrogen coefficients must be nonnegative")
    sl = s.safety
    for lo, hi, what in ((sl.lfl_h2, sl.ufl_h2, "H2 flammability"), (sl.lel_h2, sl.uel_h2, "H2 explosion"),
                         (sl.lfl_ch4, sl.ufl_ch4, "CH4 flammability"), (sl.lel_ch4, sl.uel_ch4, "CH4 explosion")):
        if not 0 < lo < hi < 100:
            _fail(f"{what} limits must satisfy 0 < lower < upper < 100")
    pb = s.prices
    if min(pb.carbon_price, pb.mbtu_to_m3, pb.coal_sale_price, pb.truck_cost_coeff) < 0:
        _fail("prices must be nonnegative")
    f = s.carbon.factors
    if min(f.coal_gen, f.c2h_process, f.methanation_sink, f.diesel_truck, f.ev_grid) < 0:
        _fail("emission factors must be nonnegative")
    for fl in s.carbon.fleets.values():
        if fl.kind not in ("hydrogen", "ev", "diesel"):
            _fail(f"unknown fleet {fl.kind!r}")
        if fl.bus is not None and fl.bus not in buses:
            _fail(f"fleet {fl.kind} charges at missing bus {fl.bus}")
