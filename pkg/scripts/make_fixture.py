"""Generate the bundled scenario fixtures in src/ies/data.

The IEEE 30-bus branch reactances, ratings and bus loads follow the public
case30 data set.  Two branches around the wind bus (6-8, 8-28) are uprated so
the wind farm can export; the rest of the fixture (gas network, wind, load
shape, coal chain, prices, emission factors) is representative and synthetic.

    python3 scripts/make_fixture.py
"""
from __future__ import annotations

import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "ies" / "data"
T = 24

# (from, to, x p.u., rating MW)
IEEE30_BRANCHES = [
    (1, 2, 0.0575, 130), (1, 3, 0.1652, 130), (2, 4, 0.1737, 65), (3, 4, 0.0379, 130),
    (2, 5, 0.1983, 130), (2, 6, 0.1763, 65), (4, 6, 0.0414, 90), (5, 7, 0.1160, 70),
    (6, 7, 0.0820, 130), (6, 8, 0.0420, 32), (6, 9, 0.2080, 65), (6, 10, 0.5560, 32),
    (9, 11, 0.2080, 65), (9, 10, 0.1100, 65), (4, 12, 0.2560, 65), (12, 13, 0.1400, 65),
    (12, 14, 0.2559, 32), (12, 15, 0.1304, 32), (12, 16, 0.1987, 32), (14, 15, 0.1997, 16),
    (16, 17, 0.1923, 16), (15, 18, 0.2185, 16), (18, 19, 0.1292, 16), (19, 20, 0.0680, 32),
    (10, 20, 0.2090, 32), (10, 17, 0.0845, 32), (10, 21, 0.0749, 32), (10, 22, 0.1499, 32),
    (21, 22, 0.0236, 32), (15, 23, 0.2020, 16), (22, 24, 0.1790, 16), (23, 24, 0.2700, 16),
    (24, 25, 0.3292, 16), (25, 26, 0.3800, 16), (25, 27, 0.2087, 16), (28, 27, 0.3960, 65),
    (27, 29, 0.4153, 16), (27, 30, 0.6027, 16), (29, 30, 0.4533, 16), (8, 28, 0.2000, 32),
    (6, 28, 0.0599, 32),
]
UPRATED = {(6, 8): 100, (8, 28): 100}

# MW
IEEE30_LOADS = {
    2: 21.7, 3: 2.4, 4: 7.6, 5: 94.2, 7: 22.8, 8: 30.0, 10: 5.8, 12: 11.2, 14: 6.2, 15: 8.2, 16: 3.5,
    17: 9.0, 18: 3.2, 19: 9.5, 20: 2.2, 21: 17.5, 23: 3.2, 24: 8.7, 26: 3.5, 29: 2.4, 30: 10.6,
}

# daily shape with the consumption peak around noon
LOAD_SHAPE = [0.62, 0.58, 0.56, 0.55, 0.56, 0.60, 0.68, 0.78, 0.87, 0.94, 0.98, 1.00,
              0.99, 0.97, 0.95, 0.93, 0.92, 0.94, 0.96, 0.93, 0.86, 0.78, 0.70, 0.65]

# available wind (p.u.): strong at night, valley at mid-day
WIND_ANNUAL = [2.60, 2.70, 2.80, 2.80, 2.70, 2.50, 2.20, 1.80, 1.40, 1.10, 0.90, 0.80,
               0.70, 0.80, 0.90, 1.10, 1.40, 1.70, 2.00, 2.20, 2.40, 2.50, 2.60, 2.60]

UNITS = [
    # id, bus, pmax, pmin, a, b, c, ramp, TS/TO, H, J
    (1, 1, 1.57, 0.50, 0.1524, 38.5390, 786.798, 0.37, 2, 3937, 19686),
    (2, 2, 1.00, 0.25, 0.1058, 46.1591, 945.633, 0.30, 2, 25000, 12500),
    (3, 5, 0.60, 0.15, 0.0280, 40.3965, 1049.998, 0.15, 2, 15000, 7500),
    (4, 8, 0.80, 0.20, 0.0354, 38.3055, 1243.531, 0.20, 2, 20000, 10000),
    (5, 11, 0.40, 0.10, 0.0211, 36.327, 1658.570, 0.15, 2, 10000, 5000),
]

GAS_NODES = [
    # id, name, p_lo, p_hi (bar), s_lo, s_hi (m3/h)
    (1, "Zeebrugge", 40.0, 77.0, 0.0, 60000.0),
    (2, "Dudzele", 40.0, 77.0, 0.0, 40000.0),
    (3, "Brugge", 30.0, 80.0, 0.0, 0.0),
    (4, "Zomergem", 30.0, 80.0, 0.0, 0.0),
    (5, "Loenhout", 30.0, 77.0, 0.0, 25000.0),
    (6, "Antwerpen", 30.0, 80.0, 0.0, 0.0),
    (7, "Gent", 30.0, 80.0, 0.0, 0.0),
    (8, "Voeren", 50.0, 66.2, 0.0, 45000.0),
    (9, "Berneau", 30.0, 66.2, 0.0, 0.0),
    (10, "Liege", 30.0, 66.2, 0.0, 0.0),
    (11, "Warnand", 30.0, 66.2, 0.0, 0.0),
    (12, "Namur", 30.0, 66.2, 0.0, 0.0),
    (13, "Anderlues", 30.0, 66.2, 0.0, 0.0),
    (14, "Peronnes", 30.0, 66.2, 0.0, 0.0),
    (15, "Mons", 30.0, 66.2, 0.0, 0.0),
    (16, "Blaregnies", 40.0, 66.2, 0.0, 30000.0),
    (17, "Wanze", 30.0, 66.2, 0.0, 0.0),
    (18, "Sinsin", 30.0, 66.2, 0.0, 0.0),
    (19, "Arlon", 30.0, 66.2, 0.0, 0.0),
    (20, "Petange", 25.0, 66.2, 0.0, 0.0),
    (21, "Tournai", 30.0, 66.2, 0.0, 0.0),
    (22, "Brussel", 30.0, 80.0, 0.0, 0.0),
    (23, "Leuven", 30.0, 80.0, 0.0, 0.0),
    (24, "Hasselt", 30.0, 80.0, 0.0, 0.0),
]

GAS_PIPES = [
    # from, to, Weymouth constant (m3/h per bar)
    (1, 3, 3000.0), (2, 3, 3000.0), (3, 4, 2800.0), (4, 7, 2600.0), (7, 6, 2000.0), (5, 6, 2400.0),
    (7, 22, 2200.0), (6, 22, 1800.0), (22, 23, 1800.0), (23, 24, 1500.0), (24, 9, 1200.0),
    (8, 9, 2600.0), (9, 10, 2600.0), (10, 11, 2200.0), (11, 12, 1800.0), (12, 13, 1500.0),
    (13, 14, 1500.0), (14, 15, 1500.0), (15, 16, 1800.0), (15, 21, 1200.0), (11, 17, 1500.0),
    (17, 18, 1500.0), (18, 19, 1200.0), (19, 20, 1000.0),
]

GAS_DEMAND = {  # m3/h at shape 1.0
    4: 8000.0, 6: 22000.0, 7: 15000.0, 10: 12000.0, 12: 9000.0, 13: 6000.0, 14: 5000.0,
    15: 7000.0, 17: 4000.0, 19: 3000.0, 20: 3500.0, 21: 4000.0, 22: 25000.0, 23: 6000.0, 24: 5000.0,
}
GAS_SHAPE = [0.85, 0.82, 0.80, 0.80, 0.82, 0.88, 0.96, 1.02, 1.04, 1.02, 1.00, 0.98,
             0.96, 0.95, 0.95, 0.97, 1.00, 1.05, 1.08, 1.06, 1.02, 0.97, 0.92, 0.88]


def r(v: float, k: int = 6) -> float:
    return round(v, k)


def ieee30_belgium24() -> dict:
    lines = []
    for f, t, x, rate in IEEE30_BRANCHES:
        mw = UPRATED.get((f, t), rate)
        lines.append({"from": f, "to": t, "x": x, "p_min": -mw / 100.0, "p_max": mw / 100.0})
    loads = {str(b): [r(mw / 100.0 * s) for s in LOAD_SHAPE] for b, mw in IEEE30_LOADS.items()}
    units = [
        {"id": i, "bus": b, "p_max": pmax, "p_min": pmin, "a": a, "b": bb, "c": c, "ramp_up": ramp,
         "ramp_down": ramp, "min_down": ts, "min_up": ts, "start_cost": H, "stop_cost": J}
        for i, b, pmax, pmin, a, bb, c, ramp, ts, H, J in UNITS
    ]
    nodes = [{"id": i, "name": nm, "p_lo": lo, "p_hi": hi, "s_lo": slo, "s_hi": shi}
             for i, nm, lo, hi, slo, shi in GAS_NODES]
    pipes = [{"from": f, "to": t, "weymouth_c": c} for f, t, c in GAS_PIPES]
    demands = {str(n): [r(q * s, 3) for s in GAS_SHAPE] for n, q in GAS_DEMAND.items()}
    profiles = {
        "annual": WIND_ANNUAL,
        "winter": [r(min(v * 1.2, 4.5), 4) for v in WIND_ANNUAL],
        "summer": [r(v * 0.7, 4) for v in WIND_ANNUAL],
    }
    return {
        "name": "ieee30_belgium24",
        "provenance": ("Power network: IEEE 30-bus case (branch reactances, ratings, bus loads; lines 6-8 and "
                       "8-28 uprated to 100 MW). Thermal units: five-unit coal fleet with quadratic coal "
                       "consumption. Gas network: synthetic 24-node high-calorific grid shaped after the "
                       "Belgian system (node names illustrative, constants representative). Wind, load and "
                       "gas-demand shapes, coal chain, prices and emission factors: representative values."),
        "notes": {
            "unit1_a": "unit 1 quadratic coefficient taken as 0.1524",
            "wind": "15 MW farm scaled 30x (cap 450 MW); sits at bus 8 next to unit 4",
        },
        "horizon": T,
        "slot_hours": 1.0,
        "coal_price": 60.0,
        "power": {"buses": list(range(1, 31)), "base_mva": 100.0, "reserve_rho": 0.05, "ref_bus": 1,
                  "lines": lines},
        "gas": {"gas_price_per_mbtu": 3.0, "nodes": nodes, "pipes": pipes},
        "units": units,
        "wind": {"bus": 8, "profiles": profiles, "delta_wp": 0.08, "cap_kw": 450000.0},
        "p2g": {"bus": 8, "gas_node": 10, "eta_elec": 0.65, "eta_meth": 0.55,
                "alpha_h2": 4.5, "alpha_ch4_elec": 4.5, "alpha_ch4_meth": 0.5,
                "f_h2_max": 20000.0, "f_ch4_max": 3000.0},
        "coal": {"mined": 500.0, "alpha_coal": 200.0, "alpha_truck": 50.0},
        "safety": {},
        "prices": {"carbon_price": 0.0, "coal_sale_price": 45.0, "truck_cost_coeff": 15.0},
        "loads": loads,
        "gas_demands": demands,
        "carbon": {
            "factors": {"coal_gen": 2.6, "c2h_process": 0.0011, "methanation_sink": 0.00196,
                        "diesel_truck": 0.006, "ev_grid": 0.0},
            "prices": {"china": {"value": 35.0, "currency": "CNY"}, "eu": {"value": 30.0, "currency": "EUR"}},
            "fx_to_usd": {"CNY": 0.145, "EUR": 1.14, "USD": 1.0},
            "fleets": {
                "hydrogen": {"truck_cost_coeff": 15.0},
                "ev": {"truck_cost_coeff": 17.0, "kwh_per_ton": 40.0, "bus": 5},
                "diesel": {"truck_cost_coeff": 24.0},
            },
        },
    }


def tiny() -> dict:
    """3 buses, 2 units, 2 gas nodes, 4 slots: small enough for golden counts."""
    T4 = 4
    return {
        "name": "tiny3",
        "provenance": "hand-built toy for tests",
        "horizon": T4,
        "slot_hours": 1.0,
        "coal_price": 1.0,
        "power": {"buses": [1, 2, 3], "base_mva": 100.0, "reserve_rho": 0.05, "ref_bus": 1,
                  "lines": [{"from": 1, "to": 2, "x": 0.1, "p_min": -1.0, "p_max": 1.0},
                            {"from": 2, "to": 3, "x": 0.1, "p_min": -1.0, "p_max": 1.0},
                            {"from": 1, "to": 3, "x": 0.1, "p_min": -1.0, "p_max": 1.0}]},
        "gas": {"gas_price": 0.1, "nodes": [
            {"id": 1, "p_lo": 40.0, "p_hi": 60.0, "s_lo": 0.0, "s_hi": 5000.0},
            {"id": 2, "p_lo": 30.0, "p_hi": 60.0, "s_lo": 0.0, "s_hi": 0.0}],
            "pipes": [{"from": 1, "to": 2, "weymouth_c": 100.0}]},
        "units": [
            {"id": 1, "bus": 1, "p_max": 1.0, "p_min": 0.2, "a": 0.1, "b": 40.0, "c": 100.0, "ramp_up": 0.5,
             "min_down": 2, "min_up": 2, "start_cost": 50.0, "stop_cost": 20.0},
            {"id": 2, "bus": 2, "p_max": 0.6, "p_min": 0.1, "a": 0.05, "b": 45.0, "c": 60.0, "ramp_up": 0.3,
             "min_down": 1, "min_up": 1, "start_cost": 30.0, "stop_cost": 10.0},
        ],
        "wind": {"bus": 3, "availability": [0.6, 0.5, 0.2, 0.4], "delta_wp": 0.001, "cap_kw": 100000.0},
        "p2g": {"bus": 3, "gas_node": 2, "eta_elec": 0.65, "eta_meth": 0.55, "alpha_h2": 4.5,
                "alpha_ch4_elec": 4.5, "alpha_ch4_meth": 0.5, "f_h2_max": 2000.0, "f_ch4_max": 500.0},
        "coal": {"mined": 10.0, "alpha_coal": 200.0, "alpha_truck": 50.0},
        "safety": {},
        "prices": {"coal_sale_price": 2.0, "truck_cost_coeff": 1.0},
        "loads": {"2": [0.4, 0.5, 0.7, 0.6], "3": [0.2, 0.2, 0.3, 0.2]},
        "gas_demands": {"2": [1000.0, 1200.0, 1500.0, 1100.0]},
    }


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    for name, doc in (("ieee30_belgium24.json", ieee30_belgium24()), ("tiny3.json", tiny())):
        (DATA / name).write_text(json.dumps(doc, indent=1) + "\n")
        print("wrote", DATA / name)


if __name__ == "__main__":
    main()
