#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the bundled network and scenario files under data/."""

import json
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"
Z_BASE = 12.66 ** 2 / 1.0  # ohm, 12.66 kV and 1 MVA

# from, to, r ohm, x ohm
BRANCHES = [
    (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941), (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400), (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238), (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129), (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210), (17, 18, 0.7320, 0.5740), (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554), (20, 21, 0.4095, 0.4784), (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091), (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034), (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006), (29, 30, 0.5075, 0.2585), (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619), (32, 33, 0.3410, 0.5302),
]
TIES = [(8, 21, 2.0, 2.0), (9, 15, 2.0, 2.0), (12, 22, 2.0, 2.0),
        (18, 33, 0.5, 0.5), (25, 29, 0.5, 0.5)]

LOADS = {
    2: (100, 60), 3: (90, 40), 6: (60, 20), 7: (200, 100), 8: (200, 100),
    12: (60, 35), 13: (60, 35), 14: (120, 80), 15: (60, 10), 16: (60, 20),
    17: (60, 20), 18: (90, 40), 19: (90, 40), 21: (90, 40), 22: (90, 40),
    24: (420, 200), 25: (420, 200), 26: (60, 25), 29: (120, 70), 30: (200, 600),
    31: (150, 70), 32: (210, 100), 33: (60, 40),
}
ESSENTIAL = {2, 7, 14, 18, 24, 25, 30, 32}

# line id -> (probability, transport node of the damage site)
DAMAGEABLE = {4: (0.7, 7), 14: (0.7, 4), 18: (0.7, 1), 22: (0.7, 7), 25: (0.7, 10),
              31: (0.7, 3), 8: (0.45, 8), 11: (0.45, 8), 16: (0.45, 9), 27: (0.45, 10)}


def afternoon_profile(capacity, base=0.3, peak=1.2):
    out = []
    for h in range(24):
        bump = math.exp(-0.5 * ((h - 16.5) / 1.8) ** 2)
        out.append(round(capacity * (base + (peak - base) * bump), 2))
    return out


def ieee33():
    lines = []
    for i, (f, t, r, x) in enumerate(BRANCHES + TIES, start=1):
        line = {"id": i, "from": f, "to": t, "r": round(r / Z_BASE, 8),
                "x": round(x / Z_BASE, 8), "s_max_kva": 1000.0,
                "kind": "tie" if i > len(BRANCHES) else "fixed"}
        if i in DAMAGEABLE:
            line.update(kind="damageable", repair_hours=2, repair_resources=2)
        lines.append(line)
    gens = [
        {"id": 1, "kind": "dg", "bus": 18, "p_max_kw": 200, "q_min_kvar": -67, "q_max_kvar": 100},
        {"id": 2, "kind": "dg", "bus": 22, "p_max_kw": 300, "q_min_kvar": -100, "q_max_kvar": 150},
        {"id": 3, "kind": "dg", "bus": 1, "p_max_kw": 400, "q_min_kvar": -133, "q_max_kvar": 200},
    ]
    for k, (bus, forming) in enumerate([(10, False), (16, True), (20, False), (27, False),
                                         (30, True), (33, False)], start=4):
        gens.append({"id": k, "kind": "pv_forming" if forming else "pv_following", "bus": bus,
                     "p_max_kw": 100, "q_min_kvar": -60, "q_max_kvar": 60, "s_max_kva": 120})
    loads = []
    for i, bus in enumerate(sorted(LOADS), start=1):
        p, q = LOADS[bus]
        ess = bus in ESSENTIAL
        loads.append({"id": i, "bus": bus, "p_kw": p, "q_kvar": q, "essential": ess,
                      "shed_cost": 2.5 if ess else 1.5})
    ms_buses = [2, 20, 32, 14, 25]
    stations = [{"id": i, "bus": b, "transport_node": i} for i, b in enumerate(ms_buses, start=1)]
    black = {1, 18, 22, 16, 30} | set(ms_buses)
    net = {
        "schema_version": 1, "name": "ieee33-microgrid", "base_kv": 12.66, "base_mva": 1.0,
        "voltage_limits": [0.95, 1.05],
        "buses": [{"id": b, "black_start": b in black} for b in range(1, 34)],
        "lines": lines, "generators": gens, "loads": loads, "stations": stations,
    }
    roads = [(1, 6, 0.5), (1, 7, 0.6), (6, 7, 0.5), (7, 5, 0.8), (7, 10, 0.7), (10, 3, 0.9),
             (6, 2, 0.9), (1, 2, 0.8), (7, 8, 0.9), (8, 4, 0.7), (4, 9, 0.6), (9, 3, 1.3),
             (8, 10, 1.0), (5, 10, 1.0), (2, 5, 1.2)]
    transport = {
        "nodes": 10,
        "volume_profiles": {"urban": afternoon_profile(1200.0)},
        "roads": [{"id": i, "from": a, "to": b, "free_time_h": t, "capacity_vph": 1200.0,
                   "volume": "urban"} for i, (a, b, t) in enumerate(roads, start=1)],
        "depots": [6],
        "line_sites": [{"line": l, "node": n} for l, (_, n) in sorted(DAMAGEABLE.items())],
    }
    scenario = {
        "schema_version": 1,
        "transport": transport,
        "fleet": {"meg": [{"start": 1}], "mess": [{"start": 3}], "rc": [{"start": 6, "resources": 10}]},
        "outage": {"fragility": [{"line": l, "p": p} for l, (p, _) in sorted(DAMAGEABLE.items())],
                   "repair_hours": [1, 4], "repair_resources": [2, 3]},
    }
    return net, scenario


def toy3():
    net = {
        "schema_version": 1, "name": "toy3", "base_kv": 12.66, "base_mva": 1.0,
        "voltage_limits": [0.95, 1.05],
        "buses": [{"id": 1, "black_start": True}, {"id": 2}, {"id": 3, "black_start": True}],
        "lines": [
            {"id": 1, "from": 1, "to": 2, "r": 0.002, "x": 0.002, "s_max_kva": 1000.0},
            {"id": 2, "from": 2, "to": 3, "r": 0.002, "x": 0.002, "s_max_kva": 1000.0,
             "kind": "damageable", "repair_hours": 2, "repair_resources": 2},
        ],
        "generators": [{"id": 1, "kind": "dg", "bus": 1, "p_max_kw": 100,
                        "q_min_kvar": -50, "q_max_kvar": 50}],
        "loads": [
            {"id": 1, "bus": 2, "p_kw": 30, "q_kvar": 0, "essential": False, "shed_cost": 1.5},
            {"id": 2, "bus": 3, "p_kw": 100, "q_kvar": 0, "essential": True, "shed_cost": 2.5},
        ],
        "stations": [{"id": 1, "bus": 1, "transport_node": 1},
                     {"id": 2, "bus": 3, "transport_node": 2}],
    }
    scenario = {
        "schema_version": 1,
        "transport": {
            "nodes": 2,
            "roads": [{"id": 1, "from": 1, "to": 2, "free_time_h": 0.9, "capacity_vph": 1000.0,
                       "volume": afternoon_profile(1000.0, base=0.1, peak=0.5)}],
            "depots": [1],
            "line_sites": [{"line": 2, "node": 2}],
        },
        "fleet": {"mess": [{"start": 1}], "rc": [{"start": 1, "resources": 10}]},
        "outage": {"fragility": [{"line": 2, "p": 1.0}], "repair_hours": [2, 2],
                   "repair_resources": [2, 2]},
    }
    return net, scenario


def main():
    for name, build in (("ieee33", ieee33), ("toy3", toy3)):
        net, scenario = build()
        d = ROOT / name
        d.mkdir(parents=True, exist_ok=True)
        (d / "network.json").write_text(json.dumps(net, indent=1) + "\n")
        (d / "scenario.json").write_text(json.dumps(scenario, indent=1) + "\n")


if __name__ == "__main__":
    main()
