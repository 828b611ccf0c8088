#!/usr/bin/env python3
"""Regenerates the bundled synthetic 39-bus profiles and scenario configs.

Deterministic: no randomness, so rerunning reproduces the committed files.
Load follows a two-peak daily shape scaled to each bus's MATPOWER Pd, solar
sits on ten load buses and never exceeds local load. Flexibility exists only
at load buses. Cost weights vary inside each area; the per-area sum of 1/alpha
tracks the area's energy deficit.
"""

import json
import math
import re
from pathlib import Path

HERE = Path(__file__).resolve().parent
STEPS = 24

SOLAR_BUSES = {3: 0.55, 4: 0.45, 8: 0.5, 12: 0.6, 16: 0.5, 20: 0.4, 24: 0.55, 25: 0.6, 27: 0.45, 28: 0.5}

MEDIUM = [
    ("G40", [39, 7, 8, 9]),
    ("G25", [4, 5, 14]),
    ("G10", [6, 31, 11, 12, 10, 32, 13]),
    ("B25", [1, 2, 30, 25, 37]),
    ("B40", [3, 18, 17]),
    ("B10", [26, 27]),
    ("R40", [38, 29, 28]),
    ("R25", [15, 16, 19, 20, 34, 33]),
    ("R10", [21, 24, 22, 35, 36, 23]),
]
# MATPOWER areas 1-3, except {28, 29, 38} which only reach area 3 through bus 26
HIGH = [
    ("A1", [4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 31, 32, 39]),
    ("A2", [1, 2, 3, 17, 18, 25, 26, 27, 30, 37, 28, 29, 38]),
    ("A3", [15, 16, 19, 20, 21, 22, 23, 24, 33, 34, 35, 36]),
]


def read_bus_table(path):
    text = path.read_text()
    block = re.search(r"mpc\.bus\s*=\s*\[(.*?)\];", text, re.S).group(1)
    rows = []
    for line in block.splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(v) for v in line.split()])
    return [(int(r[0]), r[2]) for r in rows]


def load_shape(t, phase):
    h = t + 0.5
    morning = 0.12 * math.exp(-(((h - 8.5 - phase) / 2.2) ** 2))
    evening = 0.28 * math.exp(-(((h - 18.5 - phase) / 2.8) ** 2))
    return 0.62 + morning + evening


def solar_shape(t):
    h = t + 0.5
    return max(0.0, math.sin(math.pi * (h - 6.0) / 13.0)) if 6.0 <= h <= 19.0 else 0.0


def main():
    buses = read_bus_table(HERE / "case39.m")
    base = 100.0
    ids = [b for b, _ in buses]
    load, gen = {}, {}
    for k, (b, pd) in enumerate(buses):
        if pd == 0:
            continue
        phase = 0.5 * ((k * 7) % 5 - 2) / 2
        load[b] = [pd / base * load_shape(t, phase) for t in range(STEPS)]
        if b in SOLAR_BUSES:
            peak = max(load[b])
            gen[b] = [min(SOLAR_BUSES[b] * peak * solar_shape(t), load[b][t]) for t in range(STEPS)]

    rows = ["bus,kind," + ",".join(f"t{t + 1}" for t in range(STEPS))]
    for b in ids:
        if b in load:
            rows.append(f"{b},load," + ",".join(f"{v:.6f}" for v in load[b]))
        if b in gen:
            rows.append(f"{b},gen," + ",".join(f"{v:.6f}" for v in gen[b]))
    (HERE / "profiles_39.csv").write_text("\n".join(rows) + "\n")

    # re-read rounded values so the weights match what the solver sees
    rounded = {}
    for line in rows[1:]:
        b, kind, *vals = line.split(",")
        rounded[(int(b), kind)] = [float(v) for v in vals]

    def deficit(b):
        l = rounded.get((b, "load"), [0.0] * STEPS)
        g = rounded.get((b, "gen"), [0.0] * STEPS)
        return sum(x - y for x, y in zip(l, g))

    alpha = {b: 0.0 for b in ids}
    spread = [0.6, 1.0, 1.5, 0.8, 1.25, 0.7, 1.1]
    scale = 25.0
    for _, members in HIGH:
        loads = [b for b in members if b in load]
        need = sum(deficit(b) for b in loads)
        inv = sum(1.0 / spread[i % len(spread)] for i, _ in enumerate(loads))
        c = scale * inv / need
        for i, b in enumerate(loads):
            alpha[b] = round(c * spread[i % len(spread)], 6)

    cap_plus = [round(1.5 * max(load[b]), 6) if b in load else 0.0 for b in ids]
    cap_minus = [
        round(max([0.0] + [rounded.get((b, "gen"), [0.0] * STEPS)[t] - rounded[(b, "load")][t] for t in range(STEPS)])
              + 0.5 * max(load[b]), 6) if b in load else 0.0
        for b in ids
    ]

    def config(partition, label):
        return {
            "name": f"synthetic-39bus-{label}",
            "case_file": "case39.m",
            "profiles_file": "profiles_39.csv",
            "step_hours": 1.0,
            "reference_bus": 1,
            "flex_only_at_load_buses": True,
            "partition": [{"name": n, "buses": m} for n, m in partition],
            "alpha": [alpha[b] for b in ids],
            "beta": [round(0.5 * alpha[b], 6) for b in ids],
            "cap_plus": cap_plus,
            "cap_minus": cap_minus,
            "zeta_grid": [0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100],
        }

    low = [(f"L{b}", [b]) for b in ids if b in load]
    for label, partition in (("low", low), ("medium", MEDIUM), ("high", HIGH)):
        (HERE / f"scenario_39_{label}.json").write_text(json.dumps(config(partition, label), indent=2) + "\n")


if __name__ == "__main__":
    main()
