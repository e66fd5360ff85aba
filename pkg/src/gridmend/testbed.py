"""Synthetic full-scale testbed: a 327-component serial power network serving
a 6x6 population grid and six food retailers.

The layout is deterministic: a substation root, a short transmission trunk,
and six distribution feeders (one per grid column) that branch up and down
each column.  Populations, retailer capacities and travel times are fixed so
experiments are reproducible without any external data.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .damage import DamageState
from .network import Component, GridCell, Retailer, build_tree

N_COMPONENTS = 327
GRID_SIDE = 6
TOTAL_POPULATION = 48_821
RETAILER_CAPACITIES = (395, 220, 130, 106, 100, 130)
DRIVE_SPEED_KM_PER_MIN = 0.5

# cell side in km: 6x6 grid covering a ~42 km^2 study area
CELL_KM = 1.08
AREA_SIDE = GRID_SIDE * CELL_KM


def _cell_centroid(col: int, row: int) -> tuple[float, float]:
    return ((col + 0.5) * CELL_KM, (row + 0.5) * CELL_KM)


def build_components() -> list[Component]:
    """The 327-component dependency tree: root, trunk and six feeders."""
    comps: list[Component] = []
    cx = AREA_SIDE / 2.0
    root_y = AREA_SIDE / 2.0
    comps.append(Component(id=1, component_class="substation", parent=None, location=(cx, root_y)))

    # transmission trunk: ids 2..7, heading north from the root
    trunk_len = 6
    for i in range(trunk_len):
        comps.append(
            Component(
                id=2 + i,
                component_class="transmission",
                parent=1 + i,
                location=(cx, root_y + 0.1 * (i + 1)),
            )
        )
    hub = 1 + trunk_len
    hub_y = root_y + 0.1 * trunk_len

    # distribution: 320 components in six feeders, one per cell column.
    # Each feeder runs horizontally from the hub to its column, then branches
    # into an up-chain and a down-chain along the column.
    horiz = [10, 6, 2, 2, 6, 10]
    budget = N_COMPONENTS - 1 - trunk_len - sum(horiz)  # vertical components
    vert_each = budget // (2 * GRID_SIDE)
    extras = budget - vert_each * 2 * GRID_SIDE
    next_id = hub + 1
    feeders: list[dict] = []
    for j in range(GRID_SIDE):
        col_x = (j + 0.5) * CELL_KM
        # horizontal run
        parent = hub
        hn = horiz[j]
        for s in range(hn):
            x = cx + (col_x - cx) * (s + 1) / hn
            comps.append(
                Component(
                    id=next_id,
                    component_class="distribution",
                    parent=parent,
                    location=(x, hub_y),
                )
            )
            parent = next_id
            next_id += 1
        branch_root = parent
        chains = {}
        for direction in (+1, -1):
            n_vert = vert_each + (1 if extras > 0 else 0)
            if extras > 0:
                extras -= 1
            span = (AREA_SIDE - hub_y) if direction > 0 else hub_y
            parent = branch_root
            chain = []
            for s in range(n_vert):
                y = hub_y + direction * span * (s + 1) / (n_vert + 1)
                comps.append(
                    Component(
                        id=next_id,
                        component_class="distribution",
                        parent=parent,
                        location=(col_x, y),
                    )
                )
                chain.append(next_id)
                parent = next_id
                next_id += 1
            chains[direction] = chain
        feeders.append({"column": j, "up": chains[+1], "down": chains[-1]})
    assert next_id - 1 == N_COMPONENTS, next_id
    return comps


def build_cells(components: list[Component]) -> list[GridCell]:
    """36 cells with a center-weighted population split and nearest-chain sinks."""
    by_id = {c.id: c for c in components}
    dist_ids = [c.id for c in components if c.component_class == "distribution"]

    weights = np.empty((GRID_SIDE, GRID_SIDE))
    center = (AREA_SIDE / 2.0, AREA_SIDE / 2.0)
    for col in range(GRID_SIDE):
        for row in range(GRID_SIDE):
            x, y = _cell_centroid(col, row)
            d2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
            weights[col, row] = math.exp(-d2 / 0.7)
    weights /= weights.sum()

    cells = []
    pops = np.floor(weights.ravel() * TOTAL_POPULATION).astype(int)
    pops[np.argmax(pops)] += TOTAL_POPULATION - pops.sum()  # keep the exact total
    i = 0
    for col in range(GRID_SIDE):
        for row in range(GRID_SIDE):
            x, y = _cell_centroid(col, row)
            sink = min(
                dist_ids,
                key=lambda cid: (
                    (by_id[cid].location[0] - x) ** 2 + (by_id[cid].location[1] - y) ** 2,
                    cid,
                ),
            )
            cells.append(
                GridCell(id=i + 1, population=int(pops[i]), sink=sink, centroid=(x, y))
            )
            i += 1
    return cells


def build_retailers(components: list[Component]) -> list[Retailer]:
    """Six retailers anchored to distribution components spread over the area."""
    by_id = {c.id: c for c in components}
    dist_ids = [c.id for c in components if c.component_class == "distribution"]
    anchors = [
        (1.6, 2.2), (4.9, 2.2), (3.2, 1.1), (2.7, 4.9), (4.3, 5.4), (1.1, 4.3),
    ]
    retailers = []
    for i, ((x, y), cap) in enumerate(zip(anchors, RETAILER_CAPACITIES)):
        sink = min(
            dist_ids,
            key=lambda cid: (
                (by_id[cid].location[0] - x) ** 2 + (by_id[cid].location[1] - y) ** 2,
                cid,
            ),
        )
        retailers.append(Retailer(id=i + 1, capacity=float(cap), sink=sink))
    return retailers


def build_travel_times(cells: list[GridCell], retailers: list[Retailer], components: list[Component]) -> np.ndarray:
    """Driving minutes between cell centroids and retailer locations."""
    by_id = {c.id: c for c in components}
    tt = np.empty((len(cells), len(retailers)))
    for i, cell in enumerate(cells):
        for j, ret in enumerate(retailers):
            loc = by_id[ret.sink].location
            d = math.hypot(cell.centroid[0] - loc[0], cell.centroid[1] - loc[1])
            tt[i, j] = d / DRIVE_SPEED_KM_PER_MIN
    return tt


# Restoration days per damage state (Undamaged..Complete)
RESTORATION_DAYS = {
    "substation": (0.0, 1.0, 3.0, 7.0, 30.0),
    "transmission": (0.0, 0.5, 1.0, 1.0, 2.0),
    "distribution": (0.0, 0.5, 1.0, 1.0, 1.0),
}

# Example fragility parameters (median PGA in g, ln-std) per state
# Minor..Complete.  Calibrated so the default event damages well over 60% of
# components on average; the substation and trunk are engineered to a higher
# seismic standard than the distribution poles.
FRAGILITY_PARAMS = {
    "substation": {"medians": (0.50, 1.00, 2.20, 3.50), "xi": 0.55},
    "transmission": {"medians": (0.40, 0.75, 1.30, 2.20), "xi": 0.50},
    "distribution": {"medians": (0.30, 0.60, 1.00, 1.50), "xi": 0.50},
}

DEFAULT_CONFIG = {
    "event": {"magnitude": 6.9, "epicenter": [3.24, 18.0], "fault_params": []},
    "attenuation": {
        "c0": 1.8,
        "c1": 0.6,
        "c2": -0.9,
        "c3": 10.0,
        "c4": -0.4,
        "sigma_intra": 0.45,
        "tau_inter": 0.3,
        "correlation_range": 15.0,
        "vs30": 400.0,
    },
    "files": {
        "components": "components.csv",
        "cells": "cells.csv",
        "retailers": "retailers.csv",
        "fragilities": "fragilities.csv",
        "restoration": "restoration.csv",
        "travel_times": "travel_times.csv",
    },
    "n_resources": 10,
    "objective": "f2",
    "gamma": 0.8,
    "mode": "households",
    "base": "smart",
    "pooling": "one_step",
    "cap": 100_000,
    "lookahead": 1,
    "scenarios": 20,
    "master_seed": 1,
    "gravity_b": -0.1,
    "f2_normalization": "final",
}


def write_testbed(out_dir: str, config_overrides: dict | None = None) -> str:
    """Write the testbed CSVs plus a config file; returns the config path."""
    os.makedirs(out_dir, exist_ok=True)
    comps = build_components()
    build_tree(comps)  # validates
    cells = build_cells(comps)
    retailers = build_retailers(comps)
    tt = build_travel_times(cells, retailers, comps)

    with open(os.path.join(out_dir, "components.csv"), "w") as fh:
        fh.write("id,class,parent_id,x_km,y_km\n")
        for c in comps:
            parent = "" if c.parent is None else c.parent
            fh.write(f"{c.id},{c.component_class},{parent},{c.location[0]:.4f},{c.location[1]:.4f}\n")

    with open(os.path.join(out_dir, "cells.csv"), "w") as fh:
        fh.write("id,population,sink_id,x_km,y_km\n")
        for c in cells:
            fh.write(f"{c.id},{c.population},{c.sink},{c.centroid[0]:.4f},{c.centroid[1]:.4f}\n")

    with open(os.path.join(out_dir, "retailers.csv"), "w") as fh:
        fh.write("id,capacity,sink_id\n")
        for r in retailers:
            fh.write(f"{r.id},{r.capacity:.0f},{r.sink}\n")

    with open(os.path.join(out_dir, "travel_times.csv"), "w") as fh:
        fh.write("cell_id,retailer_id,minutes\n")
        for i, c in enumerate(cells):
            for j, r in enumerate(retailers):
                fh.write(f"{c.id},{r.id},{tt[i, j]:.4f}\n")

    with open(os.path.join(out_dir, "fragilities.csv"), "w") as fh:
        fh.write("class,state,lambda,xi\n")
        for cls, params in FRAGILITY_PARAMS.items():
            for state, median in zip((1, 2, 3, 4), params["medians"]):
                fh.write(f"{cls},{state},{math.log(median):.6f},{params['xi']}\n")

    with open(os.path.join(out_dir, "restoration.csv"), "w") as fh:
        fh.write("class,state,days\n")
        for cls, days in RESTORATION_DAYS.items():
            for state in DamageState:
                fh.write(f"{cls},{int(state)},{days[int(state)]}\n")

    config = json.loads(json.dumps(DEFAULT_CONFIG))
    if config_overrides:
        config.update(config_overrides)
    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return config_path
