"""Rooted power-network dependency tree, service propagation and gravity demand.

A grid cell (or retailer) is energized iff every component on the unique
root-to-sink supply path is functional.  Demand is coupled to retailers by a
gravity model P(r|c) proportional to w_r * exp(b * T_cr).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import ConfigurationError, CycleError, DanglingParentError, MultipleRootsError, NetworkError

COMPONENT_CLASSES = ("substation", "transmission", "distribution")

MODE_HOUSEHOLDS = "households"
MODE_HOUSEHOLDS_AND_RETAILERS = "households_and_retailers"
MODES = (MODE_HOUSEHOLDS, MODE_HOUSEHOLDS_AND_RETAILERS)


@dataclass(frozen=True)
class Component:
    id: int
    component_class: str
    parent: int | None
    location: tuple[float, float]

    def __post_init__(self):
        if self.component_class not in COMPONENT_CLASSES:
            raise NetworkError(f"unknown component class {self.component_class!r}")


@dataclass(frozen=True)
class GridCell:
    id: int
    population: int
    sink: int
    centroid: tuple[float, float]

    def __post_init__(self):
        if self.population < 0:
            raise NetworkError(f"cell {self.id}: negative population")


@dataclass(frozen=True)
class Retailer:
    id: int
    capacity: float
    sink: int

    def __post_init__(self):
        if self.capacity <= 0:
            raise NetworkError(f"retailer {self.id}: capacity must be positive")


class EpnTree:
    """Validated rooted dependency tree with level index and path cache."""

    def __init__(self, components: list[Component]):
        if not components:
            raise NetworkError("no components")
        self.components = {c.id: c for c in components}
        if len(self.components) != len(components):
            raise NetworkError("duplicate component ids")

        roots = [c.id for c in components if c.parent is None]
        if len(roots) != 1:
            raise MultipleRootsError(f"expected exactly one root, found {sorted(roots)}")
        self.root = roots[0]

        self.children: dict[int, list[int]] = {c.id: [] for c in components}
        for c in components:
            if c.parent is None:
                continue
            if c.parent not in self.components:
                raise DanglingParentError(f"component {c.id}: parent {c.parent} not found")
            self.children[c.parent].append(c.id)
        for kids in self.children.values():
            kids.sort()

        # BFS from the root assigns levels and proves every node reachable
        # (unreachable nodes imply a cycle among non-root components).
        self.level: dict[int, int] = {self.root: 0}
        queue = [self.root]
        while queue:
            nxt = []
            for node in queue:
                for child in self.children[node]:
                    self.level[child] = self.level[node] + 1
                    nxt.append(child)
            queue = nxt
        if len(self.level) != len(self.components):
            unreached = sorted(set(self.components) - set(self.level))
            raise CycleError(f"components not reachable from root (cycle): {unreached}")

        self.depth = max(self.level.values())
        self._path_cache: dict[int, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self.components)

    @property
    def ids(self) -> list[int]:
        return sorted(self.components)

    def supply_path(self, sink: int) -> tuple[int, ...]:
        """Ordered component ids from the root down to (and including) sink."""
        if sink not in self.components:
            raise NetworkError(f"unknown sink {sink}")
        cached = self._path_cache.get(sink)
        if cached is not None:
            return cached
        path = []
        node: int | None = sink
        while node is not None:
            path.append(node)
            node = self.components[node].parent
        result = tuple(reversed(path))
        self._path_cache[sink] = result
        return result


def build_tree(components: list[Component]) -> EpnTree:
    return EpnTree(components)


def supply_path(tree: EpnTree, sink: int) -> tuple[int, ...]:
    return tree.supply_path(sink)


def gravity_probs(capacities: np.ndarray, travel_times: np.ndarray, b: float) -> np.ndarray:
    """Retailer-choice probabilities for one cell: P(r) ~ w_r * exp(b * T_r)."""
    if b >= 0:
        raise ConfigurationError(f"gravity decay b must be negative, got {b}")
    w = np.asarray(capacities, dtype=float)
    t = np.asarray(travel_times, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ConfigurationError("travel times must be finite and non-negative")
    weights = w * np.exp(b * t)
    total = weights.sum()
    if total <= 0.0:
        raise ConfigurationError(
            "all gravity weights underflowed to zero; cannot renormalize"
        )
    return weights / total


@dataclass(frozen=True)
class DemandModel:
    """Gravity assignment of cells to retailers.

    probs is (n_cells, n_retailers), row-aligned with cells and column-aligned
    with retailers; every row sums to 1.
    """

    cells: tuple[GridCell, ...]
    retailers: tuple[Retailer, ...]
    travel_times: np.ndarray
    b: float
    probs: np.ndarray

    @classmethod
    def build(
        cls,
        cells: list[GridCell],
        retailers: list[Retailer],
        travel_times: np.ndarray,
        b: float = -0.1,
    ) -> "DemandModel":
        tt = np.asarray(travel_times, dtype=float)
        if tt.shape != (len(cells), len(retailers)):
            raise ConfigurationError(
                f"travel time matrix shape {tt.shape} does not match "
                f"({len(cells)}, {len(retailers)})"
            )
        caps = np.array([r.capacity for r in retailers])
        probs = np.vstack([gravity_probs(caps, tt[i], b) for i in range(len(cells))])
        return cls(
            cells=tuple(cells),
            retailers=tuple(retailers),
            travel_times=tt,
            b=b,
            probs=probs,
        )

    @property
    def total_population(self) -> int:
        return sum(c.population for c in self.cells)


def served_population(
    tree: EpnTree,
    functional: set[int],
    demand: DemandModel,
    mode: str = MODE_HOUSEHOLDS,
) -> float:
    """People served by the functional component set under the given mode.

    households: a cell's population counts iff its whole supply path is
    functional.  households_and_retailers: the cell population is additionally
    weighted by the gravity mass of functional retailers (expected-value
    accounting, so the result can be fractional).
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    served = 0.0
    if mode == MODE_HOUSEHOLDS:
        for cell in demand.cells:
            if all(c in functional for c in tree.supply_path(cell.sink)):
                served += cell.population
        return served
    retailer_ok = np.array(
        [all(c in functional for c in tree.supply_path(r.sink)) for r in demand.retailers],
        dtype=float,
    )
    for i, cell in enumerate(demand.cells):
        if all(c in functional for c in tree.supply_path(cell.sink)):
            served += cell.population * float(demand.probs[i] @ retailer_ok)
    return served


class ServiceModel:
    """Service evaluation bound to one (tree, demand, mode) triple.

    Precomputes supply paths so repeated queries during simulation are cheap.
    """

    def __init__(self, tree: EpnTree, demand: DemandModel, mode: str = MODE_HOUSEHOLDS):
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
        self.tree = tree
        self.demand = demand
        self.mode = mode
        self.cell_paths = [set(tree.supply_path(c.sink)) for c in demand.cells]
        self.retailer_paths = [set(tree.supply_path(r.sink)) for r in demand.retailers]
        self.total_population = demand.total_population

    def served_given_damaged(self, damaged: set[int]) -> float:
        """Served population when exactly `damaged` components are down."""
        served = 0.0
        if self.mode == MODE_HOUSEHOLDS:
            for cell, path in zip(self.demand.cells, self.cell_paths):
                if not (path & damaged):
                    served += cell.population
            return served
        retailer_ok = np.array(
            [not (path & damaged) for path in self.retailer_paths], dtype=float
        )
        for i, (cell, path) in enumerate(zip(self.demand.cells, self.cell_paths)):
            if not (path & damaged):
                served += cell.population * float(self.demand.probs[i] @ retailer_ok)
        return served


def load_components(path) -> list[Component]:
    """Load components from CSV (id, class, parent_id, x_km, y_km)."""
    df = pd.read_csv(path)
    comps = []
    for r in df.to_dict("records"):
        parent = r["parent_id"]
        parent = None if pd.isna(parent) else int(parent)
        comps.append(
            Component(
                id=int(r["id"]),
                component_class=str(r["class"]),
                parent=parent,
                location=(float(r["x_km"]), float(r["y_km"])),
            )
        )
    return comps


def load_cells(path) -> list[GridCell]:
    """Load grid cells from CSV (id, population, sink_id, x_km, y_km)."""
    df = pd.read_csv(path)
    return [
        GridCell(
            id=int(r["id"]),
            population=int(r["population"]),
            sink=int(r["sink_id"]),
            centroid=(float(r["x_km"]), float(r["y_km"])),
        )
        for r in df.to_dict("records")
    ]


def load_retailers(path) -> list[Retailer]:
    """Load retailers from CSV (id, capacity, sink_id)."""
    df = pd.read_csv(path)
    return [
        Retailer(id=int(r["id"]), capacity=float(r["capacity"]), sink=int(r["sink_id"]))
        for r in df.to_dict("records")
    ]


def load_travel_times(path, cells: list[GridCell], retailers: list[Retailer]) -> np.ndarray:
    """Load the (cell, retailer) -> minutes matrix from long-format CSV."""
    df = pd.read_csv(path)
    cell_idx = {c.id: i for i, c in enumerate(cells)}
    ret_idx = {r.id: j for j, r in enumerate(retailers)}
    tt = np.full((len(cells), len(retailers)), np.nan)
    for r in df.to_dict("records"):
        tt[cell_idx[int(r["cell_id"])], ret_idx[int(r["retailer_id"])]] = float(r["minutes"])
    if np.isnan(tt).any():
        raise ConfigurationError("travel time matrix has missing (cell, retailer) pairs")
    return tt
