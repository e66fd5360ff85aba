"""Shared fixtures: toy instance generation and the full synthetic testbed."""

import math

import numpy as np
import pytest

from gridmend import damage as dmg
from gridmend import hazard, network, planner, testbed
from gridmend.network import Component, DemandModel, GridCell, Retailer, build_tree
from gridmend.sim import SimState, step

# restoration-time value set used by the toy generator (all multiples of 0.5,
# so day arithmetic is exact in float64)
TOY_TIME_VALUES = (0.5, 1.0, 2.0, 3.0, 7.0, 30.0)


def random_toy_instance(seed):
    """A small random planning instance: tree depth <= 4, M in [4, 12], N in [1, 3].

    Populations are integers and repair times come from TOY_TIME_VALUES, so
    every objective evaluation is exact float arithmetic.  The damaged set is
    kept small enough that exhaustive enumeration stays cheap.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 13))
    comps = [Component(id=1, component_class="substation", parent=None, location=(0.0, 0.0))]
    levels = {1: 0}
    for cid in range(2, m + 1):
        eligible = [c for c in levels if levels[c] <= 3]
        parent = int(rng.choice(eligible))
        levels[cid] = levels[parent] + 1
        cls = "transmission" if levels[cid] == 1 else "distribution"
        comps.append(
            Component(
                id=cid,
                component_class=cls,
                parent=parent,
                location=(float(cid), float(levels[cid])),
            )
        )
    tree = build_tree(comps)

    n_cells = int(rng.integers(1, 4))
    cells = [
        GridCell(
            id=i + 1,
            population=int(rng.integers(50, 500)),
            sink=int(rng.choice(tree.ids)),
            centroid=(float(i), 0.0),
        )
        for i in range(n_cells)
    ]
    retailers = [Retailer(id=1, capacity=10.0, sink=int(rng.choice(tree.ids)))]
    tt = rng.integers(1, 30, size=(n_cells, 1)).astype(float)
    demand = DemandModel.build(cells, retailers, tt, b=-0.1)

    n_resources = int(rng.integers(1, 4))
    lo = min(n_resources + 1, m)
    hi = min(m, n_resources + 4)
    n_damaged = int(rng.integers(lo, hi + 1))
    damaged = rng.choice(tree.ids, size=n_damaged, replace=False)
    remaining = {int(c): float(rng.choice(TOY_TIME_VALUES)) for c in damaged}
    return tree, demand, remaining, n_resources


def replay_and_check_invariants(initial_remaining, actions, n_resources):
    """Re-run a recorded action string through step(), asserting the contract.

    Checks: at least one completion per epoch (strictly shrinking damaged
    set), work conservation per component within 1e-9 days, and a total epoch
    count of at most M.
    """
    state = SimState(remaining=dict(initial_remaining))
    decrements = {cid: 0.0 for cid in initial_remaining}
    epochs = 0
    for action in actions:
        before = state.n_damaged
        new_state, k, completed = step(state, action)
        assert k > 0.0
        assert len(completed) >= 1
        assert new_state.n_damaged < before
        for cid in action:
            decrements[cid] += k
        state = new_state
        epochs += 1
    assert not state.remaining, "action string did not finish the repairs"
    assert epochs <= len(initial_remaining)
    for cid, total in initial_remaining.items():
        assert decrements[cid] == pytest.approx(total, abs=1e-9)


class TestbedBundle:
    """The full 327-component testbed plus a batch of damage scenarios."""

    def __init__(self):
        comps = testbed.build_components()
        self.tree = build_tree(comps)
        self.cells = testbed.build_cells(comps)
        self.retailers = testbed.build_retailers(comps)
        tt = testbed.build_travel_times(self.cells, self.retailers, comps)
        self.demand = DemandModel.build(self.cells, self.retailers, tt, b=-0.1)
        att = dict(testbed.DEFAULT_CONFIG["attenuation"])
        vs30 = att.pop("vs30")
        self.event = hazard.EventSpec(
            magnitude=testbed.DEFAULT_CONFIG["event"]["magnitude"],
            epicenter=tuple(testbed.DEFAULT_CONFIG["event"]["epicenter"]),
        )
        self.attenuation = hazard.AttenuationParams(**att)
        self.sites = [
            hazard.Site(location=self.tree.components[c].location, vs30=vs30)
            for c in self.tree.ids
        ]
        self.frags = dmg.FragilitySet(
            {
                cls: dmg.FragilityCurves(
                    component_class=cls,
                    lam=tuple(math.log(mm) for mm in p["medians"]),
                    xi=(p["xi"],) * 4,
                )
                for cls, p in testbed.FRAGILITY_PARAMS.items()
            }
        )
        self.table = dmg.RestorationTable(
            {
                (cls, dmg.DamageState(s)): d
                for cls, days in testbed.RESTORATION_DAYS.items()
                for s, d in enumerate(days)
            }
        )
        self.classes = {
            c: self.tree.components[c].component_class for c in self.tree.ids
        }
        self.smart = planner.importance_order(self.tree, self.demand)

    def scenario(self, seed):
        field = hazard.sample_im_field(self.event, self.sites, self.attenuation, seed=seed)
        im = dict(zip(self.tree.ids, field.realization(0)))
        return dmg.generate_scenario(im, self.classes, self.frags, self.table, seed=seed)

    def heavy_scenarios(self, seeds, min_fraction=0.6):
        """(seed, scenario) pairs whose damaged fraction exceeds min_fraction."""
        out = []
        for seed in seeds:
            sc = self.scenario(seed)
            if sc.n_damaged / len(self.tree) > min_fraction:
                out.append((seed, sc))
        return out


@pytest.fixture(scope="session")
def bundle():
    return TestbedBundle()


@pytest.fixture(scope="session")
def households_service(bundle):
    return network.ServiceModel(bundle.tree, bundle.demand, "households")


@pytest.fixture(scope="session")
def households_context(bundle):
    return planner.PlayoutContext(bundle.tree, bundle.demand, "households")
