"""Lognormal fragility curves, damage-state sampling and restoration times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import pandas as pd
from scipy.stats import norm

from .errors import ConfigurationError

# Negative differenced probabilities beyond this are treated as crossing curves.
_CROSSING_TOL = 1e-12


class DamageState(IntEnum):
    UNDAMAGED = 0
    MINOR = 1
    MODERATE = 2
    EXTENSIVE = 3
    COMPLETE = 4


def exceedance_prob(lam: float, xi: float, im: float) -> float:
    """P(DS >= ds | IM = im) for a lognormal fragility with ln-median lam."""
    if im <= 0:
        raise ConfigurationError(f"im must be positive, got {im}")
    if xi <= 0:
        raise ConfigurationError(f"xi must be positive, got {xi}")
    return float(norm.cdf((math.log(im) - lam) / xi))


@dataclass(frozen=True)
class FragilityCurves:
    """Fragility parameters of one component class.

    lam and xi hold one (ln-median, ln-std) pair per non-Undamaged state,
    ordered Minor..Complete.
    """

    component_class: str
    lam: tuple[float, float, float, float]
    xi: tuple[float, float, float, float]

    def __post_init__(self):
        if any(x <= 0 for x in self.xi):
            raise ConfigurationError(f"{self.component_class}: xi must be positive")
        self._validate_non_crossing()

    def _validate_non_crossing(self):
        xis = set(self.xi)
        if len(xis) == 1:
            if any(b < a for a, b in zip(self.lam, self.lam[1:])):
                raise ConfigurationError(
                    f"{self.component_class}: crossing fragility curves "
                    "(lam must be non-decreasing with state for equal xi)"
                )
            return
        # Unequal dispersions: check numerically on a grid spanning the medians.
        lo = min(self.lam) - 4 * max(self.xi)
        hi = max(self.lam) + 4 * max(self.xi)
        for im in np.exp(np.linspace(lo, hi, 100)):
            probs = self.state_probs(im)
            if min(probs) < -_CROSSING_TOL:
                raise ConfigurationError(
                    f"{self.component_class}: crossing fragility curves at im={im:g}"
                )

    def exceedance(self, im: float) -> np.ndarray:
        """Exceedance probabilities for states Minor..Complete."""
        return np.array([exceedance_prob(l, x, im) for l, x in zip(self.lam, self.xi)])

    def state_probs(self, im: float) -> np.ndarray:
        """Per-state probabilities obtained by differencing the exceedances."""
        e = self.exceedance(im)
        p = np.empty(5)
        p[0] = 1.0 - e[0]
        p[1:4] = e[:3] - e[1:]
        p[4] = e[3]
        if p.min() < -_CROSSING_TOL:
            raise ConfigurationError(
                f"{self.component_class}: negative state probability at im={im:g}"
            )
        return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class FragilitySet:
    """Fragility curves keyed by component class."""

    curves: dict[str, FragilityCurves]

    def for_class(self, component_class: str) -> FragilityCurves:
        try:
            return self.curves[component_class]
        except KeyError:
            raise ConfigurationError(
                f"no fragility curves for class {component_class!r}"
            ) from None


@dataclass(frozen=True)
class RestorationTable:
    """Repair durations in days, keyed by (component class, damage state)."""

    days: dict[tuple[str, DamageState], float]

    def __post_init__(self):
        classes = {c for c, _ in self.days}
        for cls in classes:
            if self.days.get((cls, DamageState.UNDAMAGED), 0.0) != 0.0:
                raise ConfigurationError(f"{cls}: Undamaged must take 0 days")
            prev = 0.0
            for ds in DamageState:
                if (cls, ds) not in self.days:
                    raise ConfigurationError(f"{cls}: missing state {ds.name}")
                d = self.days[cls, ds]
                if d < prev:
                    raise ConfigurationError(
                        f"{cls}: days must be non-decreasing with damage state"
                    )
                prev = d


def restoration_time(table: RestorationTable, component_class: str, ds: DamageState) -> float:
    key = (component_class, DamageState(ds))
    if key not in table.days:
        raise ConfigurationError(f"unknown (class, state) pair {key}")
    return table.days[key]


def sample_damage_state(frag: FragilityCurves, im: float, rng: np.random.Generator) -> DamageState:
    """Draw one damage state by inverse CDF against the exceedance thresholds."""
    e = frag.exceedance(im)
    if np.any(np.diff(e) > _CROSSING_TOL):
        raise ConfigurationError(f"{frag.component_class}: crossing curves at im={im:g}")
    u = rng.uniform()
    state = 0
    for k in range(4):
        if u <= e[k]:
            state = k + 1
    return DamageState(state)


@dataclass(frozen=True)
class DamageScenario:
    """Sampled per-component damage states and initial remaining repair times."""

    states: dict[int, DamageState]
    remaining: dict[int, float]  # damaged components only, days > 0

    @property
    def damaged(self) -> set[int]:
        return set(self.remaining)

    @property
    def n_damaged(self) -> int:
        return len(self.remaining)


def generate_scenario(
    im_by_component: dict[int, float],
    classes: dict[int, str],
    frags: FragilitySet,
    table: RestorationTable,
    seed: int,
) -> DamageScenario:
    """Sample a damage scenario from per-component intensity measures.

    Each component uses its own rng stream derived from (seed, component id),
    so the result does not depend on iteration order.
    """
    states: dict[int, DamageState] = {}
    remaining: dict[int, float] = {}
    for cid in im_by_component:
        rng = np.random.default_rng([seed, cid])
        ds = sample_damage_state(frags.for_class(classes[cid]), im_by_component[cid], rng)
        states[cid] = ds
        days = restoration_time(table, classes[cid], ds)
        if days > 0:
            remaining[cid] = days
    return DamageScenario(states=states, remaining=remaining)


def load_fragilities(path) -> FragilitySet:
    """Load fragility curves from CSV rows (class, state, lambda, xi)."""
    df = pd.read_csv(path)
    curves = {}
    for cls, group in df.groupby("class", sort=True):
        by_state = {
            int(r["state"]): (float(r["lambda"]), float(r["xi"]))
            for r in group.to_dict("records")
        }
        expected = {1, 2, 3, 4}
        if set(by_state) != expected:
            raise ConfigurationError(f"{cls}: fragility CSV must cover states 1..4")
        lam = tuple(by_state[s][0] for s in sorted(expected))
        xi = tuple(by_state[s][1] for s in sorted(expected))
        curves[cls] = FragilityCurves(component_class=str(cls), lam=lam, xi=xi)
    return FragilitySet(curves=curves)


def load_restoration_table(path) -> RestorationTable:
    """Load restoration times from CSV rows (class, state, days)."""
    df = pd.read_csv(path)
    days = {
        (str(r["class"]), DamageState(int(r["state"]))): float(r["days"])
        for r in df.to_dict("records")
    }
    return RestorationTable(days=days)
