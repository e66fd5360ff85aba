"""Batch experiment driver: scenarios -> plans -> summary and plot data files.

For each scenario (seeded from the master seed plus the scenario index) the
driver samples a ground-motion field, generates damage, runs the base
heuristic and the rollout planner, and writes per-scenario trajectories plus
aggregate CSVs.  Outputs are byte-stable for a fixed config and seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import damage as dmg
from . import hazard, network
from .errors import ConfigurationError
from .planner import (
    Objective,
    PlayoutContext,
    PlanResult,
    base_plan,
    importance_order,
    random_order,
    rollout_plan,
)
from .sim import evaluate_F1, export_trajectory_csv

MEAN_TRAJECTORY_GRID_STEP = 0.25  # days

# epsilon for the rollout-dominance assertion; absorbs last-ulp differences in
# fractional-people accounting, never real regressions
DOMINANCE_EPS = 1e-9


@dataclass
class ExperimentConfig:
    event: hazard.EventSpec
    attenuation: hazard.AttenuationParams
    vs30: float
    files: dict[str, str]
    n_resources: int = 10
    objective: str = "f2"
    gamma: float = 0.8
    mode: str = network.MODE_HOUSEHOLDS
    base: str = "random"  # random | smart
    pooling: str = "random_cap"
    cap: int = 100_000
    lookahead: int | str = 1
    scenarios: int = 20
    master_seed: int = 1
    gravity_b: float = -0.1
    f2_normalization: str = "final"
    base_dir: str = "."

    def __post_init__(self):
        if self.n_resources < 1:
            raise ConfigurationError("n_resources must be >= 1")
        if self.cap < 1:
            raise ConfigurationError("cap must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must be in [0, 1]")
        if self.base not in ("random", "smart"):
            raise ConfigurationError(f"unknown base heuristic {self.base!r}")
        if self.mode not in network.MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.scenarios < 1:
            raise ConfigurationError("scenario count must be >= 1")

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if overrides:
            raw.update({k: v for k, v in overrides.items() if v is not None})
        ev = raw["event"]
        att = dict(raw["attenuation"])
        vs30 = att.pop("vs30", 400.0)
        return cls(
            event=hazard.EventSpec(
                magnitude=ev["magnitude"],
                epicenter=tuple(ev["epicenter"]),
                fault_params=tuple(ev.get("fault_params", ())),
            ),
            attenuation=hazard.AttenuationParams(**att),
            vs30=vs30,
            files=raw["files"],
            n_resources=int(raw.get("n_resources", 10)),
            objective=raw.get("objective", "f2"),
            gamma=float(raw.get("gamma", 0.8)),
            mode=raw.get("mode", network.MODE_HOUSEHOLDS),
            base=raw.get("base", "random"),
            pooling=raw.get("pooling", "random_cap"),
            cap=int(raw.get("cap", 100_000)),
            lookahead=raw.get("lookahead", 1),
            scenarios=int(raw.get("scenarios", 20)),
            master_seed=int(raw.get("master_seed", 1)),
            gravity_b=float(raw.get("gravity_b", -0.1)),
            f2_normalization=raw.get("f2_normalization", "final"),
            base_dir=os.path.dirname(os.path.abspath(path)),
        )

    def path(self, key: str) -> str:
        p = self.files[key]
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def objective_spec(self) -> Objective:
        return Objective(
            kind=self.objective, gamma=self.gamma, f2_normalization=self.f2_normalization
        )

    def manifest(self) -> dict:
        return {
            "event": {
                "magnitude": self.event.magnitude,
                "epicenter": list(self.event.epicenter),
                "fault_params": list(self.event.fault_params),
            },
            "attenuation": {
                "c0": self.attenuation.c0,
                "c1": self.attenuation.c1,
                "c2": self.attenuation.c2,
                "c3": self.attenuation.c3,
                "c4": self.attenuation.c4,
                "sigma_intra": self.attenuation.sigma_intra,
                "tau_inter": self.attenuation.tau_inter,
                "correlation_range": self.attenuation.correlation_range,
                "vs30": self.vs30,
            },
            "files": dict(self.files),
            "n_resources": self.n_resources,
            "objective": self.objective,
            "gamma": self.gamma,
            "mode": self.mode,
            "base": self.base,
            "pooling": self.pooling,
            "cap": self.cap,
            "lookahead": self.lookahead,
            "scenarios": self.scenarios,
            "master_seed": self.master_seed,
            "gravity_b": self.gravity_b,
            "f2_normalization": self.f2_normalization,
            "scenario_seeds": [self.master_seed + i for i in range(1, self.scenarios + 1)],
        }


@dataclass
class ScenarioResult:
    index: int
    seed: int
    n_damaged: int
    base: PlanResult
    rollout: PlanResult

    @property
    def improvement(self) -> float:
        if self.base.objective.maximize:
            return self.rollout.objective_value - self.base.objective_value
        return self.base.objective_value - self.rollout.objective_value


@dataclass
class RunSummary:
    config: ExperimentConfig
    scenarios: list[ScenarioResult] = field(default_factory=list)

    def base_values(self) -> np.ndarray:
        return np.array([s.base.objective_value for s in self.scenarios])

    def rollout_values(self) -> np.ndarray:
        return np.array([s.rollout.objective_value for s in self.scenarios])

    def aggregates(self) -> dict:
        b, r = self.base_values(), self.rollout_values()
        return {
            "base_mean": float(b.mean()),
            "base_std": float(b.std()),
            "rollout_mean": float(r.mean()),
            "rollout_std": float(r.std()),
            "mean_improvement": float(np.mean([s.improvement for s in self.scenarios])),
        }


class Experiment:
    """Loads all input data once and runs scenario batches."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        comps = network.load_components(config.path("components"))
        self.tree = network.build_tree(comps)
        cells = network.load_cells(config.path("cells"))
        retailers = network.load_retailers(config.path("retailers"))
        tt = network.load_travel_times(config.path("travel_times"), cells, retailers)
        self.demand = network.DemandModel.build(cells, retailers, tt, b=config.gravity_b)
        self.frags = dmg.load_fragilities(config.path("fragilities"))
        self.table = dmg.load_restoration_table(config.path("restoration"))

        self.service = network.ServiceModel(self.tree, self.demand, config.mode)
        self.context = PlayoutContext(self.tree, self.demand, config.mode)
        self.sites = [
            hazard.Site(location=self.tree.components[cid].location, vs30=config.vs30)
            for cid in self.tree.ids
        ]
        self.classes = {
            cid: self.tree.components[cid].component_class for cid in self.tree.ids
        }

        order_ids = self.tree.ids
        if config.base == "smart":
            self.order = importance_order(self.tree, self.demand)
        else:
            self.order = random_order(order_ids, seed=config.master_seed)
        # rollout candidate sets always include the smart heuristic's picks
        self.smart_order = importance_order(self.tree, self.demand)

    def generate_scenario(self, seed: int) -> dmg.DamageScenario:
        field_ = hazard.sample_im_field(
            self.config.event, self.sites, self.attenuation_params(), seed=seed
        )
        im = dict(zip(self.tree.ids, field_.realization(0)))
        return dmg.generate_scenario(im, self.classes, self.frags, self.table, seed=seed)

    def attenuation_params(self) -> hazard.AttenuationParams:
        return self.config.attenuation

    def run_scenario(self, index: int) -> ScenarioResult:
        seed = self.config.master_seed + index
        scenario = self.generate_scenario(seed)
        objective = self.config.objective_spec()
        base = base_plan(
            scenario.remaining, self.order, objective, self.service, self.config.n_resources
        )
        rollout = rollout_plan(
            scenario.remaining,
            self.order,
            objective,
            self.tree,
            self.demand,
            self.config.mode,
            self.config.n_resources,
            pooling=self.config.pooling,
            cap=self.config.cap,
            lookahead=self.config.lookahead,
            seed=seed,
            context=self.context,
            service=self.service,
            smart_order=self.smart_order,
        )
        result = ScenarioResult(
            index=index, seed=seed, n_damaged=scenario.n_damaged, base=base, rollout=rollout
        )
        if result.improvement < -DOMINANCE_EPS:
            raise RuntimeError(
                f"scenario {index}: rollout ({rollout.objective_value}) is worse "
                f"than the base heuristic ({base.objective_value}); "
                "sequential-improvement invariant breached"
            )
        return result

    def run(self) -> RunSummary:
        summary = RunSummary(config=self.config)
        for i in range(1, self.config.scenarios + 1):
            summary.scenarios.append(self.run_scenario(i))
        return summary


def run_experiment(config: ExperimentConfig, out_dir: str) -> RunSummary:
    """Run the full batch and write all output files; returns the summary."""
    os.makedirs(out_dir, exist_ok=True)
    exp = Experiment(config)
    summary = exp.run()

    for s in summary.scenarios:
        export_trajectory_csv(s.base.trajectory, os.path.join(out_dir, f"trajectory_{s.index}_base.csv"))
        export_trajectory_csv(s.rollout.trajectory, os.path.join(out_dir, f"trajectory_{s.index}_rollout.csv"))

    with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
        fh.write("scenario,seed,n_damaged,base_objective,rollout_objective,improvement\n")
        for s in summary.scenarios:
            fh.write(
                f"{s.index},{s.seed},{s.n_damaged},"
                f"{s.base.objective_value:.10g},{s.rollout.objective_value:.10g},"
                f"{s.improvement:.10g}\n"
            )

    emit_plot_data(summary, out_dir)

    manifest = exp.config.manifest()
    manifest["aggregates"] = summary.aggregates()
    with open(os.path.join(out_dir, "run_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def resample_trajectory(trajectory, grid: np.ndarray) -> np.ndarray:
    """Served fraction at the given clock times (piecewise-constant levels)."""
    p = trajectory.total_population
    samples = trajectory.levels()
    clocks = np.array([c for c, _ in samples])
    levels = np.array([h / p for _, h in samples])
    idx = np.searchsorted(clocks, grid, side="right") - 1
    return levels[np.clip(idx, 0, len(levels) - 1)]


def mean_trajectory_table(summary: RunSummary) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Uniform time grid plus mean/std served fraction for both policies."""
    horizon = max(
        max((s.base.trajectory.final_clock for s in summary.scenarios), default=0.0),
        max((s.rollout.trajectory.final_clock for s in summary.scenarios), default=0.0),
    )
    grid = np.arange(0.0, horizon + MEAN_TRAJECTORY_GRID_STEP, MEAN_TRAJECTORY_GRID_STEP)
    out = {}
    for name, pick in (("base", lambda s: s.base), ("rollout", lambda s: s.rollout)):
        curves = np.vstack(
            [resample_trajectory(pick(s).trajectory, grid) for s in summary.scenarios]
        )
        out[f"{name}_mean"] = curves.mean(axis=0)
        out[f"{name}_std"] = curves.std(axis=0)
    return grid, out


def emit_plot_data(summary: RunSummary, out_dir: str) -> None:
    """Write the CSVs behind the recovery-curve, histogram and CMA figures."""
    grid, stats = mean_trajectory_table(summary)
    with open(os.path.join(out_dir, "plotdata_mean_trajectory.csv"), "w") as fh:
        fh.write(
            "time_days,base_mean,base_lo,base_hi,rollout_mean,rollout_lo,rollout_hi\n"
        )
        for i, t in enumerate(grid):
            bm, bs = stats["base_mean"][i], stats["base_std"][i]
            rm, rs = stats["rollout_mean"][i], stats["rollout_std"][i]
            fh.write(
                f"{t:.10g},{bm:.10g},{bm - bs:.10g},{bm + bs:.10g},"
                f"{rm:.10g},{rm - rs:.10g},{rm + rs:.10g}\n"
            )

    base_vals = summary.base_values()
    roll_vals = summary.rollout_values()
    all_vals = np.concatenate([base_vals, roll_vals])
    lo, hi = all_vals.min(), all_vals.max()
    span = hi - lo if hi > lo else 1.0
    edges = np.linspace(lo, lo + span, 13)
    b_hist, _ = np.histogram(base_vals, bins=edges)
    r_hist, _ = np.histogram(roll_vals, bins=edges)
    with open(os.path.join(out_dir, "plotdata_objective_histogram.csv"), "w") as fh:
        fh.write("bin_lo,bin_hi,base_count,rollout_count\n")
        for i in range(len(edges) - 1):
            fh.write(f"{edges[i]:.10g},{edges[i + 1]:.10g},{b_hist[i]},{r_hist[i]}\n")

    # cumulative moving average of days-to-gamma for both policies
    gamma = summary.config.gamma
    with open(os.path.join(out_dir, "plotdata_days_to_gamma_cma.csv"), "w") as fh:
        fh.write("scenario,base_days,rollout_days,base_cma,rollout_cma\n")
        b_sum = r_sum = 0.0
        for n, s in enumerate(summary.scenarios, start=1):
            bd = evaluate_F1(s.base.trajectory, gamma)
            rd = evaluate_F1(s.rollout.trajectory, gamma)
            b_sum += bd
            r_sum += rd
            fh.write(f"{s.index},{bd:.10g},{rd:.10g},{b_sum / n:.10g},{r_sum / n:.10g}\n")
