"""gridmend: seismic damage simulation and rollout-based repair scheduling
for serial electrical power networks."""

from .damage import (
    DamageScenario,
    DamageState,
    FragilityCurves,
    FragilitySet,
    RestorationTable,
    exceedance_prob,
    generate_scenario,
    restoration_time,
    sample_damage_state,
)
from .hazard import AttenuationParams, EventSpec, ImField, Site, median_ln_im, sample_im_field
from .network import (
    Component,
    DemandModel,
    EpnTree,
    GridCell,
    Retailer,
    ServiceModel,
    build_tree,
    gravity_probs,
    served_population,
    supply_path,
)
from .planner import (
    Objective,
    PlanResult,
    PlayoutContext,
    PriorityOrder,
    base_action,
    base_plan,
    candidate_pool_1step,
    candidate_pool_Nstep,
    enumerate_actions,
    exact_plan,
    importance_order,
    random_order,
    rollout_plan,
)
from .runner import Experiment, ExperimentConfig, RunSummary, run_experiment
from .sim import (
    RecoveryTrajectory,
    SimState,
    evaluate_F1,
    evaluate_F2,
    resilience_index,
    run_policy,
    step,
)

__version__ = "0.1.0"
