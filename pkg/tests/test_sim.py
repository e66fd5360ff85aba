"""Recovery-simulation tests: stepping, trajectories and objectives."""

import numpy as np
import pandas as pd
import pytest

from gridmend.errors import ConfigurationError, SimulationContractError
from gridmend.network import Component, DemandModel, GridCell, Retailer, ServiceModel, build_tree
from gridmend.sim import (
    Epoch,
    RecoveryTrajectory,
    SimState,
    evaluate_F1,
    evaluate_F2,
    export_trajectory_csv,
    replay_policy,
    resilience_index,
    run_policy,
    step,
)


def star_service():
    """Root 1 with children 2 and 3; 100 people on 2, 200 on 3."""
    tree = build_tree(
        [
            Component(id=1, component_class="substation", parent=None, location=(0.0, 0.0)),
            Component(id=2, component_class="distribution", parent=1, location=(0.0, 1.0)),
            Component(id=3, component_class="distribution", parent=1, location=(1.0, 1.0)),
        ]
    )
    cells = [
        GridCell(id=1, population=100, sink=2, centroid=(0.0, 1.0)),
        GridCell(id=2, population=200, sink=3, centroid=(1.0, 1.0)),
    ]
    retailers = [Retailer(id=1, capacity=1.0, sink=1)]
    demand = DemandModel.build(cells, retailers, np.array([[1.0], [1.0]]), b=-0.1)
    return ServiceModel(tree, demand, "households")


class TestStep:
    def test_advances_to_first_completion(self):
        state = SimState(remaining={1: 1.0, 2: 3.0})
        new, k, completed = step(state, {1, 2})
        assert k == 1.0
        assert completed == frozenset({1})
        assert new.remaining == {2: 2.0}
        assert new.repaired == {1}
        assert new.clock == 1.0
        # the input state is untouched
        assert state.remaining == {1: 1.0, 2: 3.0}

    def test_simultaneous_completion(self):
        state = SimState(remaining={1: 2.0, 2: 2.0})
        new, k, completed = step(state, {1, 2})
        assert k == 2.0
        assert completed == frozenset({1, 2})
        assert not new.remaining

    def test_progress_persists_across_preemption(self):
        state = SimState(remaining={1: 3.0, 2: 1.0, 3: 0.5})
        state, k, _ = step(state, {1, 3})  # work 0.5 on 1, finish 3
        assert k == 0.5
        assert state.remaining == {1: 2.5, 2: 1.0}
        state, k, _ = step(state, {2})  # preempt 1
        assert state.remaining == {1: 2.5}
        state, k, completed = step(state, {1})  # resume from saved progress
        assert k == 2.5
        assert completed == frozenset({1})
        assert state.clock == 4.0

    def test_empty_action_rejected(self):
        with pytest.raises(SimulationContractError):
            step(SimState(remaining={1: 1.0}), set())

    def test_non_damaged_target_rejected(self):
        with pytest.raises(SimulationContractError):
            step(SimState(remaining={1: 1.0}), {1, 2})


class TestRunPolicy:
    def test_hand_traced_three_component_run(self):
        service = star_service()
        remaining = {1: 1.0, 2: 2.0, 3: 0.5}
        order = [1, 3, 2]
        policy = lambda state: [c for c in order if c in state.remaining][:1]
        trajectory, actions = run_policy(remaining, policy, service, n_resources=1)
        assert trajectory.initial_level == 0.0
        assert [(e.k, e.h, e.clock) for e in trajectory.epochs] == [
            (1.0, 0.0, 1.0),
            (0.5, 200.0, 1.5),
            (2.0, 300.0, 3.5),
        ]
        assert actions == [frozenset({1}), frozenset({3}), frozenset({2})]

    def test_trivial_phase_assigns_everything(self):
        service = star_service()
        # two damaged with two resources: no policy call should ever happen
        def policy(state):
            raise AssertionError("policy must not be consulted in the trivial phase")

        trajectory, actions = run_policy({2: 0.5, 3: 2.0}, policy, service, n_resources=2)
        assert actions == [frozenset({2, 3}), frozenset({3})]
        assert [e.clock for e in trajectory.epochs] == [0.5, 2.0]
        assert trajectory.final_level == 300.0

    def test_zero_damage_run(self):
        service = star_service()
        trajectory, actions = run_policy({}, lambda s: [], service, n_resources=2)
        assert trajectory.epochs == ()
        assert actions == []
        assert trajectory.initial_level == 300.0
        assert trajectory.final_level == 300.0
        assert trajectory.final_clock == 0.0

    def test_single_minor_damage(self):
        service = star_service()
        trajectory, _ = run_policy({3: 0.5}, lambda s: [], service, n_resources=2)
        assert len(trajectory.epochs) == 1
        assert trajectory.epochs[0].k == 0.5
        assert trajectory.initial_level == 100.0
        assert trajectory.final_level == 300.0

    def test_invalid_policy_action_rejected(self):
        service = star_service()
        with pytest.raises(SimulationContractError):
            run_policy({1: 1.0, 2: 1.0, 3: 1.0}, lambda s: [1, 2], service, n_resources=1)

    def test_bad_resource_count_rejected(self):
        with pytest.raises(ConfigurationError):
            run_policy({1: 1.0}, lambda s: [1], star_service(), n_resources=0)

    def test_replay_policy_round_trip(self):
        service = star_service()
        remaining = {1: 1.0, 2: 2.0, 3: 0.5}
        order = [3, 1, 2]
        policy = lambda state: [c for c in order if c in state.remaining][:1]
        traj_a, actions = run_policy(remaining, policy, service, n_resources=1)
        nontrivial = actions[:-1]  # last epoch is the trivial phase
        traj_b, _ = run_policy(remaining, replay_policy(nontrivial), service, 1)
        assert traj_a == traj_b

    def test_replay_policy_exhaustion_detected(self):
        service = star_service()
        with pytest.raises(SimulationContractError):
            run_policy({1: 1.0, 2: 2.0, 3: 0.5}, replay_policy([]), service, 1)


def make_trajectory():
    """h climbs 0 -> 50 -> 100 -> 200 over clocks 2, 3, 4.5 (total pop 200)."""
    epochs = (
        Epoch(t=1, k=2.0, h=50.0, clock=2.0),
        Epoch(t=2, k=1.0, h=100.0, clock=3.0),
        Epoch(t=3, k=1.5, h=200.0, clock=4.5),
    )
    return RecoveryTrajectory(epochs=epochs, initial_level=0.0, total_population=200.0)


class TestObjectives:
    def test_f1_zero_gamma_crosses_immediately(self):
        assert evaluate_F1(make_trajectory(), gamma=0.0) == 0.0

    def test_f1_midway_crossing(self):
        assert evaluate_F1(make_trajectory(), gamma=0.5) == 3.0

    def test_f1_full_service_takes_whole_horizon(self):
        assert evaluate_F1(make_trajectory(), gamma=1.0) == 4.5

    def test_f1_gamma_range_checked(self):
        for gamma in (-0.1, 1.1):
            with pytest.raises(ConfigurationError):
                evaluate_F1(make_trajectory(), gamma=gamma)

    def test_f2_final_normalization(self):
        # (50*2 + 100*1 + 200*1.5) / 1.5 = 500 / 1.5
        assert evaluate_F2(make_trajectory(), "final") == pytest.approx(1000.0 / 3.0)

    def test_f2_cumulative_normalization(self):
        assert evaluate_F2(make_trajectory(), "cumulative") == pytest.approx(500.0 / 4.5)

    def test_f2_empty_trajectory_rejected(self):
        empty = RecoveryTrajectory(epochs=(), initial_level=10.0, total_population=10.0)
        with pytest.raises(ConfigurationError):
            evaluate_F2(empty, "final")

    def test_f2_unknown_normalization_rejected(self):
        with pytest.raises(ConfigurationError):
            evaluate_F2(make_trajectory(), "percent")


class TestResilienceIndex:
    def test_undisturbed_service_is_one(self):
        traj = RecoveryTrajectory(epochs=(), initial_level=80.0, total_population=80.0)
        assert resilience_index(traj, 10.0) == 1.0

    def test_total_blackout_is_zero(self):
        epochs = (Epoch(t=1, k=5.0, h=0.0, clock=5.0),)
        traj = RecoveryTrajectory(epochs=epochs, initial_level=0.0, total_population=80.0)
        assert resilience_index(traj, 5.0) == 0.0

    def test_two_segment_hand_value(self):
        # level 0 for 2 days, then 100 of 100 for the remaining 2 days
        epochs = (Epoch(t=1, k=2.0, h=100.0, clock=2.0),)
        traj = RecoveryTrajectory(epochs=epochs, initial_level=0.0, total_population=100.0)
        assert resilience_index(traj, 4.0) == pytest.approx(0.5)

    def test_control_time_before_recovery_rejected(self):
        with pytest.raises(ConfigurationError):
            resilience_index(make_trajectory(), 4.0)


class TestExport:
    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        export_trajectory_csv(make_trajectory(), path)
        df = pd.read_csv(path)
        assert list(df.columns) == [
            "epoch", "clock_days", "k_days", "h_people", "served_fraction",
        ]
        assert len(df) == 4  # initial row plus three epochs
        assert df.loc[0, "clock_days"] == 0.0
        assert df.loc[0, "h_people"] == 0.0
        np.testing.assert_allclose(df["clock_days"], [0.0, 2.0, 3.0, 4.5])
        np.testing.assert_allclose(df["served_fraction"], [0.0, 0.25, 0.5, 1.0])
