"""Discrete-event recovery simulation and trajectory objectives.

Decision epochs advance to the earliest completion among the assigned
components.  Repair progress persists when a component is preempted, so
non-preemptive schedules are a special case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import ConfigurationError, SimulationContractError
from .network import ServiceModel

COMPLETION_TOL = 1e-9  # days


@dataclass
class SimState:
    """Mutable simulation state: clock, remaining repair times, repaired set."""

    clock: float = 0.0
    remaining: dict[int, float] = field(default_factory=dict)  # damaged only, > 0
    repaired: set[int] = field(default_factory=set)

    @property
    def damaged(self) -> set[int]:
        return set(self.remaining)

    @property
    def n_damaged(self) -> int:
        return len(self.remaining)

    def copy(self) -> "SimState":
        return SimState(self.clock, dict(self.remaining), set(self.repaired))


def step(state: SimState, action: Iterable[int]) -> tuple[SimState, float, frozenset[int]]:
    """Apply one repair action and advance to its first completion.

    Returns the new state, the epoch interval k_t and the set R_t of
    components completed this epoch.  Components assigned but not completed
    keep their accumulated progress.
    """
    assigned = sorted(set(action))
    if not assigned:
        raise SimulationContractError("empty repair action")
    for c in assigned:
        if c not in state.remaining:
            raise SimulationContractError(f"action targets non-damaged component {c}")

    k = min(state.remaining[c] for c in assigned)
    new = state.copy()
    completed = set()
    for c in assigned:
        left = new.remaining[c] - k
        if left <= COMPLETION_TOL:
            del new.remaining[c]
            new.repaired.add(c)
            completed.add(c)
        else:
            new.remaining[c] = left
    new.clock += k
    return new, k, frozenset(completed)


@dataclass(frozen=True)
class Epoch:
    t: int
    k: float
    h: float
    clock: float


@dataclass(frozen=True)
class RecoveryTrajectory:
    """Ordered epoch records plus the pre-recovery service level."""

    epochs: tuple[Epoch, ...]
    initial_level: float
    total_population: float
    complete: bool = True

    def levels(self) -> list[tuple[float, float]]:
        """(clock, level) samples including the initial point."""
        return [(0.0, self.initial_level)] + [(e.clock, e.h) for e in self.epochs]

    @property
    def final_clock(self) -> float:
        return self.epochs[-1].clock if self.epochs else 0.0

    @property
    def final_level(self) -> float:
        return self.epochs[-1].h if self.epochs else self.initial_level


def run_policy(
    initial_remaining: dict[int, float],
    policy: Callable[[SimState], Iterable[int]],
    service: ServiceModel,
    n_resources: int,
) -> tuple[RecoveryTrajectory, list[frozenset[int]]]:
    """Run a policy to full repair, recording (k_t, h_t) at every epoch.

    While more than n_resources components are damaged the policy chooses the
    assignment (it must return min(N, |D|) distinct damaged ids).  Once
    |D| <= N the problem is trivial: all remaining damaged components are
    assigned at once each epoch, without consulting the policy.
    """
    if n_resources < 1:
        raise ConfigurationError("n_resources must be >= 1")
    state = SimState(remaining=dict(initial_remaining))
    initial_level = service.served_given_damaged(state.damaged)
    epochs: list[Epoch] = []
    actions: list[frozenset[int]] = []
    t = 0
    while state.remaining:
        if state.n_damaged > n_resources:
            action = frozenset(policy(state))
            if len(action) != n_resources or not action <= state.damaged:
                raise SimulationContractError(
                    f"policy returned invalid action {sorted(action)} "
                    f"(need {n_resources} distinct damaged ids)"
                )
        else:
            action = frozenset(state.remaining)
        state, k, _ = step(state, action)
        t += 1
        h = service.served_given_damaged(state.damaged)
        epochs.append(Epoch(t=t, k=k, h=h, clock=state.clock))
        actions.append(action)
    return (
        RecoveryTrajectory(
            epochs=tuple(epochs),
            initial_level=initial_level,
            total_population=service.total_population,
        ),
        actions,
    )


def replay_policy(actions: Sequence[Iterable[int]]) -> Callable[[SimState], Iterable[int]]:
    """Policy that replays a recorded non-trivial action string."""
    it = iter(actions)

    def policy(state: SimState) -> Iterable[int]:
        try:
            return next(it)
        except StopIteration:
            raise SimulationContractError("action string exhausted before trivial phase")

    return policy


def evaluate_F1(trajectory: RecoveryTrajectory, gamma: float) -> float:
    """Days until service reaches gamma * total population (0 if already there)."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"gamma must be in [0, 1], got {gamma}")
    threshold = gamma * trajectory.total_population
    if trajectory.initial_level >= threshold:
        return 0.0
    for e in trajectory.epochs:
        if e.h >= threshold:
            return e.clock
    raise AssertionError("full repair did not reach the service threshold")


def evaluate_F2(trajectory: RecoveryTrajectory, normalization: str = "final") -> float:
    """Time-weighted served population: sum(h_t * k_t) / k_norm.

    normalization "final" divides by the last epoch interval (the literal
    objective); "cumulative" divides by the total elapsed time instead.
    """
    if not trajectory.epochs:
        raise ConfigurationError("F2 is undefined for an empty trajectory")
    total = sum(e.h * e.k for e in trajectory.epochs)
    if normalization == "final":
        return total / trajectory.epochs[-1].k
    if normalization == "cumulative":
        return total / sum(e.k for e in trajectory.epochs)
    raise ConfigurationError(f"unknown F2 normalization {normalization!r}")


def resilience_index(trajectory: RecoveryTrajectory, t_control: float) -> float:
    """Normalized integral of the service fraction over [0, t_control]."""
    if t_control < trajectory.final_clock:
        raise ConfigurationError(
            f"control time {t_control} shorter than recovery ({trajectory.final_clock})"
        )
    p = trajectory.total_population
    if p <= 0:
        raise ConfigurationError("total population must be positive")
    integral = 0.0
    level = trajectory.initial_level
    prev_clock = 0.0
    for e in trajectory.epochs:
        integral += level * (e.clock - prev_clock)
        level = e.h
        prev_clock = e.clock
    integral += level * (t_control - prev_clock)
    return integral / (p * t_control)


def export_trajectory_csv(trajectory: RecoveryTrajectory, path) -> None:
    """Write (epoch, clock_days, k_days, h_people, served_fraction) rows."""
    p = trajectory.total_population
    with open(path, "w", newline="") as fh:
        fh.write("epoch,clock_days,k_days,h_people,served_fraction\n")
        fh.write(f"0,0,0,{trajectory.initial_level:.10g},{trajectory.initial_level / p:.10g}\n")
        for e in trajectory.epochs:
            fh.write(f"{e.t},{e.clock:.10g},{e.k:.10g},{e.h:.10g},{e.h / p:.10g}\n")
