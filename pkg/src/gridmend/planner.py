"""Repair planning: fixed-priority base heuristics, rollout lookahead and an
exact enumeration oracle for small instances.

The base heuristics assign resources to damaged components in a preordained
priority order (random, or ranked by the population whose supply runs through
each component).  Rollout scores every candidate first action by completing
the remaining horizon with the base heuristic and commits the best one; with
the action string formulation this is a one-step (or deeper) lookahead policy
that can never do worse than the heuristic it wraps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import _kernel
from .errors import ConfigurationError, InstanceTooLargeError
from .network import DemandModel, EpnTree, ServiceModel, MODE_HOUSEHOLDS
from .sim import (
    RecoveryTrajectory,
    SimState,
    evaluate_F1,
    evaluate_F2,
    replay_policy,
    run_policy,
    step,
)

POOL_FULL = "full"
POOL_ONE_STEP = "one_step"
POOL_N_STEP = "n_step"
POOL_RANDOM_CAP = "random_cap"
POOLING_STRATEGIES = (POOL_FULL, POOL_ONE_STEP, POOL_N_STEP, POOL_RANDOM_CAP)

EXACT_ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class Objective:
    """Planning objective: f1 minimizes days to reach gamma * population,
    f2 maximizes time-weighted served population."""

    kind: str  # "f1" | "f2"
    gamma: float = 0.8
    f2_normalization: str = "final"

    def __post_init__(self):
        if self.kind not in ("f1", "f2"):
            raise ConfigurationError(f"unknown objective {self.kind!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1], got {self.gamma}")

    @property
    def maximize(self) -> bool:
        return self.kind == "f2"

    def evaluate(self, trajectory: RecoveryTrajectory) -> float:
        if self.kind == "f1":
            return evaluate_F1(trajectory, self.gamma)
        return evaluate_F2(trajectory, self.f2_normalization)

    def better(self, a: float, b: float) -> bool:
        """True if value a is strictly better than b."""
        return a > b if self.maximize else a < b


@dataclass(frozen=True)
class PriorityOrder:
    """Fixed permutation of all component ids; lower position = repaired first."""

    order: tuple[int, ...]
    tag: str = "custom"

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise ConfigurationError("priority order must be a permutation")

    def rank(self) -> dict[int, int]:
        return {cid: i for i, cid in enumerate(self.order)}


def random_order(ids: Iterable[int], seed: int) -> PriorityOrder:
    rng = np.random.default_rng(seed)
    ids = sorted(ids)
    return PriorityOrder(order=tuple(rng.permutation(ids).tolist()), tag=f"random({seed})")


def importance_order(tree: EpnTree, demand: DemandModel) -> PriorityOrder:
    """Rank components by the total population whose supply path crosses them.

    Descending subtree demand, ties by ascending id; the root always comes
    first since all demand transits it.
    """
    weight = {cid: 0 for cid in tree.components}
    for cell in demand.cells:
        for cid in tree.supply_path(cell.sink):
            weight[cid] += cell.population
    ranked = sorted(tree.components, key=lambda cid: (-weight[cid], cid))
    return PriorityOrder(order=tuple(ranked), tag="importance")


def base_action(order: PriorityOrder, damaged: set[int], n_resources: int) -> frozenset[int]:
    """The min(N, |D|) damaged components earliest in the priority order."""
    if not damaged:
        raise ConfigurationError("no damaged components")
    picked = []
    for cid in order.order:
        if cid in damaged:
            picked.append(cid)
            if len(picked) == n_resources:
                break
    return frozenset(picked)


def base_policy(order: PriorityOrder, n_resources: int):
    return lambda state: base_action(order, state.damaged, n_resources)


def candidate_pool_1step(tree: EpnTree, damaged: set[int], n_resources: int) -> set[int]:
    """Grow the candidate pool level by level until it holds >= N components."""
    by_level: dict[int, list[int]] = {}
    for cid in damaged:
        by_level.setdefault(tree.level[cid], []).append(cid)
    pool: set[int] = set()
    for level in sorted(by_level):
        pool.update(by_level[level])
        if len(pool) >= n_resources:
            break
    return pool


def candidate_pool_Nstep(tree: EpnTree, damaged: set[int], n_resources: int) -> set[int]:
    """Grow the pool one sibling group at a time, preferring sparse groups.

    Starts with every damaged component at the shallowest damaged level; while
    the pool is short of N, sibling groups (children of one parent) at the
    next level are added in order of fewest damaged members, ties by ascending
    parent id, before descending further.
    """
    by_level: dict[int, list[int]] = {}
    for cid in damaged:
        by_level.setdefault(tree.level[cid], []).append(cid)
    if not by_level:
        return set()
    levels = sorted(by_level)
    pool = set(by_level[levels[0]])
    level = levels[0] + 1
    max_level = max(levels)
    while len(pool) < n_resources and level <= max_level:
        groups: dict[int, list[int]] = {}
        for cid in by_level.get(level, []):
            parent = tree.components[cid].parent
            groups.setdefault(parent, []).append(cid)
        for parent in sorted(groups, key=lambda p: (len(groups[p]), p)):
            pool.update(groups[parent])
            if len(pool) >= n_resources:
                break
        level += 1
    return pool


def enumerate_actions(
    pool: set[int],
    n_resources: int,
    cap: int,
    seed: int,
    must_include: frozenset[int] | None = None,
) -> list[tuple[int, ...]]:
    """All (or cap random distinct) N-subsets of the pool, as sorted id tuples."""
    if cap < 1:
        raise ConfigurationError(f"cap must be >= 1, got {cap}")
    if not pool:
        raise ConfigurationError("empty candidate pool")
    ids = sorted(pool)
    width = min(n_resources, len(ids))
    if math.comb(len(ids), width) <= cap:
        actions = [tuple(c) for c in combinations(ids, width)]
        if must_include is not None:
            extra = tuple(sorted(must_include))
            if extra not in set(actions):
                actions.append(extra)
        return actions

    rng = np.random.default_rng(seed)
    arr = np.array(ids)
    chosen: set[tuple[int, ...]] = set()
    actions = []
    if must_include is not None:
        extra = tuple(sorted(must_include))
        chosen.add(extra)
        actions.append(extra)
    while len(actions) < cap + (1 if must_include is not None else 0):
        need = cap + len(chosen) - len(actions)
        keys = rng.random((need, len(ids)))
        picks = np.argpartition(keys, width - 1, axis=1)[:, :width]
        rows = np.sort(arr[picks], axis=1)
        for row in rows:
            t = tuple(int(v) for v in row)
            if t not in chosen:
                chosen.add(t)
                actions.append(t)
                if len(actions) == cap + (1 if must_include is not None else 0):
                    break
    return actions


@dataclass(frozen=True)
class PlanResult:
    """A computed plan: non-trivial action string, trajectory and value."""

    actions: tuple[frozenset[int], ...]
    trajectory: RecoveryTrajectory
    objective_value: float
    objective: Objective
    candidate_counts: tuple[int, ...] = ()
    planner: str = ""


class PlayoutContext:
    """Flat-array view of a (tree, demand, mode) triple for the numba kernels."""

    def __init__(self, tree: EpnTree, demand: DemandModel, mode: str = MODE_HOUSEHOLDS):
        self.tree = tree
        self.demand = demand
        self.mode = mode
        self.mode_code = (
            _kernel.MODE_HOUSEHOLDS if mode == MODE_HOUSEHOLDS else _kernel.MODE_RETAILERS
        )
        self.ids = tree.ids
        self.index = {cid: i for i, cid in enumerate(self.ids)}
        n_comp = len(self.ids)

        comp_cells: list[list[int]] = [[] for _ in range(n_comp)]
        for ci, cell in enumerate(demand.cells):
            for cid in tree.supply_path(cell.sink):
                comp_cells[self.index[cid]].append(ci)
        comp_rets: list[list[int]] = [[] for _ in range(n_comp)]
        for ri, ret in enumerate(demand.retailers):
            for cid in tree.supply_path(ret.sink):
                comp_rets[self.index[cid]].append(ri)

        self.cc_indptr, self.cc_idx = _to_csr(comp_cells)
        self.cr_indptr, self.cr_idx = _to_csr(comp_rets)
        self.pop = np.array([c.population for c in demand.cells], dtype=float)
        self.probs = np.ascontiguousarray(demand.probs)

    def rem_vector(self, remaining: dict[int, float]) -> np.ndarray:
        rem = np.zeros(len(self.ids))
        for cid, days in remaining.items():
            rem[self.index[cid]] = days
        return rem

    def order_array(self, order: PriorityOrder) -> np.ndarray:
        return np.array([self.index[cid] for cid in order.order], dtype=np.int64)

    def counts(self, rem: np.ndarray):
        return _kernel.init_counts(
            rem, self.cc_indptr, self.cc_idx, self.cr_indptr, self.cr_idx,
            self.pop, self.probs, self.mode_code,
        )

    def action_matrix(self, actions: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([[self.index[c] for c in a] for a in actions], dtype=np.int64)

    def score(
        self,
        actions: Sequence[tuple[int, ...]],
        rem: np.ndarray,
        counts,
        clock: float,
        prefix_hk: float,
        order_arr: np.ndarray,
        n_resources: int,
        objective: Objective,
        threshold: float,
    ) -> np.ndarray:
        cell_cnt, ret_cnt, m, h = counts
        return _kernel.score_candidates(
            self.action_matrix(actions),
            rem, cell_cnt, ret_cnt, m, h, clock, prefix_hk,
            order_arr, n_resources,
            self.cc_indptr, self.cc_idx, self.cr_indptr, self.cr_idx,
            self.pop, self.probs, self.mode_code,
            _kernel.F1_MINIMIZE if objective.kind == "f1" else _kernel.F2_MAXIMIZE,
            threshold,
            objective.kind == "f2" and objective.f2_normalization == "cumulative",
        )

    def playout_value(
        self,
        rem: np.ndarray,
        order_arr: np.ndarray,
        n_resources: int,
        objective: Objective,
    ) -> float:
        """Objective of the pure base-policy playout from the given state."""
        counts = self.counts(rem)
        cell_cnt, ret_cnt, m, h = counts
        threshold = objective.gamma * self.demand.total_population
        if objective.kind == "f1" and h >= threshold:
            return 0.0
        n_comp = rem.shape[0]
        k_out = np.empty(n_comp + 1)
        h_out = np.empty(n_comp + 1)
        stop = threshold if objective.kind == "f1" else -1.0
        ne, clock, h = _kernel.base_playout(
            rem.copy(), order_arr, n_resources,
            self.cc_indptr, self.cc_idx, self.cr_indptr, self.cr_idx,
            cell_cnt, ret_cnt, m, self.pop, self.probs, self.mode_code,
            h, 0.0, stop, k_out, h_out,
        )
        if objective.kind == "f1":
            return clock
        sum_hk = float(np.dot(h_out[:ne], k_out[:ne]))
        if objective.f2_normalization == "cumulative":
            return sum_hk / clock
        return sum_hk / k_out[ne - 1]


def _to_csr(lists: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, lst in enumerate(lists):
        indptr[i + 1] = indptr[i] + len(lst)
    idx = np.array([v for lst in lists for v in lst], dtype=np.int64)
    return indptr, idx


def _make_pool(
    strategy: str,
    tree: EpnTree,
    damaged: set[int],
    n_resources: int,
) -> set[int]:
    if strategy in (POOL_FULL, POOL_RANDOM_CAP):
        return set(damaged)
    if strategy == POOL_ONE_STEP:
        return candidate_pool_1step(tree, damaged, n_resources)
    if strategy == POOL_N_STEP:
        return candidate_pool_Nstep(tree, damaged, n_resources)
    raise ConfigurationError(f"unknown pooling strategy {strategy!r}")


def _pick_best(
    actions: Sequence[tuple[int, ...]],
    scores: np.ndarray,
    objective: Objective,
    preferred: tuple[int, ...] | None = None,
) -> tuple[int, ...]:
    """Order-independent argbest.

    Exact score ties go to the preferred action (the base heuristic's, so a
    fully tied epoch degenerates to the base policy) when it is among the
    winners, otherwise to the smallest sorted id tuple.
    """
    best = scores.max() if objective.maximize else scores.min()
    tied = [a for a, s in zip(actions, scores) if s == best]
    if preferred is not None and preferred in tied:
        return preferred
    return min(tied)


def base_plan(
    remaining: dict[int, float],
    order: PriorityOrder,
    objective: Objective,
    service: ServiceModel,
    n_resources: int,
) -> PlanResult:
    """Run the base heuristic alone and evaluate it."""
    trajectory, _ = run_policy(
        remaining, base_policy(order, n_resources), service, n_resources
    )
    # reconstruct the non-trivial action string (epochs with |D_t| > N)
    nontrivial = []
    state = SimState(remaining=dict(remaining))
    while state.n_damaged > n_resources:
        action = base_action(order, state.damaged, n_resources)
        nontrivial.append(action)
        state, _, _ = step(state, action)
    value = _value_or_full_service(trajectory, objective)
    return PlanResult(
        actions=tuple(nontrivial),
        trajectory=trajectory,
        objective_value=value,
        objective=objective,
        planner=f"base[{order.tag}]",
    )


def _value_or_full_service(trajectory: RecoveryTrajectory, objective: Objective) -> float:
    if trajectory.epochs:
        return objective.evaluate(trajectory)
    # nothing to repair: F1 crosses at day 0, F2 holds the full-service level
    return 0.0 if objective.kind == "f1" else trajectory.initial_level


def rollout_plan(
    remaining: dict[int, float],
    order: PriorityOrder,
    objective: Objective,
    tree: EpnTree,
    demand: DemandModel,
    mode: str,
    n_resources: int,
    pooling: str = POOL_FULL,
    cap: int = 100_000,
    lookahead: int | str = 1,
    seed: int = 0,
    context: PlayoutContext | None = None,
    service: ServiceModel | None = None,
    smart_order: PriorityOrder | None = None,
) -> PlanResult:
    """Rollout over the string-action formulation with the given base heuristic.

    At every non-trivial epoch each enumerated candidate action is scored by
    completing the rest of the horizon with the base heuristic and evaluating
    the complete string; the best candidate's first action is committed.  The
    base action is always among the candidates, which guarantees the result
    is never worse than the base heuristic alone.
    """
    if pooling not in POOLING_STRATEGIES:
        raise ConfigurationError(f"unknown pooling strategy {pooling!r}")
    if lookahead == "full":
        exact = exact_plan(remaining, objective, tree, demand, mode, n_resources,
                           service=service)
        return PlanResult(
            actions=exact.actions,
            trajectory=exact.trajectory,
            objective_value=exact.objective_value,
            objective=objective,
            candidate_counts=exact.candidate_counts,
            planner=f"rollout[{order.tag},full-horizon]",
        )
    if lookahead not in (1, 2):
        raise ConfigurationError("lookahead must be 1, 2 or 'full'")

    ctx = context or PlayoutContext(tree, demand, mode)
    svc = service or ServiceModel(tree, demand, mode)
    order_arr = ctx.order_array(order)
    threshold = objective.gamma * svc.total_population

    rem = ctx.rem_vector(remaining)
    clock = 0.0
    prefix_hk = 0.0
    committed: list[frozenset[int]] = []
    beta_log: list[int] = []
    epoch_seed = np.random.default_rng(seed).integers(0, 2**63 - 1, dtype=np.int64)

    def damaged_set() -> set[int]:
        return {ctx.ids[i] for i in np.flatnonzero(rem > 0.0)}

    def commit(action_ids: tuple[int, ...]) -> None:
        nonlocal clock, prefix_hk
        idxs = [ctx.index[c] for c in action_ids]
        k = float(rem[idxs].min())
        rem[idxs] -= k
        rem[idxs] = np.where(rem[idxs] <= _kernel.TOL, 0.0, rem[idxs])
        clock += k
        _, _, _, h = ctx.counts(rem)
        prefix_hk += h * k
        committed.append(frozenset(action_ids))

    t = 0
    while True:
        damaged = damaged_set()
        if len(damaged) <= n_resources:
            break
        counts = ctx.counts(rem)
        h_now = counts[3]
        if objective.kind == "f1" and h_now >= threshold:
            # objective settled: finish with the base heuristic, no scoring
            commit(tuple(sorted(base_action(order, damaged, n_resources))))
            continue
        base_act = base_action(order, damaged, n_resources)
        pool = _make_pool(pooling, tree, damaged, n_resources)
        add_smart = pooling == POOL_RANDOM_CAP and smart_order is not None
        effective_cap = cap - 1 if (add_smart and cap > 1) else cap
        cands = enumerate_actions(
            pool, n_resources, effective_cap, int(epoch_seed) + t, must_include=base_act
        )
        if add_smart:
            smart_act = tuple(sorted(base_action(smart_order, damaged, n_resources)))
            if smart_act not in set(cands):
                cands.append(smart_act)
        beta_log.append(len(cands))
        if lookahead == 1:
            scores = ctx.score(
                cands, rem, counts, clock, prefix_hk, order_arr,
                n_resources, objective, threshold,
            )
            chosen = _pick_best(cands, scores, objective, preferred=tuple(sorted(base_act)))
        else:
            chosen = _two_step_choice(
                ctx, tree, cands, rem, clock, prefix_hk, order, order_arr,
                objective, threshold, pooling, cap, n_resources,
                int(epoch_seed) + t, preferred=tuple(sorted(base_act)),
            )
        commit(chosen)
        t += 1

    trajectory, _ = run_policy(remaining, replay_policy(committed), svc, n_resources)
    value = _value_or_full_service(trajectory, objective)
    return PlanResult(
        actions=tuple(committed),
        trajectory=trajectory,
        objective_value=value,
        objective=objective,
        candidate_counts=tuple(beta_log),
        planner=f"rollout[{order.tag},{pooling},lookahead={lookahead}]",
    )


def _two_step_choice(
    ctx: PlayoutContext,
    tree: EpnTree,
    cands: Sequence[tuple[int, ...]],
    rem: np.ndarray,
    clock: float,
    prefix_hk: float,
    order: PriorityOrder,
    order_arr: np.ndarray,
    objective: Objective,
    threshold: float,
    pooling: str,
    cap: int,
    n_resources: int,
    seed: int,
    preferred: tuple[int, ...] | None = None,
) -> tuple[int, ...]:
    """Exhaustive two-epoch lookahead over consecutive candidate sets."""
    scores = []
    for a1 in cands:
        rem1 = rem.copy()
        idxs = [ctx.index[c] for c in a1]
        k1 = float(rem1[idxs].min())
        rem1[idxs] -= k1
        rem1[idxs] = np.where(rem1[idxs] <= _kernel.TOL, 0.0, rem1[idxs])
        clock1 = clock + k1
        counts1 = ctx.counts(rem1)
        h1 = counts1[3]
        hk1 = prefix_hk + h1 * k1
        damaged1 = {ctx.ids[i] for i in np.flatnonzero(rem1 > 0.0)}

        if (objective.kind == "f1" and h1 >= threshold) or len(damaged1) <= n_resources:
            # second scored epoch unavailable: value of a1 is its completion
            score = ctx.score(
                [a1], rem, ctx.counts(rem), clock, prefix_hk, order_arr,
                n_resources, objective, threshold,
            )[0]
        else:
            base_act1 = base_action(order, damaged1, n_resources)
            pool1 = _make_pool(pooling, tree, damaged1, n_resources)
            cands1 = enumerate_actions(
                pool1, n_resources, cap, seed + 1, must_include=base_act1
            )
            scores1 = ctx.score(
                cands1, rem1, counts1, clock1, hk1, order_arr,
                n_resources, objective, threshold,
            )
            score = scores1.max() if objective.maximize else scores1.min()

        scores.append(score)
    return _pick_best(cands, np.array(scores), objective, preferred=preferred)


def _estimate_enumeration_size(
    remaining: dict[int, float], n_resources: int
) -> float:
    """Product of C(|D_t|, N) along an arbitrary completion path."""
    state = SimState(remaining=dict(remaining))
    product = 1.0
    while state.n_damaged > n_resources:
        product *= math.comb(state.n_damaged, n_resources)
        if product > 1e30:
            return product
        action = sorted(state.remaining)[:n_resources]
        state, _, _ = step(state, action)
    return product


def exact_plan(
    remaining: dict[int, float],
    objective: Objective,
    tree: EpnTree,
    demand: DemandModel,
    mode: str,
    n_resources: int,
    guard: float = EXACT_ENUMERATION_GUARD,
    service: ServiceModel | None = None,
) -> PlanResult:
    """True optimum by depth-first enumeration of all action strings.

    Refuses instances whose estimated enumeration size exceeds the guard.
    Uses the same tie-breaking as rollout (lexicographically smallest string).
    """
    svc = service or ServiceModel(tree, demand, mode)
    estimate = _estimate_enumeration_size(remaining, n_resources)
    if estimate > guard:
        raise InstanceTooLargeError(
            f"estimated enumeration size {estimate:.3g} exceeds guard {guard:.3g}"
        )
    threshold = objective.gamma * svc.total_population

    best: dict = {"value": None, "actions": None}

    def finish_and_compare(state: SimState, epochs: list, actions: list) -> None:
        # trivial completion, then evaluate the full string
        while state.remaining:
            state, k, _ = step(state, set(state.remaining))
            h = svc.served_given_damaged(state.damaged)
            epochs.append((k, h))
        value = _objective_from_epochs(epochs, objective, threshold, initial_h)
        if (
            best["value"] is None
            or objective.better(value, best["value"])
            or (value == best["value"] and tuple(actions) < best["actions"])
        ):
            best["value"] = value
            best["actions"] = tuple(actions)

    initial_h = svc.served_given_damaged(set(remaining))

    def recurse(state: SimState, epochs: list, actions: list) -> None:
        h_now = epochs[-1][1] if epochs else initial_h
        if objective.kind == "f1":
            if h_now >= threshold:
                finish_and_compare(state.copy(), list(epochs), list(actions))
                return
            if best["value"] is not None and state.clock >= best["value"]:
                return  # crossing cannot happen before the incumbent
        if state.n_damaged <= n_resources:
            finish_and_compare(state.copy(), list(epochs), list(actions))
            return
        for action in combinations(sorted(state.remaining), n_resources):
            nxt, k, _ = step(state, action)
            h = svc.served_given_damaged(nxt.damaged)
            epochs.append((k, h))
            actions.append(action)
            recurse(nxt, epochs, actions)
            epochs.pop()
            actions.pop()

    if remaining:
        recurse(SimState(remaining=dict(remaining)), [], [])
        committed = [frozenset(a) for a in best["actions"]]
    else:
        committed = []
    # For F1 the search stops at the crossing epoch; complete any remaining
    # non-trivial epochs with the ascending-id order (the value is settled).
    fallback = PriorityOrder(order=tuple(sorted(tree.components)), tag="ascending")
    policy = _replay_then_base(committed, fallback, n_resources)
    trajectory, _ = run_policy(remaining, policy, svc, n_resources)
    value = _value_or_full_service(trajectory, objective)
    return PlanResult(
        actions=tuple(committed),
        trajectory=trajectory,
        objective_value=value,
        objective=objective,
        planner="exact",
    )


def _replay_then_base(
    actions: Sequence[frozenset[int]], order: PriorityOrder, n_resources: int
):
    it = iter(actions)

    def policy(state: SimState):
        try:
            return next(it)
        except StopIteration:
            return base_action(order, state.damaged, n_resources)

    return policy


def _objective_from_epochs(
    epochs: list[tuple[float, float]],
    objective: Objective,
    threshold: float,
    initial_h: float,
) -> float:
    if objective.kind == "f1":
        if initial_h >= threshold:
            return 0.0
        clock = 0.0
        for k, h in epochs:
            clock += k
            if h >= threshold:
                return clock
        raise AssertionError("full repair did not reach the threshold")
    total = sum(h * k for k, h in epochs)
    if objective.f2_normalization == "cumulative":
        return total / sum(k for k, _ in epochs)
    return total / epochs[-1][0]
