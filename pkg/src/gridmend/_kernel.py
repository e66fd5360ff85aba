"""Numba kernels for fast recovery playouts.

All kernels operate on flat arrays indexed by dense component index (not id).
Service is tracked incrementally: per-cell and per-retailer counters hold the
number of damaged components on the corresponding supply path; a sink is
energized when its counter reaches zero.

Under a fixed-priority completion policy the assigned set is always the
top-N damaged components, so an admitted component is never preempted and its
completion clock is fixed at admission.  This makes a full playout an
O(M log N)-style event sweep instead of a per-epoch rescan.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

TOL = 1e-9

F1_MINIMIZE = 0
F2_MAXIMIZE = 1

MODE_HOUSEHOLDS = 1
MODE_RETAILERS = 2


@njit(cache=True)
def _complete(
    c,
    cc_indptr,
    cc_idx,
    cr_indptr,
    cr_idx,
    cell_cnt,
    ret_cnt,
    m,
    pop,
    probs,
    mode,
    h,
):
    """Mark component c repaired and return the updated served population."""
    for j in range(cc_indptr[c], cc_indptr[c + 1]):
        cell = cc_idx[j]
        cell_cnt[cell] -= 1
        if cell_cnt[cell] == 0:
            if mode == MODE_HOUSEHOLDS:
                h += pop[cell]
            else:
                h += pop[cell] * m[cell]
    if mode == MODE_RETAILERS:
        n_cells = cell_cnt.shape[0]
        for j in range(cr_indptr[c], cr_indptr[c + 1]):
            r = cr_idx[j]
            ret_cnt[r] -= 1
            if ret_cnt[r] == 0:
                for cell in range(n_cells):
                    m[cell] += probs[cell, r]
                    if cell_cnt[cell] == 0:
                        h += pop[cell] * probs[cell, r]
    return h


@njit(cache=True)
def init_counts(rem, cc_indptr, cc_idx, cr_indptr, cr_idx, pop, probs, mode):
    """Damage counters, retailer mass and served level for a remaining-time vector."""
    n_comp = rem.shape[0]
    n_cells = pop.shape[0]
    n_ret = probs.shape[1]
    cell_cnt = np.zeros(n_cells, dtype=np.int64)
    ret_cnt = np.zeros(n_ret, dtype=np.int64)
    for c in range(n_comp):
        if rem[c] > 0.0:
            for j in range(cc_indptr[c], cc_indptr[c + 1]):
                cell_cnt[cc_idx[j]] += 1
            for j in range(cr_indptr[c], cr_indptr[c + 1]):
                ret_cnt[cr_idx[j]] += 1
    m = np.zeros(n_cells)
    h = 0.0
    if mode == MODE_HOUSEHOLDS:
        for cell in range(n_cells):
            if cell_cnt[cell] == 0:
                h += pop[cell]
    else:
        for cell in range(n_cells):
            acc = 0.0
            for r in range(n_ret):
                if ret_cnt[r] == 0:
                    acc += probs[cell, r]
            m[cell] = acc
            if cell_cnt[cell] == 0:
                h += pop[cell] * m[cell]
    return cell_cnt, ret_cnt, m, h


@njit(cache=True)
def base_playout(
    rem,
    order,
    n_res,
    cc_indptr,
    cc_idx,
    cr_indptr,
    cr_idx,
    cell_cnt,
    ret_cnt,
    m,
    pop,
    probs,
    mode,
    h,
    clock,
    stop_level,
    k_out,
    h_out,
):
    """Complete all repairs under the fixed-priority policy given by `order`.

    Mutates rem and the counters in place, records per-epoch (k, h) into
    k_out/h_out and returns (n_epochs, clock, h).  If stop_level >= 0 the
    sweep returns as soon as h reaches it (used for F1 scoring).
    """
    n_order = order.shape[0]
    slot_comp = np.full(n_res, -1, dtype=np.int64)
    slot_done = np.zeros(n_res)
    ptr = 0
    active = 0
    # initial admission: top-N damaged in priority order
    for s in range(n_res):
        while ptr < n_order and rem[order[ptr]] <= 0.0:
            ptr += 1
        if ptr >= n_order:
            break
        slot_comp[s] = order[ptr]
        slot_done[s] = clock + rem[order[ptr]]
        active += 1
        ptr += 1

    ne = 0
    while active > 0:
        tmin = np.inf
        for s in range(n_res):
            if slot_comp[s] >= 0 and slot_done[s] < tmin:
                tmin = slot_done[s]
        k = tmin - clock
        clock = tmin
        for s in range(n_res):
            if slot_comp[s] >= 0 and slot_done[s] <= clock + TOL:
                c = slot_comp[s]
                rem[c] = 0.0
                h = _complete(
                    c, cc_indptr, cc_idx, cr_indptr, cr_idx,
                    cell_cnt, ret_cnt, m, pop, probs, mode, h,
                )
                slot_comp[s] = -1
                active -= 1
        for s in range(n_res):
            if slot_comp[s] < 0:
                while ptr < n_order and rem[order[ptr]] <= 0.0:
                    ptr += 1
                if ptr >= n_order:
                    break
                slot_comp[s] = order[ptr]
                slot_done[s] = clock + rem[order[ptr]]
                active += 1
                ptr += 1
        k_out[ne] = k
        h_out[ne] = h
        ne += 1
        if stop_level >= 0.0 and h >= stop_level:
            break
    return ne, clock, h


@njit(cache=True)
def _apply_action(
    rem,
    action,
    cc_indptr,
    cc_idx,
    cr_indptr,
    cr_idx,
    cell_cnt,
    ret_cnt,
    m,
    pop,
    probs,
    mode,
    h,
):
    """One explicit epoch under an arbitrary assignment; returns (k, h)."""
    k = np.inf
    for j in range(action.shape[0]):
        if rem[action[j]] < k:
            k = rem[action[j]]
    for j in range(action.shape[0]):
        c = action[j]
        left = rem[c] - k
        if left <= TOL:
            rem[c] = 0.0
            h = _complete(
                c, cc_indptr, cc_idx, cr_indptr, cr_idx,
                cell_cnt, ret_cnt, m, pop, probs, mode, h,
            )
        else:
            rem[c] = left
    return k, h


@njit(cache=True, parallel=True)
def score_candidates(
    cands,
    rem0,
    cell_cnt0,
    ret_cnt0,
    m0,
    h0,
    clock0,
    prefix_hk,
    order,
    n_res,
    cc_indptr,
    cc_idx,
    cr_indptr,
    cr_idx,
    pop,
    probs,
    mode,
    objective,
    threshold,
    f2_cumulative,
):
    """Score each candidate first action by completing with the base policy.

    The returned score is the full-string objective: committed prefix
    (prefix_hk, clock0) + candidate epoch + base completion.  Every candidate
    is scored independently, so the result does not depend on thread count.
    """
    n_cand = cands.shape[0]
    n_comp = rem0.shape[0]
    scores = np.empty(n_cand)
    for i in prange(n_cand):
        rem = rem0.copy()
        cell_cnt = cell_cnt0.copy()
        ret_cnt = ret_cnt0.copy()
        m = m0.copy()
        h = h0
        clock = clock0

        k, h = _apply_action(
            rem, cands[i], cc_indptr, cc_idx, cr_indptr, cr_idx,
            cell_cnt, ret_cnt, m, pop, probs, mode, h,
        )
        clock += k
        sum_hk = prefix_hk + h * k
        k_last = k

        if objective == F1_MINIMIZE and h >= threshold:
            scores[i] = clock
            continue

        k_out = np.empty(n_comp + 1)
        h_out = np.empty(n_comp + 1)
        stop = threshold if objective == F1_MINIMIZE else -1.0
        ne, clock, h = base_playout(
            rem, order, n_res, cc_indptr, cc_idx, cr_indptr, cr_idx,
            cell_cnt, ret_cnt, m, pop, probs, mode, h, clock, stop,
            k_out, h_out,
        )
        if objective == F1_MINIMIZE:
            scores[i] = clock
        else:
            for e in range(ne):
                sum_hk += h_out[e] * k_out[e]
            if ne > 0:
                k_last = k_out[ne - 1]
            if f2_cumulative:
                scores[i] = sum_hk / clock
            else:
                scores[i] = sum_hk / k_last
    return scores
