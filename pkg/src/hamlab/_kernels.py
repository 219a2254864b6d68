"""Numba kernels for the hot loops.

Each kernel has a pure-python twin in the public modules; the validation
suite checks them against each other on randomized instances.  Positions stay
sorted throughout the dynamics because an epoch at x replaces the nearest
particle to its right in place (ranks never change), so a binary search plus
one assignment is all an event costs.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def _bisect_right(arr, n, x):
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def evolve_kernel(pos0, ex, et, left_edge):
    """One-class dynamics with full event log.

    Returns (pos, n, log_rank, log_from, frontier, n_spawn).  log_from[i] is
    +inf for a spawn.  Epoch i moved (or spawned) the particle at rank
    log_rank[i]; its new position is ex[i] at time et[i].
    """
    n0 = pos0.size
    m = ex.size
    cap = n0 + m
    pos = np.empty(cap, np.float64)
    pos[:n0] = pos0
    n = n0
    log_rank = np.empty(m, np.int64)
    log_from = np.empty(m, np.float64)
    frontier = left_edge
    n_spawn = 0
    t_prev = -1.0
    for i in range(m):
        if et[i] <= t_prev:
            raise ValueError("epoch times must be strictly increasing")
        t_prev = et[i]
        x = ex[i]
        k = _bisect_right(pos, n, x)
        if k == n:
            pos[n] = x
            log_rank[i] = n
            log_from[i] = INF
            n += 1
            n_spawn += 1
            if x < frontier:
                # contamination would reach the spawn itself
                frontier = INF
        else:
            log_rank[i] = k
            log_from[i] = pos[k]
            if x < frontier and pos[k] >= frontier:
                frontier = np.nextafter(pos[k], INF)
            pos[k] = x
    return pos[:n].copy(), n, log_rank, log_from, frontier, n_spawn


@njit(cache=True)
def evolve_tagged_kernel(pos0, ex, et, rank, sample_times, left_edge):
    """One-class dynamics tracking a single rank, minimal allocation.

    Returns (samples at sample_times, min position reached, frontier,
    violation_time).  violation_time is the first event time at which the
    tracked position was <= the frontier (nan if none).
    """
    n0 = pos0.size
    m = ex.size
    pos = np.empty(n0 + m, np.float64)
    pos[:n0] = pos0
    n = n0
    frontier = left_edge
    cur = pos0[rank]
    min_pos = cur
    violation = np.nan
    out = np.empty(sample_times.size, np.float64)
    si = 0
    for i in range(m):
        t = et[i]
        while si < sample_times.size and sample_times[si] < t:
            out[si] = cur
            si += 1
        x = ex[i]
        k = _bisect_right(pos, n, x)
        if k == n:
            pos[n] = x
            n += 1
            if x < frontier:
                frontier = INF
        else:
            if x < frontier and pos[k] >= frontier:
                frontier = np.nextafter(pos[k], INF)
            pos[k] = x
            if k == rank:
                cur = x
                if x < min_pos:
                    min_pos = x
        if cur <= frontier and np.isnan(violation):
            violation = t
    while si < sample_times.size:
        out[si] = cur
        si += 1
    return out, min_pos, frontier, violation


@njit(cache=True)
def coupled_z_kernel(pos0, ex, et, sample_times, left_edge):
    """Basic coupling of nu and nu + delta_0; tracks the discrepancy.

    The discrepancy starts at 0 and jumps to the old position of the base
    particle that an epoch pulls across it.  If an epoch left of Z finds no
    base particle to its right inside the window, the discrepancy would merge
    with a particle entering from beyond the right edge: the time is reported
    as merge_time and the path is uncertified from there on.

    Returns (samples, jump_t, jump_p, n_jumps, frontier, merge_time).
    """
    n0 = pos0.size
    m = ex.size
    pos = np.empty(n0 + m, np.float64)
    pos[:n0] = pos0
    n = n0
    z = 0.0
    frontier = left_edge
    merge_time = np.nan
    jump_t = np.empty(m, np.float64)
    jump_p = np.empty(m, np.float64)
    nj = 0
    out = np.empty(sample_times.size, np.float64)
    si = 0
    for i in range(m):
        t = et[i]
        while si < sample_times.size and sample_times[si] < t:
            out[si] = z
            si += 1
        x = ex[i]
        k = _bisect_right(pos, n, x)
        if k == n:
            if x < z and np.isnan(merge_time):
                merge_time = t  # discrepancy would jump beyond the window
            pos[n] = x
            n += 1
            if x < frontier:
                frontier = INF
        else:
            p = pos[k]
            if x < z and p > z:
                z = p
                jump_t[nj] = t
                jump_p[nj] = p
                nj += 1
            if x < frontier and p >= frontier:
                frontier = np.nextafter(p, INF)
            pos[k] = x
    while si < sample_times.size:
        out[si] = z
        si += 1
    return out, jump_t[:nj].copy(), jump_p[:nj].copy(), nj, frontier, merge_time


@njit(cache=True)
def priority_kernel(pos0, cls0, ex, et, tracked, sample_times, left_edge):
    """Two-class dynamics with the exclusion/priority rule.

    cls0: 0 = first class, 1 = second class.  First-class particles obey the
    one-class dynamics among themselves; a second-class particle jumps right
    to the vacated position when a first-class particle is pulled across it,
    and chains of adjacent second-class particles shift one slot each so that
    their order is preserved.

    tracked: entity ranks (order among second-class particles, immutable) to
    record trajectories for.  Returns body arrays, per-entity final positions,
    trajectories for tracked ranks sampled at sample_times, jump logs for
    tracked ranks, exit flag per tracked rank, frontier, and the first time a
    tracked entity exited through the right edge (nan if none).
    """
    n0 = pos0.size
    m = ex.size
    cap = n0 + m
    pos = np.empty(cap, np.float64)
    cls = np.empty(cap, np.int8)
    pos[:n0] = pos0
    cls[:n0] = cls0
    n = n0

    n_second = 0
    for i in range(n0):
        if cls0[i] == 1:
            n_second += 1
    # entity positions by immutable rank
    zpos = np.empty(n_second, np.float64)
    j = 0
    for i in range(n0):
        if cls0[i] == 1:
            zpos[j] = pos0[i]
            j += 1
    alive = np.ones(n_second, np.uint8)

    ntr = tracked.size
    ns = sample_times.size
    traj = np.empty((ntr, ns), np.float64)
    tr_jt = np.empty((ntr, m), np.float64)
    tr_jp = np.empty((ntr, m), np.float64)
    tr_nj = np.zeros(ntr, np.int64)
    exited = np.zeros(ntr, np.uint8)
    exit_time = np.nan
    frontier = left_edge
    si = 0

    for i in range(m):
        t = et[i]
        while si < ns and sample_times[si] < t:
            for a in range(ntr):
                traj[a, si] = zpos[tracked[a]] if alive[tracked[a]] else INF
            si += 1
        x = ex[i]
        k = _bisect_right(pos, n, x)
        if k == n:
            # nothing to the right: a first-class particle enters at x
            pos[n] = x
            cls[n] = 0
            n += 1
            if x < frontier:
                frontier = INF
            continue
        if x < frontier and pos[k] >= frontier:
            frontier = np.nextafter(pos[k], INF)
        if cls[k] == 0:
            pos[k] = x
            continue
        # nearest body is second class: zipper across the run of second-class
        # bodies in (x, next first-class body)
        kf = k + 1
        while kf < n and cls[kf] == 1:
            kf += 1
        chain = kf - k  # number of second-class bodies shifting
        # entity ranks of the chain: r .. r+chain-1.  Deaths only ever hit the
        # top alive rank, so zpos stays sorted (inf tail) and r is a bisect.
        r = _bisect_right(zpos, n_second, x)
        # body updates
        moved_first_from = pos[kf] if kf < n else INF
        pos[k] = x
        cls[k] = 0
        if kf < n:
            cls[kf] = 1
        # entity updates: rank r..r+chain-1 each advance one slot
        for c in range(chain):
            q = r + c
            newp = zpos[q + 1] if c < chain - 1 else moved_first_from
            zpos[q] = newp
            for a in range(ntr):
                if tracked[a] == q:
                    tr_jt[a, tr_nj[a]] = t
                    tr_jp[a, tr_nj[a]] = newp
                    tr_nj[a] += 1
        if kf == n:
            # topmost entity left the window; its true landing site is unknown
            q = r + chain - 1
            alive[q] = 0
            zpos[q] = INF
            for a in range(ntr):
                if tracked[a] == q:
                    exited[a] = 1
            if np.isnan(exit_time):
                exit_time = t

    while si < ns:
        for a in range(ntr):
            traj[a, si] = zpos[tracked[a]] if alive[tracked[a]] else INF
        si += 1
    return pos[:n].copy(), cls[:n].copy(), n, zpos, alive, traj, tr_jt, tr_jp, tr_nj, exited, frontier, exit_time


@njit(cache=True)
def lis_candidates_kernel(cand, ex_desc, et_desc):
    """Chain lengths L((z,0),(x,t)) for every candidate z, one sweep.

    cand ascending; epochs sorted by x descending, already filtered to the
    query rectangle.  Walking candidates from the right, epochs with x > z
    are patience-inserted keyed on time; the pile count after the inserts is
    the longest strictly-increasing chain among epochs to the right of z.
    """
    nc = cand.size
    m = ex_desc.size
    out = np.empty(nc, np.int64)
    tops = np.empty(m, np.float64)
    npiles = 0
    ptr = 0
    for ci in range(nc - 1, -1, -1):
        z = cand[ci]
        while ptr < m and ex_desc[ptr] > z:
            u = -et_desc[ptr]
            lo, hi = 0, npiles
            while lo < hi:
                mid = (lo + hi) // 2
                if tops[mid] < u:
                    lo = mid + 1
                else:
                    hi = mid
            tops[lo] = u
            if lo == npiles:
                npiles += 1
            ptr += 1
        out[ci] = npiles
    return out


@njit(cache=True)
def lis_rect_kernel(et_by_x):
    """Longest strictly-increasing chain; input is t sorted by x ascending."""
    m = et_by_x.size
    tops = np.empty(m, np.float64)
    npiles = 0
    for i in range(m):
        u = et_by_x[i]
        lo, hi = 0, npiles
        while lo < hi:
            mid = (lo + hi) // 2
            if tops[mid] < u:
                lo = mid + 1
            else:
                hi = mid
        tops[lo] = u
        if lo == npiles:
            npiles += 1
    return npiles
