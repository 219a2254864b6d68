"""Event-driven evolution of the interacting particle system on a window.

An epoch at (x, s) pulls the nearest particle strictly to the right of x onto
x.  If no particle exists to the right inside the window, one is spawned at x
with a fresh external id: in the infinite system the nearest particle beyond
the right edge would land exactly there, so the window marginal of the
configuration is reproduced exactly and only identities are approximate.

Because the moved particle stays between its neighbours, ranks never change;
the whole evolution is a binary search plus an assignment per epoch, and the
no-crossing property holds by construction.

Left-boundary bookkeeping: data left of the window is never sampled, so a
contamination frontier records how far right that ignorance may have spread
(epoch selections reaching across the frontier push it to the selected
particle).  Queries and trajectories are certified only while they stay
strictly right of the frontier.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, UncertifiedRegionError, UncertifiedTrajectoryError
from .points import PlanarPointSet
from .profiles import CLASS_FIRST, CLASS_SECOND, ParticleConfig

EXTERNAL_ID_START = 1_000_000_000


def is_external_id(i) -> bool:
    return i >= EXTERNAL_ID_START


@dataclass(frozen=True)
class EventLog:
    """One record per epoch: times strictly increase, to_position == epoch_x."""

    times: np.ndarray
    epoch_x: np.ndarray
    ranks: np.ndarray
    ids: np.ndarray
    from_pos: np.ndarray  # +inf marks a spawn

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def to_pos(self) -> np.ndarray:
        return self.epoch_x

    @property
    def spawned(self) -> np.ndarray:
        return np.isinf(self.from_pos)

    def truncated(self, t: float) -> "EventLog":
        k = int(np.searchsorted(self.times, t, side="right"))
        return EventLog(self.times[:k], self.epoch_x[:k], self.ranks[:k], self.ids[:k], self.from_pos[:k])

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("time,epoch_x,id,from,to\n")
            for i in range(self.n):
                f.write(f"{float(self.times[i])!r},{float(self.epoch_x[i])!r},{int(self.ids[i])},{float(self.from_pos[i])!r},{float(self.epoch_x[i])!r}\n")


@dataclass(frozen=True)
class ConfigurationState:
    config: ParticleConfig
    time: float
    contamination_frontier: float
    initial: ParticleConfig
    n_original: int


@dataclass(frozen=True)
class TrajectoryRecord:
    id: int
    initial_position: float
    jump_times: np.ndarray
    jump_positions: np.ndarray

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    def position_at(self, t) -> np.ndarray:
        """Piecewise-constant evaluation, right-continuous at jumps."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = np.where(idx == 0, self.initial_position, self.jump_positions[np.maximum(idx - 1, 0)])
        return out if out.size > 1 else out

    @property
    def final_position(self) -> float:
        return float(self.jump_positions[-1]) if self.n_jumps else self.initial_position

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("time,position\n")
            f.write(f"0.0,{float(self.initial_position)!r}\n")
            for t, p in zip(self.jump_times, self.jump_positions):
                f.write(f"{float(t)!r},{float(p)!r}\n")


def _check_epochs(initial: ParticleConfig, epochs: PlanarPointSet, t_end):
    a, b, tmax = epochs.window
    if (a, b) != initial.window:
        raise InvalidParameterError(
            f"epoch window {(a, b)} must match particle window {initial.window}"
        )
    if t_end is None:
        t_end = tmax
    if t_end > tmax or t_end < 0:
        raise InvalidParameterError(f"t_end={t_end} outside sampled time range (0, {tmax}]")
    return float(t_end)


def _epoch_arrays(epochs: PlanarPointSet, t_end: float):
    k = int(np.searchsorted(epochs.t, t_end, side="right"))
    return epochs.x[:k], epochs.t[:k]


def _external_ids(ranks, n0):
    ids = np.where(ranks < n0, ranks, EXTERNAL_ID_START + (ranks - n0))
    return ids


def evolve(initial: ParticleConfig, epochs: PlanarPointSet, t_end=None, engine="fast", fault=None):
    """Run the one-class dynamics; returns (ConfigurationState, EventLog)."""
    t_end = _check_epochs(initial, epochs, t_end)
    ex, et = _epoch_arrays(epochs, t_end)
    left_edge = initial.window[0]
    n0 = initial.n
    if engine == "fast" and fault is None:
        pos, n, ranks, from_pos, frontier, n_spawn = _kernels.evolve_kernel(
            initial.positions, ex, et, left_edge
        )
        times, epoch_x = et, ex
    elif engine in ("fast", "reference"):
        pos, ranks, from_pos, times, epoch_x, frontier = _py_evolve(
            initial.positions, ex, et, left_edge, fault
        )
        n = pos.size
    else:
        raise InvalidParameterError(f"unknown engine {engine!r}")
    ids_log = _external_ids(ranks, n0)
    log = EventLog(np.asarray(times), np.asarray(epoch_x), np.asarray(ranks), ids_log, np.asarray(from_pos))
    n_ext = int(n - n0)
    cfg = ParticleConfig(
        pos,
        np.concatenate([initial.classes, np.full(n_ext, CLASS_FIRST, np.int8)]),
        np.concatenate([initial.ids, EXTERNAL_ID_START + np.arange(n_ext, dtype=np.int64)]),
        initial.window,
    )
    state = ConfigurationState(cfg, t_end, float(frontier), initial, n0)
    return state, log


def _py_evolve(pos0, ex, et, left_edge, fault=None):
    """Reference implementation of the same loop (used for cross-checks)."""
    pos = list(pos0)
    frontier = left_edge
    ranks, from_pos, times, xs = [], [], [], []
    t_prev = -1.0
    for x, t in zip(ex, et):
        if t <= t_prev:
            raise InvalidParameterError("epoch times must be strictly increasing")
        t_prev = t
        k = bisect_right(pos, x)
        if k == len(pos):
            if fault == "spawn-skip":
                continue
            pos.append(x)
            ranks.append(k)
            from_pos.append(np.inf)
            if x < frontier:
                frontier = np.inf
        else:
            if x < frontier and pos[k] >= frontier:
                frontier = np.nextafter(pos[k], np.inf)
            ranks.append(k)
            from_pos.append(pos[k])
            pos[k] = x
        times.append(t)
        xs.append(x)
    return (
        np.asarray(pos),
        np.asarray(ranks, dtype=np.int64),
        np.asarray(from_pos),
        np.asarray(times),
        np.asarray(xs),
        frontier,
    )


def frontier_series(log: EventLog, left_edge: float):
    """Frontier value after each event, reconstructed from the log alone."""
    out = np.empty(log.n)
    f = left_edge
    for i in range(log.n):
        x = log.epoch_x[i]
        if x < f:
            if np.isinf(log.from_pos[i]):
                f = np.inf
            elif log.from_pos[i] >= f:
                f = np.nextafter(log.from_pos[i], np.inf)
        out[i] = f
    return out


def tagged_trajectory(initial: ParticleConfig, epochs: PlanarPointSet, tagged_id, t_end=None) -> TrajectoryRecord:
    """Exact path of one particle; uncertified if the frontier catches it."""
    rank = initial.index_of_id(tagged_id)
    state, log = evolve(initial, epochs, t_end)
    mask = log.ranks == rank
    rec = TrajectoryRecord(
        int(tagged_id), float(initial.positions[rank]), log.times[mask], log.epoch_x[mask]
    )
    if rec.n_jumps and np.any(np.diff(np.concatenate([[rec.initial_position], rec.jump_positions])) > 0):
        raise RuntimeError("first-class path must be non-increasing")
    fr = frontier_series(log, initial.window[0])
    path = _path_at_events(rec, log.times)
    bad = np.nonzero(path <= fr)[0]
    if bad.size:
        raise UncertifiedTrajectoryError(
            "tagged path entered the contaminated region", violation_time=float(log.times[bad[0]])
        )
    return rec


def _path_at_events(rec: TrajectoryRecord, times):
    if rec.n_jumps == 0:
        return np.full(len(times), rec.initial_position)
    return rec.position_at(times)


def tagged_positions(initial: ParticleConfig, epochs: PlanarPointSet, rank: int, sample_times, t_end=None):
    """Positions of the particle at the given rank, sampled at sample_times.

    Fast path without an event log; raises if the contamination frontier
    caught the tracked particle.
    """
    if not 0 <= rank < initial.n:
        raise InvalidParameterError(f"rank {rank} out of range")
    st = np.asarray(sorted(sample_times), dtype=np.float64)
    if t_end is None:
        t_end = float(st[-1])
    t_end = _check_epochs(initial, epochs, t_end)
    ex, et = _epoch_arrays(epochs, t_end)
    out, min_pos, frontier, violation = _kernels.evolve_tagged_kernel(
        initial.positions, ex, et, rank, st, initial.window[0]
    )
    if not np.isnan(violation):
        raise UncertifiedTrajectoryError(
            "tracked particle entered the contaminated region", violation_time=float(violation)
        )
    return out


def coupled_discrepancy(base: ParticleConfig, epochs: PlanarPointSet, t_end=None, sample_times=None):
    """Basic coupling of base and base + atom at 0; tracks the discrepancy.

    Returns (TrajectoryRecord, samples) where samples is the discrepancy
    position at sample_times (empty array when not requested).
    """
    if np.any(base.positions == 0.0):
        raise InvalidParameterError("base configuration must not contain an atom at 0")
    a, b = base.window
    if not (a < 0.0 < b):
        raise InvalidParameterError("window must contain the origin")
    t_end = _check_epochs(base, epochs, t_end)
    ex, et = _epoch_arrays(epochs, t_end)
    st = np.asarray(sample_times, dtype=np.float64) if sample_times is not None else np.empty(0)
    out, jt, jp, nj, frontier, merge_time = _kernels.coupled_z_kernel(
        base.positions, ex, et, st, a
    )
    if not np.isnan(merge_time):
        raise UncertifiedTrajectoryError(
            "discrepancy would have merged with a particle entering from the right edge",
            violation_time=float(merge_time),
        )
    rec = TrajectoryRecord(-1, 0.0, jt, jp)
    if nj and np.any(np.diff(np.concatenate([[0.0], jp])) < 0):
        raise RuntimeError("discrepancy path must be non-decreasing")
    return rec, out


@dataclass(frozen=True)
class PriorityResult:
    """Two-class run output: final state plus per-entity bookkeeping.

    Entity ranks (order among second-class particles) never change, so rank r
    always refers to the discrepancy that started at entity_labels[r].
    """

    state: ConfigurationState
    entity_labels: np.ndarray
    entity_ids: np.ndarray
    entity_final: np.ndarray
    entity_alive: np.ndarray
    trajectories: dict
    sample_times: np.ndarray
    entity_snapshots: dict
    body_snapshots: list
    first_labels: np.ndarray
    n_first0: int
    n0: int
    exit_time: float
    frontier: float

    def flux(self, x: float, t: float | None = None, classes=None) -> int:
        """Signed crossing count by class at the final time (or a sampled one)."""
        if t is None or t == self.state.time:
            if classes == CLASS_SECOND:
                return _crossing_count(self.entity_labels, self.entity_final, x)
            body_pos = self.state.config.positions
            body_cls = self.state.config.classes
        else:
            hits = np.nonzero(self.sample_times == t)[0]
            if hits.size == 0 or len(self.body_snapshots) <= int(hits[0]):
                raise UncertifiedRegionError(f"no body snapshot recorded at t={t}")
            body_pos, body_cls, ent_pos = self.body_snapshots[int(hits[0])]
            if classes == CLASS_SECOND:
                return _crossing_count(self.entity_labels, ent_pos, x)
        if classes is None:
            labels = _body_labels(self)
            return _crossing_count(labels, body_pos, x)
        if classes == CLASS_FIRST:
            fpos = body_pos[body_cls == CLASS_FIRST]
            nf = fpos.size
            labels = np.concatenate([self.first_labels, np.full(nf - self.first_labels.size, np.inf)])
            return _crossing_count(labels, fpos, x)
        raise InvalidParameterError(f"unknown class filter {classes!r}")


def _body_labels(result: PriorityResult):
    n = result.state.config.n
    labels = np.full(n, np.inf)
    labels[: result.n0] = result.state.initial.positions
    return labels


def _crossing_count(labels, pos_t, x) -> int:
    plus = int(np.sum((labels > 0) & (pos_t <= x)))
    minus = int(np.sum((labels <= 0) & (pos_t > x)))
    return plus - minus


def priority_dynamics(
    first: ParticleConfig,
    second: ParticleConfig,
    epochs: PlanarPointSet,
    t_end=None,
    engine="fast",
    tracked=None,
    sample_times=None,
) -> PriorityResult:
    """Two-class dynamics: first-class particles ignore second-class ones.

    A second-class particle jumps right to the vacated position whenever a
    first-class particle is pulled across it; runs of adjacent second-class
    particles shift one slot so their order is preserved.  `tracked` selects
    entity ranks to record trajectories for (reference engine records all).
    """
    from .profiles import merge_two_class

    combined = merge_two_class(first, second)
    t_end = _check_epochs(combined, epochs, t_end)
    ex, et = _epoch_arrays(epochs, t_end)
    st = np.asarray(sample_times, dtype=np.float64) if sample_times is not None else np.empty(0)
    second_mask = combined.classes == CLASS_SECOND
    entity_labels = combined.positions[second_mask]
    entity_ids = combined.ids[second_mask]
    n0 = combined.n
    n_first0 = int(np.sum(~second_mask))

    if engine == "reference":
        return _py_priority(combined, entity_labels, entity_ids, ex, et, t_end, st, n_first0)

    tracked_arr = np.asarray(tracked if tracked is not None else [], dtype=np.int64)
    cls01 = (combined.classes == CLASS_SECOND).astype(np.int8)
    (
        pos, cls, n, zpos, alive, traj, tr_jt, tr_jp, tr_nj, exited, frontier, exit_time
    ) = _kernels.priority_kernel(
        combined.positions, cls01, ex, et, tracked_arr, st, combined.window[0]
    )
    n_ext = n - n0
    cfg = ParticleConfig(
        pos,
        np.where(cls == 1, CLASS_SECOND, CLASS_FIRST).astype(np.int8),
        np.concatenate([combined.ids, EXTERNAL_ID_START + np.arange(n_ext, dtype=np.int64)]),
        combined.window,
    )
    state = ConfigurationState(cfg, t_end, float(frontier), combined, n0)
    trajectories = {}
    snapshots = {}
    for a, r in enumerate(tracked_arr):
        nj = int(tr_nj[a])
        trajectories[int(entity_ids[r])] = TrajectoryRecord(
            int(entity_ids[r]), float(entity_labels[r]), tr_jt[a, :nj].copy(), tr_jp[a, :nj].copy()
        )
        snapshots[int(r)] = traj[a].copy()
    return PriorityResult(
        state, entity_labels, entity_ids, zpos, alive.astype(bool), trajectories, st,
        snapshots, [], combined.positions[~second_mask], n_first0, n0,
        float(exit_time), float(frontier),
    )


def _py_priority(combined, entity_labels, entity_ids, ex, et, t_end, sample_times, n_first0):
    """Reference two-class engine; records everything (small instances)."""
    pos = list(combined.positions)
    cls = list(combined.classes)
    left_edge = combined.window[0]
    zpos = list(entity_labels)
    alive = [True] * len(zpos)
    jumps = {r: ([], []) for r in range(len(zpos))}
    body_snapshots = []
    ent_snapshots = {r: [] for r in range(len(zpos))}
    frontier = left_edge
    exit_time = np.nan
    si = 0
    n0 = combined.n

    def flush(upto):
        nonlocal si
        while si < sample_times.size and sample_times[si] < upto:
            body_snapshots.append(
                (np.array(pos), np.array(cls, dtype=np.int8), np.array([z if a else np.inf for z, a in zip(zpos, alive)]))
            )
            for r in range(len(zpos)):
                ent_snapshots[r].append(zpos[r] if alive[r] else np.inf)
            si += 1

    for x, t in zip(ex, et):
        flush(t)
        k = bisect_right(pos, x)
        if k == len(pos):
            pos.append(x)
            cls.append(CLASS_FIRST)
            if x < frontier:
                frontier = np.inf
            continue
        if x < frontier and pos[k] >= frontier:
            frontier = np.nextafter(pos[k], np.inf)
        if cls[k] == CLASS_FIRST:
            pos[k] = x
            continue
        kf = k + 1
        while kf < len(pos) and cls[kf] == CLASS_SECOND:
            kf += 1
        r = bisect_right([z if a else np.inf for z, a in zip(zpos, alive)], x)
        chain = kf - k
        moved_from = pos[kf] if kf < len(pos) else np.inf
        pos[k] = x
        cls[k] = CLASS_FIRST
        if kf < len(pos):
            cls[kf] = CLASS_SECOND
        for c in range(chain):
            q = r + c
            newp = zpos[q + 1] if c < chain - 1 else moved_from
            zpos[q] = newp
            jumps[q][0].append(t)
            jumps[q][1].append(newp)
        if kf == len(pos):
            q = r + chain - 1
            alive[q] = False
            zpos[q] = np.inf
            if np.isnan(exit_time):
                exit_time = t

    flush(np.inf)
    posa = np.array(pos)
    clsa = np.array(cls, dtype=np.int8)
    n_ext = posa.size - n0
    cfg = ParticleConfig(
        posa, clsa,
        np.concatenate([combined.ids, EXTERNAL_ID_START + np.arange(n_ext, dtype=np.int64)]),
        combined.window,
    )
    state = ConfigurationState(cfg, t_end, float(frontier), combined, n0)
    trajectories = {}
    for r in range(len(zpos)):
        ts, ps = jumps[r]
        trajectories[int(entity_ids[r])] = TrajectoryRecord(
            int(entity_ids[r]), float(entity_labels[r]), np.array(ts), np.array(ps)
        )
        if ts and np.any(np.diff(np.concatenate([[entity_labels[r]], ps])) < 0):
            raise RuntimeError("second-class path must be non-decreasing")
    snapshots = {r: np.array(v) for r, v in ent_snapshots.items()}
    return PriorityResult(
        state, entity_labels, entity_ids,
        np.array([z if a else np.inf for z, a in zip(zpos, alive)]),
        np.array(alive, dtype=bool), trajectories, sample_times, snapshots,
        body_snapshots, combined.positions[combined.classes == CLASS_FIRST],
        n_first0, n0, float(exit_time), float(frontier),
    )


def flux_from_dynamics(log, initial, x: float, t: float, classes=None):
    """Signed particle-crossing count through the segment (0,0) -> (x,t).

    For a one-class run pass (log, initial); for class-filtered queries pass
    a PriorityResult as `log` (initial is ignored).
    """
    if isinstance(log, PriorityResult):
        return log.flux(x, t, classes)
    if classes is not None:
        raise InvalidParameterError("class filters require a PriorityResult")
    if initial.window[1] <= 0:
        raise UncertifiedRegionError("window right edge must exceed 0 for flux labels")
    pos_t = replay_positions(log, initial, t)
    labels = np.concatenate([initial.positions, np.full(pos_t.size - initial.n, np.inf)])
    return _crossing_count(labels, pos_t, x)


def replay_positions(log: EventLog, initial: ParticleConfig, t: float) -> np.ndarray:
    """Positions (by rank, spawns appended) after applying the log up to t."""
    sub = log.truncated(t)
    pos = list(initial.positions)
    for i in range(sub.n):
        r = int(sub.ranks[i])
        if r == len(pos):
            pos.append(sub.epoch_x[i])
        else:
            pos[r] = sub.epoch_x[i]
    return np.asarray(pos)


def west_process(initial: ParticleConfig, epochs: PlanarPointSet, x: float, t_end=None):
    """Times at which particles cross the vertical line at x (x < 0) leftward."""
    a, b = initial.window
    if not (a < x < 0):
        raise UncertifiedRegionError(f"x={x} must lie in ({a}, 0)")
    state, log = evolve(initial, epochs, t_end)
    crossing = (log.from_pos > x) & (log.epoch_x <= x)
    return log.times[crossing]


def chi_min(state: ConfigurationState, x: float) -> float:
    """Smallest initial label among particles strictly right of x at state.time."""
    pos = state.config.positions
    k = int(np.searchsorted(pos, x, side="right"))
    if k >= state.config.n:
        raise UncertifiedRegionError(f"no particle right of x={x} in window")
    if k >= state.n_original:
        raise UncertifiedRegionError("nearest particle right of x is external")
    return float(state.initial.positions[k])


def chi_bar_max(result: PriorityResult, x: float) -> float:
    """Largest initial label among second-class entities at or left of x (final time)."""
    k = int(np.searchsorted(result.entity_final, x, side="right")) - 1
    if k < 0:
        raise UncertifiedRegionError(f"no second-class entity at or left of x={x}")
    return float(result.entity_labels[k])
