"""Single-server queue paths and the queue-based two-class constructions.

Queue "time" is particle-system space: the arrival and service processes are
point sets on the line, swept left to right.  The effective services
(departures) and the unused services of a stationary queue with arrival rate
rho and service rate lam split the service process into the invariant
first/second-class pair of configurations.

Conditioning on a second-class particle at the origin is done by direct
construction: right of 0 the queue restarts empty; left of 0 the data is
produced by running a fresh queue in reversed space from an empty state (the
stationary queue-length process is reversible, and reversal exchanges the
roles of arrivals and effective services while fixing the unused ones).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectoryRecord, evolve, priority_dynamics
from .errors import InvalidParameterError, UncertifiedRegionError
from .points import DualPointSet, LinePointSet, PlanarPointSet, sample_planar_unit_poisson, sample_poisson_line
from .profiles import CLASS_SECOND, ParticleConfig, from_line_points, from_positions
from .rng import RngStream


@dataclass(frozen=True)
class QueueSample:
    arrivals: LinePointSet
    services: LinePointSet
    initial_len: int
    event_positions: np.ndarray
    levels: np.ndarray  # level just after each event
    departures: LinePointSet
    unused: LinePointSet

    def level_at(self, x: float) -> int:
        k = int(np.searchsorted(self.event_positions, x, side="right"))
        return int(self.initial_len if k == 0 else self.levels[k - 1])


def mm1_path(arrivals: LinePointSet, services: LinePointSet, initial_len: int) -> QueueSample:
    """Left-to-right FIFO sweep; a service at an empty queue is `unused`."""
    if arrivals.rate >= services.rate:
        raise InvalidParameterError(
            f"arrival rate {arrivals.rate} must be below service rate {services.rate}"
        )
    if arrivals.window != services.window:
        raise InvalidParameterError("arrivals and services must share a window")
    if initial_len < 0:
        raise InvalidParameterError("initial_len must be non-negative")
    pos = np.concatenate([arrivals.positions, services.positions])
    delta = np.concatenate([
        np.ones(arrivals.n, dtype=np.int64),
        -np.ones(services.n, dtype=np.int64),
    ])
    order = np.argsort(pos)
    pos, delta = pos[order], delta[order]
    if pos.size > 1 and np.any(np.diff(pos) == 0):
        raise InvalidParameterError("arrival/service positions must be distinct")
    pre = initial_len + np.cumsum(delta)
    run_min = np.minimum.accumulate(pre) if pre.size else pre
    levels = pre - np.minimum(run_min, 0)
    prev = np.concatenate([[initial_len], levels[:-1]]) if pos.size else np.empty(0)
    is_service = delta < 0
    unused_mask = is_service & (prev == 0)
    used_mask = is_service & (prev > 0)
    departures = LinePointSet(np.sort(pos[used_mask]), arrivals.rate, arrivals.window)
    unused = LinePointSet(np.sort(pos[unused_mask]), services.rate - arrivals.rate, arrivals.window)
    return QueueSample(arrivals, services, int(initial_len), pos, levels, departures, unused)


def _geometric0(q: float, stream: RngStream) -> int:
    """Sample from P(k) = (1-q) q^k, k >= 0."""
    return int(stream.generator().geometric(1.0 - q)) - 1


def stationary_two_class(rho: float, lam: float, window, stream: RngStream):
    """Invariant two-class initial measure: (departures, unused services)."""
    if not 0 < rho < lam:
        raise InvalidParameterError(f"need 0 < rho < lam, got rho={rho}, lam={lam}")
    arrivals = sample_poisson_line(rho, window, stream.child("arrivals"))
    services = sample_poisson_line(lam, window, stream.child("services"))
    initial_len = _geometric0(rho / lam, stream.child("initial-len"))
    q = mm1_path(arrivals, services, initial_len)
    first = from_line_points(q.departures)
    second = from_line_points(q.unused, CLASS_SECOND, id_start=first.n)
    return first, second


def _conditioned_halves(rho, lam, window, stream):
    """D/U point sets left and right of 0 for the measure conditioned to have
    a second-class particle (an unused service) at the origin."""
    a, b = float(window[0]), float(window[1])
    if not (a < 0.0 < b):
        raise InvalidParameterError("window must contain the origin in its interior")
    # left of 0 via the reversed queue run from empty: reversed arrivals are
    # the real effective services, reversed unused are the real unused
    rev_arr = sample_poisson_line(rho, (0.0, -a), stream.child("left-rev-arrivals"))
    rev_srv = sample_poisson_line(lam, (0.0, -a), stream.child("left-rev-services"))
    rq = mm1_path(rev_arr, rev_srv, 0)
    d_left = np.sort(-rev_arr.positions)
    u_left = np.sort(-rq.unused.positions)
    # right of 0: fresh queue restarted empty
    arr = sample_poisson_line(rho, (0.0, b), stream.child("right-arrivals"))
    srv = sample_poisson_line(lam, (0.0, b), stream.child("right-services"))
    fq = mm1_path(arr, srv, 0)
    return d_left, u_left, fq.departures.positions, fq.unused.positions


def condition_second_class_at_origin(rho: float, lam: float, window, stream: RngStream):
    """Two-class measure conditioned on a second-class particle at 0.

    Also returns the independent geometric(rho/lam) level used by the shock
    coupling.
    """
    if not 0 < rho < lam:
        raise InvalidParameterError(f"need 0 < rho < lam, got rho={rho}, lam={lam}")
    d_left, u_left, d_right, u_right = _conditioned_halves(rho, lam, window, stream)
    first = from_positions(np.concatenate([d_left, d_right]), window)
    second_pos = np.concatenate([u_left, [0.0], u_right])
    second = from_positions(second_pos, window, CLASS_SECOND, id_start=first.n)
    k_plus_1 = _geometric0(rho / lam, stream.child("g-level"))
    return first, second, k_plus_1


def dual_points(initial: ParticleConfig, epochs: PlanarPointSet, t_end=None) -> DualPointSet:
    """One dual point (y, s) per jump: y the vacated position, s the time."""
    state, log = evolve(initial, epochs, t_end)
    keep = ~log.spawned
    x, t = log.from_pos[keep], log.times[keep]
    a, b, _ = epochs.window
    tmax = state.time
    return PlanarPointSet(x, t, (a, b, tmax))


@dataclass(frozen=True)
class TwoLineResult:
    line1: object
    line2: object
    dual: DualPointSet


def two_line_process(alpha1: LinePointSet, alpha2: LinePointSet, epochs: PlanarPointSet, t_end=None) -> TwoLineResult:
    """Couple two one-class systems: the second line is driven by the epochs,
    the first by the dual points of the second."""
    if alpha1.window != alpha2.window:
        raise InvalidParameterError("alpha1 and alpha2 must share a window")
    line2_initial = from_line_points(alpha2)
    line2_state, line2_log = evolve(line2_initial, epochs, t_end)
    keep = ~line2_log.spawned
    a, b, _ = epochs.window
    dual = PlanarPointSet(line2_log.from_pos[keep], line2_log.times[keep], (a, b, line2_state.time))
    line1_initial = from_line_points(alpha1)
    line1_state, _ = evolve(line1_initial, dual, line2_state.time)
    return TwoLineResult(line1_state, line2_state, dual)


@dataclass(frozen=True)
class ShockCouplingResult:
    """Coupled shock / stationary tagged paths and the pathwise bound.

    z_lower(t) <= z_shock(t) <= z_stat(t) for all t by construction; j is the
    per-time bound z_stat - z_lower on |z_stat - z_shock|.
    """

    sample_times: np.ndarray
    z_shock: TrajectoryRecord
    z_stat: TrajectoryRecord
    z_lower: TrajectoryRecord
    z_shock_samples: np.ndarray
    z_stat_samples: np.ndarray
    z_lower_samples: np.ndarray
    j_samples: np.ndarray
    k_plus_1: int

    def __post_init__(self):
        if np.any(self.z_lower_samples > self.z_shock_samples) or np.any(
            self.z_shock_samples > self.z_stat_samples
        ):
            raise RuntimeError("pathwise sandwich violated")

    def csv_rows(self, replica):
        for i, t in enumerate(self.sample_times):
            yield (
                f"{replica},{float(t)!r},{float(self.z_shock_samples[i])!r},"
                f"{float(self.z_stat_samples[i])!r},{float(self.z_lower_samples[i])!r},"
                f"{float(self.j_samples[i])!r}"
            )


def default_shock_window(rho, lam, t_end, margin_factor=4.0):
    mu2 = 1.0 / (lam * rho)
    sigma2 = np.sqrt(2.0 / (lam * rho * (lam - rho)))
    zmax = mu2 * t_end + 6.0 * sigma2 * np.sqrt(max(t_end, 1.0))
    left = max(margin_factor * t_end / rho**2, 10.0 / rho) + 20.0 / (lam - rho)
    right = max(margin_factor * t_end / lam**2, 10.0 / lam)
    return (-left, zmax + right)


def shock_coupling_experiment(
    rho: float,
    lam: float,
    t_end: float,
    stream: RngStream,
    sample_times=None,
    window=None,
    verify_ghost=False,
) -> ShockCouplingResult:
    """Run the tagged shock system and the stationary tagged system on the
    same epochs, with the extra lower-bound discrepancy, per-replica."""
    if not 0 < rho < lam:
        raise InvalidParameterError(f"need 0 < rho < lam, got rho={rho}, lam={lam}")
    if sample_times is None:
        sample_times = [float(t_end)]
    st = np.asarray(sorted(sample_times), dtype=np.float64)
    if window is None:
        window = default_shock_window(rho, lam, t_end)
    d_left, u_left, d_right, u_right = _conditioned_halves(rho, lam, window, stream)
    g0 = _geometric0(rho / lam, stream.child("g-level"))
    if g0 > u_left.size:
        raise UncertifiedRegionError(
            f"window too shallow on the left: need {g0} second-class particles below 0"
        )
    epochs = sample_planar_unit_poisson((window[0], window[1], float(t_end)), stream.child("epochs"))

    # stationary system: first = departures, second = unused + atom at 0
    stat_first = from_positions(np.concatenate([d_left, d_right]), window)
    stat_second_pos = np.concatenate([u_left, [0.0], u_right])
    stat_second = from_positions(stat_second_pos, window, CLASS_SECOND, id_start=stat_first.n)
    tagged_rank = u_left.size
    if g0 >= 1:
        tracked_stat = [tagged_rank - g0, tagged_rank]
    else:
        tracked_stat = [tagged_rank]
    res_stat = priority_dynamics(stat_first, stat_second, epochs, t_end, tracked=tracked_stat, sample_times=st)

    # shock system: the g0-1 nearest unused left of 0 become first class, the
    # g0-th hosts the lower-bound discrepancy; everything right of 0 is first
    k = max(g0 - 1, 0)
    converted = u_left[u_left.size - k:] if k else np.empty(0)
    shock_first_pos = np.concatenate([d_left, converted, d_right, u_right])
    shock_first = from_positions(shock_first_pos, window)
    if g0 >= 1:
        ghost_pos = u_left[u_left.size - g0]
        shock_second = from_positions([ghost_pos, 0.0], window, CLASS_SECOND, id_start=shock_first.n)
        tracked_shock = [0, 1]
    else:
        shock_second = from_positions([0.0], window, CLASS_SECOND, id_start=shock_first.n)
        tracked_shock = [0]
    res_shock = priority_dynamics(shock_first, shock_second, epochs, t_end, tracked=tracked_shock, sample_times=st)

    if not all(res_stat.entity_alive[r] for r in tracked_stat) or not all(
        res_shock.entity_alive[r] for r in tracked_shock
    ):
        raise UncertifiedRegionError("a tracked discrepancy reached the right window edge")

    stat_ids = stat_second.ids
    z_stat = res_stat.trajectories[int(stat_ids[tagged_rank])]
    z_stat_s = res_stat.entity_snapshots[tagged_rank]
    shock_ids = shock_second.ids
    if g0 >= 1:
        z_shock = res_shock.trajectories[int(shock_ids[1])]
        z_shock_s = res_shock.entity_snapshots[1]
        z_lower = res_shock.trajectories[int(shock_ids[0])]
        z_lower_s = res_shock.entity_snapshots[0]
        z_lower_stat_s = res_stat.entity_snapshots[tagged_rank - g0]
        if not np.array_equal(z_lower_s, z_lower_stat_s):
            raise RuntimeError("ghost discrepancy diverged from its stationary twin")
        j = z_stat_s - z_lower_s
    else:
        z_shock = res_shock.trajectories[int(shock_ids[0])]
        z_shock_s = res_shock.entity_snapshots[0]
        z_lower = z_shock
        z_lower_s = z_shock_s
        j = np.zeros_like(z_stat_s)
        if not np.array_equal(z_shock_s, z_stat_s):
            raise RuntimeError("empty-level case: shock and stationary paths must agree")

    if verify_ghost and g0 >= 1:
        solo = priority_dynamics(
            shock_first,
            from_positions([0.0], window, CLASS_SECOND, id_start=shock_first.n),
            epochs, t_end, tracked=[0], sample_times=st,
        )
        if not np.array_equal(solo.entity_snapshots[0], z_shock_s):
            raise RuntimeError("lower-bound discrepancy altered the tagged path")

    return ShockCouplingResult(st, z_shock, z_stat, z_lower, z_shock_s, z_stat_s, z_lower_s, j, g0)
