"""Queue-based invariant two-class measure and the dual-point identity.

Sweeping space left to right, a single-server queue with arrival rate rho and
service rate lam splits the services into departures (first class, a Poisson
rho process) and unused services (second class).  Dual points of an evolved
stationary profile form a unit planar Poisson set again.
"""

import numpy as np

from hamlab import (
    RngStream,
    dual_points,
    mm1_path,
    sample_planar_unit_poisson,
    sample_poisson_line,
    stationary_profile,
    stationary_two_class,
    two_line_process,
)

stream = RngStream(77)
window = (0.0, 300.0)

first, second = stationary_two_class(1.0, 2.0, window, stream.child("fm"))
print(f"invariant two-class measure on [0,300]: {first.n} first-class "
      f"(rate target 1.0 -> {first.n / 300:.3f}), {second.n} second-class "
      f"(rate target 1.0 -> {second.n / 300:.3f})")

arr = sample_poisson_line(1.0, window, stream.child("arr"))
srv = sample_poisson_line(2.0, window, stream.child("srv"))
q = mm1_path(arr, srv, 1)
gaps = np.diff(q.departures.positions)
print(f"departure gaps: mean {gaps.mean():.3f} (target 1.0), "
      f"split identity holds: {q.departures.n + q.unused.n == srv.n}")

cfg = stationary_profile(1.0, window, stream.child("profile"))
epochs = sample_planar_unit_poisson((*window, 40.0), stream.child("epochs"))
dual = dual_points(cfg, epochs)
inner = dual.restrict(60.0, 240.0, 8.0, 32.0)
print(f"\ndual points in an interior region: {inner.n} "
      f"(unit intensity target {180 * 24})")

res = two_line_process(arr, srv, epochs)
pos = res.line1.config.positions
inner_gaps = np.diff(pos[(pos > 60) & (pos < 240)])
print(f"first line of the two-line coupling stays stationary: "
      f"interior gap mean {inner_gaps.mean():.3f} (target 1.0)")
