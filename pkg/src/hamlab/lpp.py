"""Last-passage lengths and the variational flux formula.

The flux through the segment from (0,0) to (x,t) has the representation

    value = sup over z <= x of  g(z),   g(z) = nu(z) + L((z,0),(x,t)),

where L((z,0),(x,t)) is the longest chain of epochs in (z,x] x (0,t] that is
strictly increasing in both coordinates.  g is a right-continuous step
function: it jumps up by one when z crosses a particle and may drop by one
when z crosses an epoch abscissa, so the supremum over real z is found
exactly by evaluating g at finitely many breakpoints.

Exit points: the maximizing set of g is a finite union of left-closed
right-open intervals between breakpoints (the rightmost one may be closed at
x).  y_inf is the left endpoint of the first maximizing interval (attained);
y_sup is the right endpoint of the last one (possibly not attained).  A query
is certified only when y_inf lies strictly inside the sampled window, i.e.
the maximizer did not touch the left edge where the data ends.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from ._kernels import lis_candidates_kernel, lis_rect_kernel
from .errors import UncertifiedRegionError
from .points import PlanarPointSet
from .profiles import ParticleConfig, signed_count


@dataclass(frozen=True)
class FluxResult:
    value: int
    y_sup: float
    y_inf: float
    certified: bool

    def __post_init__(self):
        if not self.y_inf <= self.y_sup:
            raise ValueError("y_inf must not exceed y_sup")

    def csv_row(self, x, t):
        return (f"{float(x)!r},{float(t)!r},{self.value},{float(self.y_sup)!r},"
                f"{float(self.y_inf)!r},{str(self.certified).lower()}")


def _check_rect(points: PlanarPointSet, z, x, t):
    a, b, tmax = points.window
    if z < a or x > b or t > tmax or t < 0:
        raise UncertifiedRegionError(
            f"rectangle ({z},{x}] x (0,{t}] exceeds sampled window {points.window}"
        )


def lis_length(points: PlanarPointSet, rect) -> int:
    """Longest strictly increasing chain of epochs in (z,x] x (0,t].

    rect = (z, x, t); O(n log n) patience insertion.
    """
    z, x, t = rect
    _check_rect(points, z, x, t)
    keep = (points.x > z) & (points.x <= x) & (points.t <= t)
    ex, et = points.x[keep], points.t[keep]
    order = np.argsort(ex)
    return int(lis_rect_kernel(et[order]))


def lis_length_quadratic(points: PlanarPointSet, rect) -> int:
    """O(n^2) dominance DP over the same rectangle; reference for tests."""
    z, x, t = rect
    _check_rect(points, z, x, t)
    keep = (points.x > z) & (points.x <= x) & (points.t <= t)
    ex, et = points.x[keep], points.t[keep]
    order = np.argsort(ex)
    et = et[order]
    n = et.size
    if n == 0:
        return 0
    best = np.ones(n, dtype=np.int64)
    for i in range(1, n):
        le = et[:i] < et[i]
        if le.any():
            best[i] = best[:i][le].max() + 1
    return int(best.max())


def _candidates(config: ParticleConfig, epochs: PlanarPointSet, x: float, t: float):
    """Breakpoints of g on [A, x]: window edge, particles, epoch abscissas, x."""
    a = config.window[0]
    parts = config.positions
    parts = parts[parts <= x]
    keep = (epochs.x <= x) & (epochs.t <= t)
    ex, et = epochs.x[keep], epochs.t[keep]
    cand = np.unique(np.concatenate([np.array([a, x]), parts, ex]))
    return cand, ex, et


def _assemble(cand, g, x, left_edge):
    gmax = int(g.max())
    hits = np.nonzero(g == gmax)[0]
    first, last = int(hits[0]), int(hits[-1])
    y_inf = float(cand[first])
    y_sup = float(cand[last + 1]) if last + 1 < cand.size else float(x)
    certified = y_inf > left_edge
    return FluxResult(gmax, y_sup, y_inf, certified)


def flux_variational(config: ParticleConfig, epochs: PlanarPointSet, x: float, t: float) -> FluxResult:
    """Exact breakpoint-scan evaluation of the variational flux formula."""
    a, b = config.window
    if not (a <= x <= b):
        raise UncertifiedRegionError(f"x={x} outside particle window {config.window}")
    _check_rect(epochs, a, x, t)
    cand, ex, et = _candidates(config, epochs, x, t)
    order = np.argsort(-ex)
    lis = lis_candidates_kernel(cand, ex[order], et[order])
    nu = _signed_counts(config.positions, cand)
    g = nu + lis
    return _assemble(cand, g, x, a)


def flux_naive_oracle(config: ParticleConfig, epochs: PlanarPointSet, x: float, t: float) -> FluxResult:
    """Independent evaluation: a fresh patience pass per candidate (tests only)."""
    a, b = config.window
    if not (a <= x <= b):
        raise UncertifiedRegionError(f"x={x} outside particle window {config.window}")
    _check_rect(epochs, a, x, t)
    cand, ex, et = _candidates(config, epochs, x, t)
    g = np.empty(cand.size, dtype=np.int64)
    for i, z in enumerate(cand):
        keep = ex > z
        sub_x, sub_t = ex[keep], et[keep]
        order = np.argsort(sub_x)
        g[i] = _patience_py(sub_t[order]) + signed_count(config.positions, float(z))
    return _assemble(cand, g, x, a)


def _patience_py(ts) -> int:
    tops: list[float] = []
    for v in ts:
        i = bisect_left(tops, v)
        if i == len(tops):
            tops.append(v)
        else:
            tops[i] = v
    return len(tops)


def _signed_counts(sorted_positions, xs):
    """Vectorized nu(x) over an ascending array of query points."""
    right = np.searchsorted(sorted_positions, xs, side="right")
    zero = np.searchsorted(sorted_positions, 0.0, side="right")
    out = right - zero
    out[xs == 0.0] = 0
    return out.astype(np.int64)
