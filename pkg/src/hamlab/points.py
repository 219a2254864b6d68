"""Poisson point sets on the line and the plane.

Provides seed-reproducible sampling of homogeneous Poisson processes,
independent thinning, and lazy extension of an already-sampled planar region
(the original points are kept bit-identical, only the new region is drawn).

Coordinates are enforced to be pairwise distinct: exact ties have probability
zero in the model but can occur in finite precision, and the downstream
engines require strict orders, so offending draws are rejected and redrawn.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .rng import RngStream

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class LinePointSet:
    """Sorted points of a one-dimensional Poisson sample on a window.

    positions : strictly increasing float array
    rate      : effective intensity (points per unit length)
    window    : closed interval (a, b)
    """

    positions: np.ndarray
    rate: float
    window: tuple[float, float]

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        object.__setattr__(self, "positions", pos)
        a, b = self.window
        if pos.size:
            if np.any(np.diff(pos) <= 0):
                raise InvalidParameterError("positions must be strictly increasing")
            if pos[0] < a or pos[-1] > b:
                raise InvalidParameterError("positions outside window")

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def count(self, lo: float, hi: float) -> int:
        """Number of points in the half-open interval (lo, hi]."""
        p = self.positions
        return int(np.searchsorted(p, hi, side="right") - np.searchsorted(p, lo, side="right"))

    def restrict(self, lo: float, hi: float) -> "LinePointSet":
        p = self.positions
        keep = p[(p >= lo) & (p <= hi)]
        return LinePointSet(keep, self.rate, (lo, hi))

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("x\n")
            for v in self.positions:
                f.write(f"{float(v)!r}\n")

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump([float(v) for v in self.positions], f)


@dataclass(frozen=True)
class PlanarPointSet:
    """Planar point set sorted by time coordinate.

    x, t   : coordinate arrays, all x distinct, all t distinct, t increasing
    window : rectangle (a, b, t_max) meaning [a, b] x [0, t_max]
    """

    x: np.ndarray
    t: np.ndarray
    window: tuple[float, float, float]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        if x.size != t.size:
            raise InvalidParameterError("x and t must have equal length")
        a, b, tmax = self.window
        if x.size:
            if np.any(np.diff(t) <= 0):
                raise InvalidParameterError("t coordinates must be strictly increasing")
            if np.any(np.diff(np.sort(x)) == 0):
                raise InvalidParameterError("x coordinates must be distinct")
            if x.min() < a or x.max() > b or t[0] <= 0 or t[-1] > tmax:
                raise InvalidParameterError("points outside window")

    @property
    def n(self) -> int:
        return int(self.x.size)

    def restrict(self, a: float, b: float, t_lo: float, t_hi: float) -> "PlanarPointSet":
        """Points with a <= x <= b and t_lo < t <= t_hi, re-windowed."""
        keep = (self.x >= a) & (self.x <= b) & (self.t > t_lo) & (self.t <= t_hi)
        x, t = self.x[keep], self.t[keep]
        if t_lo > 0:
            t = t - t_lo
        return PlanarPointSet(x, t, (a, b, t_hi - t_lo))

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("x,t\n")
            for xv, tv in zip(self.x, self.t):
                f.write(f"{float(xv)!r},{float(tv)!r}\n")

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump([[float(a), float(b)] for a, b in zip(self.x, self.t)], f)


# one dual point per recorded jump of a driving configuration; structurally a
# planar point set, kept as an alias for vocabulary
DualPointSet = PlanarPointSet


def _draw_distinct_uniform(gen, n, lo, hi):
    """n uniforms on (lo, hi), redrawn until pairwise distinct."""
    vals = gen.uniform(lo, hi, size=n)
    for _ in range(_MAX_REDRAWS):
        s = np.sort(vals)
        if n < 2 or np.all(np.diff(s) > 0):
            return vals
        # redraw only the colliding entries
        uniq, counts = np.unique(vals, return_counts=True)
        bad = np.isin(vals, uniq[counts > 1])
        vals = vals.copy()
        vals[bad] = gen.uniform(lo, hi, size=int(bad.sum()))
    raise RuntimeError("could not resolve coordinate collisions")


def sample_poisson_line(rate: float, window: tuple[float, float], stream: RngStream) -> LinePointSet:
    """Homogeneous Poisson sample of the given intensity on [a, b]."""
    a, b = float(window[0]), float(window[1])
    if not rate > 0:
        raise InvalidParameterError(f"rate must be positive, got {rate}")
    if not b > a:
        raise InvalidParameterError(f"window must be non-degenerate, got {window}")
    gen = stream.generator()
    n = int(gen.poisson(rate * (b - a)))
    pos = np.sort(_draw_distinct_uniform(gen, n, a, b))
    return LinePointSet(pos, float(rate), (a, b))


def sample_planar_unit_poisson(window: tuple[float, float, float], stream: RngStream) -> PlanarPointSet:
    """Unit-intensity planar Poisson sample on [a, b] x (0, t_max]."""
    a, b, tmax = (float(v) for v in window)
    if not (b > a and tmax > 0):
        raise InvalidParameterError(f"window must have positive area, got {window}")
    gen = stream.generator()
    # time coordinates via exponential gaps: already sorted, same law
    width = b - a
    est = int(width * tmax + 8.0 * math.sqrt(width * tmax + 1.0) + 16.0)
    t = np.cumsum(gen.exponential(1.0 / width, size=est))
    while t.size and t[-1] <= tmax:  # tail short with the head-room above
        t = np.concatenate([t, t[-1] + np.cumsum(gen.exponential(1.0 / width, size=est))])
    t = t[t <= tmax]
    if t.size > 1 and np.any(np.diff(t) <= 0):
        # float-precision tie in the gap cumsum; draw the slow way instead
        n = int(gen.poisson(width * tmax))
        t = np.sort(_draw_distinct_uniform(gen, n, 0.0, tmax))
    x = _draw_distinct_uniform(gen, t.size, a, b)
    while np.any(t == 0.0):
        t[t == 0.0] = gen.uniform(0.0, tmax, size=int((t == 0.0).sum()))
    return PlanarPointSet(x, t, (a, b, tmax))


def thin_split(points: LinePointSet, keep_prob: float, stream: RngStream):
    """Independent thinning; returns (kept, removed) with split rates."""
    if not 0.0 <= keep_prob <= 1.0:
        raise InvalidParameterError(f"keep_prob must lie in [0, 1], got {keep_prob}")
    gen = stream.generator()
    keep = gen.random(points.n) < keep_prob
    kept = LinePointSet(points.positions[keep], points.rate * keep_prob, points.window)
    removed = LinePointSet(points.positions[~keep], points.rate * (1.0 - keep_prob), points.window)
    return kept, removed


def _merge_planar(parts, window):
    xs = np.concatenate([p.x for p in parts]) if parts else np.empty(0)
    ts = np.concatenate([p.t for p in parts]) if parts else np.empty(0)
    order = np.argsort(ts)
    return PlanarPointSet(xs[order], ts[order], window)


def extend_planar(existing: PlanarPointSet, larger: tuple[float, float, float], stream: RngStream) -> PlanarPointSet:
    """Extend a planar sample to a larger rectangle without resampling it.

    The restriction of the result to `existing.window` is `existing` exactly;
    the new region is drawn independently, so the union is again a valid
    unit-intensity sample on `larger`.
    """
    a0, b0, t0 = existing.window
    a1, b1, t1 = (float(v) for v in larger)
    if a1 > a0 or b1 < b0 or t1 < t0:
        raise InvalidParameterError("larger window must contain the existing one")
    if (a1, b1, t1) == (a0, b0, t0):
        return existing
    parts = [existing]
    for _ in range(_MAX_REDRAWS):
        new = list(parts)
        if a1 < a0:
            new.append(sample_planar_unit_poisson((a1, a0, t1), stream.child("extend-left")))
            # shift: slab sampled on its own [a1, a0] x (0, t1]; positions already global
        if b1 > b0:
            new.append(sample_planar_unit_poisson((b0, b1, t1), stream.child("extend-right")))
        if t1 > t0:
            top = sample_planar_unit_poisson((a0, b0, t1 - t0), stream.child("extend-top"))
            new.append(PlanarPointSet(top.x, top.t + t0, (a0, b0, t1)))
        merged = _merge_planar(new, (a1, b1, t1))
        xs = np.sort(merged.x)
        if merged.n < 2 or (np.all(np.diff(xs) > 0) and np.all(np.diff(merged.t) > 0)):
            return merged
        stream = stream.child("extend-redraw")  # cross-slab collision, effectively never
    raise RuntimeError("could not resolve collisions while extending window")


def extend_line(existing: LinePointSet, larger: tuple[float, float], stream: RngStream) -> LinePointSet:
    """Extend a line sample to a larger interval, keeping the original points."""
    a0, b0 = existing.window
    a1, b1 = (float(v) for v in larger)
    if a1 > a0 or b1 < b0:
        raise InvalidParameterError("larger window must contain the existing one")
    parts = [existing.positions]
    if a1 < a0:
        parts.insert(0, sample_poisson_line(existing.rate, (a1, a0), stream.child("extend-left")).positions)
    if b1 > b0:
        parts.append(sample_poisson_line(existing.rate, (b0, b1), stream.child("extend-right")).positions)
    pos = np.concatenate(parts)
    return LinePointSet(np.sort(pos), existing.rate, (a1, b1))
