"""Particle configurations: sorted positions with class labels and identities.

A configuration is a counting measure on a window.  The signed counting
function nu(x) counts atoms in (0, x] for x > 0, is 0 at x = 0, and equals
minus the count in (x, 0] for x < 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, UncertifiedRegionError
from .points import LinePointSet, sample_poisson_line, thin_split
from .rng import RngStream

CLASS_FIRST = 1
CLASS_SECOND = 2


@dataclass(frozen=True)
class ParticleConfig:
    positions: np.ndarray
    classes: np.ndarray
    ids: np.ndarray
    window: tuple[float, float]

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        cls = np.asarray(self.classes, dtype=np.int8)
        ids = np.asarray(self.ids, dtype=np.int64)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "classes", cls)
        object.__setattr__(self, "ids", ids)
        if not (pos.size == cls.size == ids.size):
            raise InvalidParameterError("positions/classes/ids must align")
        if pos.size:
            if np.any(np.diff(pos) <= 0):
                raise InvalidParameterError("positions must be strictly increasing")
            a, b = self.window
            if pos[0] < a or pos[-1] > b:
                raise InvalidParameterError("positions outside window")
        if ids.size and np.unique(ids).size != ids.size:
            raise InvalidParameterError("ids must be unique")

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def select(self, particle_class: int) -> np.ndarray:
        return self.positions[self.classes == particle_class]

    def index_of_id(self, particle_id: int) -> int:
        idx = np.nonzero(self.ids == particle_id)[0]
        if idx.size != 1:
            raise InvalidParameterError(f"id {particle_id} not present exactly once")
        return int(idx[0])


def from_positions(positions, window, particle_class=CLASS_FIRST, id_start=0) -> ParticleConfig:
    pos = np.sort(np.asarray(positions, dtype=np.float64))
    n = pos.size
    return ParticleConfig(
        pos,
        np.full(n, particle_class, dtype=np.int8),
        np.arange(id_start, id_start + n, dtype=np.int64),
        (float(window[0]), float(window[1])),
    )


def from_line_points(points: LinePointSet, particle_class=CLASS_FIRST, id_start=0) -> ParticleConfig:
    return from_positions(points.positions, points.window, particle_class, id_start)


def profile_count(config: ParticleConfig, x: float, classes: int | None = None) -> int:
    """Signed counting function nu(x); optionally restricted to one class."""
    a, b = config.window
    if x < a or x > b:
        raise UncertifiedRegionError(f"x={x} outside window {config.window}")
    pos = config.positions if classes is None else config.select(classes)
    return signed_count(pos, x)


def signed_count(sorted_positions: np.ndarray, x: float) -> int:
    """nu(x) for a bare sorted position array (no window check)."""
    if x > 0:
        lo = np.searchsorted(sorted_positions, 0.0, side="right")
        hi = np.searchsorted(sorted_positions, x, side="right")
        return int(hi - lo)
    if x == 0:
        return 0
    lo = np.searchsorted(sorted_positions, x, side="right")
    hi = np.searchsorted(sorted_positions, 0.0, side="right")
    return -int(hi - lo)


ORIGIN_ATOM_ID = -1


def stationary_profile(rate: float, window, stream: RngStream) -> ParticleConfig:
    """Poisson(rate) initial configuration, the invariant one-class profile."""
    return from_line_points(sample_poisson_line(rate, window, stream))


def add_origin_atom(config: ParticleConfig, particle_class=CLASS_FIRST) -> ParticleConfig:
    """Insert an extra particle at 0 (id ORIGIN_ATOM_ID)."""
    a, b = config.window
    if not (a < 0.0 < b):
        raise InvalidParameterError("window must contain the origin in its interior")
    if np.any(config.positions == 0.0):
        raise InvalidParameterError("configuration already has an atom at 0")
    k = int(np.searchsorted(config.positions, 0.0))
    return ParticleConfig(
        np.insert(config.positions, k, 0.0),
        np.insert(config.classes, k, particle_class),
        np.insert(config.ids, k, ORIGIN_ATOM_ID),
        config.window,
    )


def shock_profile(rho: float, lam: float, window, stream: RngStream) -> ParticleConfig:
    """Density rho to the left of the origin, lam to the right (rho < lam)."""
    a, b = float(window[0]), float(window[1])
    if not 0 < rho < lam:
        raise InvalidParameterError(f"need 0 < rho < lam, got rho={rho}, lam={lam}")
    if not (a < 0.0 < b):
        raise InvalidParameterError("window must straddle the origin")
    left = sample_poisson_line(rho, (a, 0.0), stream.child("left"))
    right = sample_poisson_line(lam, (0.0, b), stream.child("right"))
    pos = np.concatenate([left.positions, right.positions])
    pos = pos[pos != 0.0]
    return from_positions(pos, (a, b))


def thinned_pair(rho: float, lam: float, window, stream: RngStream):
    """Coupled (nu_rho, nu_bar, nu_lam): a Poisson(lam) sample split by
    keeping each point with probability rho/lam."""
    if not 0 < rho < lam:
        raise InvalidParameterError(f"need 0 < rho < lam, got rho={rho}, lam={lam}")
    base = sample_poisson_line(lam, window, stream.child("base"))
    kept, removed = thin_split(base, rho / lam, stream.child("thin"))
    first = from_line_points(kept)
    second = from_line_points(removed, CLASS_SECOND, id_start=first.n)
    full = from_line_points(base)
    return first, second, full


def merge_two_class(first: ParticleConfig, second: ParticleConfig) -> ParticleConfig:
    """Combine disjoint first/second-class configurations on one window."""
    if first.window != second.window:
        raise InvalidParameterError("windows must match")
    pos = np.concatenate([first.positions, second.positions])
    cls = np.concatenate([np.full(first.n, CLASS_FIRST, np.int8), np.full(second.n, CLASS_SECOND, np.int8)])
    ids = np.concatenate([first.ids, second.ids])
    if np.unique(ids).size != ids.size:
        raise InvalidParameterError("first/second id sets must be disjoint")
    order = np.argsort(pos)
    return ParticleConfig(pos[order], cls[order], ids[order], first.window)
