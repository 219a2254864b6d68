"""Seeded Poisson sampling, thinning, and lazy window extension.

Every sampler is a pure function of (parameters, stream): rerunning this
script prints byte-identical numbers.
"""

import numpy as np

from hamlab import (
    RngStream,
    extend_planar,
    sample_planar_unit_poisson,
    sample_poisson_line,
    thin_split,
)

stream = RngStream(2024)

line = sample_poisson_line(1.5, (0.0, 40.0), stream.child("line"))
print(f"line sample: {line.n} points at rate 1.5 on [0, 40] "
      f"(expected about {1.5 * 40:.0f})")
print("first five:", np.round(line.positions[:5], 4))

kept, removed = thin_split(line, 2.0 / 3.0, stream.child("thin"))
print(f"thinned with keep probability 2/3: kept {kept.n} (rate {kept.rate:.2f}), "
      f"removed {removed.n} (rate {removed.rate:.2f})")

plane = sample_planar_unit_poisson((0.0, 10.0, 10.0), stream.child("plane"))
print(f"\nplanar sample: {plane.n} epochs on [0,10] x (0,10] (expected about 100)")

bigger = extend_planar(plane, (-10.0, 10.0, 10.0), stream.child("extend"))
inner = bigger.restrict(0.0, 10.0, 0.0, 10.0)
print(f"extended to [-10,10]: {bigger.n} epochs; the original region is unchanged "
      f"({np.array_equal(np.sort(inner.x), np.sort(plane.x))})")
