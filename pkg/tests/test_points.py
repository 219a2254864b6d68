import numpy as np
import pytest

from hamlab.errors import InvalidParameterError
from hamlab.points import (
    extend_line,
    extend_planar,
    sample_planar_unit_poisson,
    sample_poisson_line,
    thin_split,
)
from hamlab.rng import RngStream
from hamlab.stats import chi2_statistic, ks_2samp


def test_degenerate_window_rejected():
    with pytest.raises(InvalidParameterError):
        sample_poisson_line(1.0, (0.0, 0.0), RngStream(1))
    with pytest.raises(InvalidParameterError):
        sample_poisson_line(-1.0, (0.0, 1.0), RngStream(1))
    with pytest.raises(InvalidParameterError):
        sample_planar_unit_poisson((0.0, 5.0, 0.0), RngStream(1))


def test_line_count_mean():
    # Poisson(100) count; 1e4 replicas put the sample mean within [99, 101]
    s = RngStream(123)
    counts = [sample_poisson_line(1.0, (0.0, 100.0), s.child("rep", i)).n for i in range(10_000)]
    assert 99.0 <= np.mean(counts) <= 101.0


def test_line_determinism():
    s = RngStream(42, (("unit", 0),))
    a = sample_poisson_line(1.0, (0.0, 50.0), s)
    b = sample_poisson_line(1.0, (0.0, 50.0), s)
    assert np.array_equal(a.positions, b.positions)


def test_planar_count_mean_and_determinism():
    s = RngStream(7)
    counts = [sample_planar_unit_poisson((0, 10, 10), s.child("rep", i)).n for i in range(10_000)]
    assert 98.0 <= np.mean(counts) <= 102.0
    a = sample_planar_unit_poisson((0, 10, 10), s.child("det"))
    b = sample_planar_unit_poisson((0, 10, 10), s.child("det"))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.t, b.t)


def test_planar_invariants():
    p = sample_planar_unit_poisson((-5, 5, 20), RngStream(3))
    assert np.all(np.diff(p.t) > 0)
    assert np.unique(p.x).size == p.n


def test_thin_split_edge_probs():
    pts = sample_poisson_line(2.0, (0.0, 60.0), RngStream(5))
    kept, removed = thin_split(pts, 1.0, RngStream(6))
    assert np.array_equal(kept.positions, pts.positions) and removed.n == 0
    kept, removed = thin_split(pts, 0.0, RngStream(6))
    assert kept.n == 0 and np.array_equal(removed.positions, pts.positions)
    with pytest.raises(InvalidParameterError):
        thin_split(pts, 1.5, RngStream(6))


def test_thin_split_mean():
    s = RngStream(11)
    counts = []
    for i in range(10_000):
        pts = sample_poisson_line(2.0, (0.0, 100.0), s.child("base", i))
        kept, _ = thin_split(pts, 0.5, s.child("thin", i))
        counts.append(kept.n)
    assert 98.0 <= np.mean(counts) <= 102.0


def test_thin_split_partition():
    pts = sample_poisson_line(2.0, (0.0, 50.0), RngStream(8))
    kept, removed = thin_split(pts, 0.4, RngStream(9))
    merged = np.sort(np.concatenate([kept.positions, removed.positions]))
    assert np.array_equal(merged, pts.positions)


def test_extend_planar_identity_and_error():
    base = sample_planar_unit_poisson((0, 5, 5), RngStream(2))
    same = extend_planar(base, (0, 5, 5), RngStream(3))
    assert same is base
    with pytest.raises(InvalidParameterError):
        extend_planar(base, (1, 5, 5), RngStream(3))


def test_extend_planar_preserves_existing():
    s = RngStream(13)
    base = sample_planar_unit_poisson((0, 5, 5), s.child("base"))
    big = extend_planar(base, (-5, 9, 8), s.child("ext"))
    inner = big.restrict(0, 5, 0, 5)
    assert np.array_equal(np.sort(inner.x), np.sort(base.x))
    assert np.array_equal(inner.t, base.t)


def test_extend_planar_disjoint_counts_independent():
    s = RngStream(17)
    left = np.empty(10_000)
    right = np.empty(10_000)
    for i in range(10_000):
        base = sample_planar_unit_poisson((0, 4, 4), s.child("b", i))
        big = extend_planar(base, (-4, 4, 4), s.child("e", i))
        left[i] = np.sum(big.x < 0)
        right[i] = base.n
    corr = np.corrcoef(left, right)[0, 1]
    assert abs(corr) <= 3.0 / np.sqrt(10_000)


def test_extend_line_preserves_and_extends():
    s = RngStream(19)
    base = sample_poisson_line(1.5, (0.0, 10.0), s.child("base"))
    big = extend_line(base, (-10.0, 20.0), s.child("ext"))
    inner = big.positions[(big.positions >= 0) & (big.positions <= 10)]
    assert np.array_equal(inner, base.positions)
    assert big.window == (-10.0, 20.0)


def test_restriction_consistency_ks():
    # sampling on W then restricting matches sampling on W' directly
    s = RngStream(23)
    a = np.empty(1000)
    b = np.empty(1000)
    for i in range(1000):
        big = sample_poisson_line(1.0, (0.0, 60.0), s.child("big", i))
        a[i] = big.restrict(10.0, 40.0).n
        b[i] = sample_poisson_line(1.0, (10.0, 40.0), s.child("small", i)).n
    d, p = ks_2samp(a, b)
    assert p > 0.01


def test_serialization(tmp_path):
    pts = sample_poisson_line(1.0, (0.0, 20.0), RngStream(29))
    csv = tmp_path / "pts.csv"
    pts.to_csv(csv)
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "x" and len(lines) == pts.n + 1
    planar = sample_planar_unit_poisson((0, 5, 5), RngStream(31))
    j = tmp_path / "pts.json"
    planar.to_json(j)
    import json

    data = json.loads(j.read_text())
    assert len(data) == planar.n and all(len(row) == 2 for row in data)


def test_thin_split_disjoint_independence():
    # kept/removed counts over disjoint intervals behave as independent Poissons
    s = RngStream(41)
    kept_a = np.empty(4000)
    removed_a = np.empty(4000)
    kept_b = np.empty(4000)
    for i in range(4000):
        pts = sample_poisson_line(2.0, (0.0, 40.0), s.child("base", i))
        kept, removed = thin_split(pts, 0.5, s.child("thin", i))
        kept_a[i] = kept.count(0.0, 20.0)
        removed_a[i] = removed.count(0.0, 20.0)
        kept_b[i] = kept.count(20.0, 40.0)
    n = 4000
    assert abs(np.corrcoef(kept_a, removed_a)[0, 1]) <= 3.0 / np.sqrt(n)
    assert abs(np.corrcoef(kept_a, kept_b)[0, 1]) <= 3.0 / np.sqrt(n)
    # marginal law: Poisson(20) via a coarse chi-square
    from scipy import stats as sp_stats

    edges = [0, 14, 17, 20, 23, 26, 1000]
    counts = np.histogram(kept_a, bins=edges)[0]
    cdf = sp_stats.poisson(20.0).cdf
    probs = np.diff([0] + [cdf(e - 1) for e in edges[1:-1]] + [1.0])
    stat, p = chi2_statistic(counts, probs)
    assert p > 0.01
