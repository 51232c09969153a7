import numpy as np
import pytest
from hypothesis import given, strategies as st

from boltzfractal.intervals import IntervalUnion

pairs = st.lists(st.tuples(st.floats(-0.2, 1.2), st.floats(0.0, 0.3)), max_size=15)


def union_of(p):
    lo = [a for a, _ in p]
    hi = [a + w for a, w in p]
    return IntervalUnion(lo, hi)


def test_merge_and_clip():
    u = IntervalUnion([0.5, -0.2, 0.55, 0.9], [0.6, 0.1, 0.7, 1.3])
    assert list(u) == [(0.0, 0.1), (0.5, 0.7), (0.9, 1.0)]
    assert u.length() == pytest.approx(0.4)


def test_touching_merge_and_degenerate_drop():
    u = IntervalUnion([0.1, 0.2, 0.5], [0.2, 0.3, 0.5])
    assert list(u) == [(0.1, 0.3)]


def test_from_centers():
    u = IntervalUnion.from_centers([0.5], [0.1])
    assert list(u) == pytest.approx([(0.4, 0.6)])


def test_contains():
    u = IntervalUnion([0.1, 0.5], [0.2, 0.6])
    assert list(u.contains([0.05, 0.1, 0.15, 0.2, 0.3, 0.55, 0.7])) == [False, True, True, True, False, True, False]
    assert not IntervalUnion().contains(0.5)


def test_set_operations():
    a = IntervalUnion([0.0, 0.5], [0.3, 0.8])
    b = IntervalUnion([0.2], [0.6])
    assert list(a.intersection(b)) == pytest.approx([(0.2, 0.3), (0.5, 0.6)])
    assert list(a.difference(b)) == pytest.approx([(0.0, 0.2), (0.6, 0.8)])
    assert list(a.union(b)) == pytest.approx([(0.0, 0.8)])
    assert a.difference(IntervalUnion()) == a
    assert a.intersection(IntervalUnion()).is_empty


@given(pairs, pairs, st.floats(0.0, 1.0))
def test_set_operations_pointwise(p, q, t):
    a, b = union_of(p), union_of(q)
    ina, inb = bool(a.contains(t)), bool(b.contains(t))
    assert bool(a.union(b).contains(t)) == (ina or inb)
    inter = bool(a.intersection(b).contains(t))
    diff = bool(a.difference(b).contains(t))
    # closures may add boundary points only
    if ina and inb:
        assert inter
    if not (ina and inb) and inter:
        assert np.min(np.abs(np.concatenate([a.lo, a.hi, b.lo, b.hi]) - t)) == 0
    if ina and not inb:
        assert diff
    assert a.intersection(b).length() + a.difference(b).length() == pytest.approx(a.length(), abs=1e-12)


@given(pairs)
def test_normal_form(p):
    u = union_of(p)
    assert np.all(u.hi > u.lo)
    assert np.all(u.lo[1:] > u.hi[:-1])
    assert 0.0 <= u.length() <= 1.0


def test_box_count():
    u = IntervalUnion([0.0], [1.0])
    assert u.box_count(0.125) == 8
    assert IntervalUnion([0.1, 0.6], [0.2, 0.61]).box_count(0.25) == 2
    assert IntervalUnion().box_count(0.1) == 0


@given(pairs, st.integers(1, 12))
def test_box_count_matches_grid(p, j):
    u = union_of(p)
    scale = 2.0**-j
    cells = 0
    for k in range(2**j):
        lo, hi = k * scale, (k + 1) * scale
        # half-open cells [lo, hi), the last one closed
        hit = np.any((u.lo < hi) & (u.hi >= lo)) if k < 2**j - 1 else np.any(u.hi >= lo)
        cells += bool(hit)
    assert u.box_count(scale) == cells


def test_box_count_tiny_scale():
    u = IntervalUnion([0.25], [0.25 + 2.0**-40])
    assert u.box_count(2.0**-44) == 17
