"""Finite unions of closed intervals inside a bounded window."""

import numpy as np


class IntervalUnion:
    """Disjoint, sorted closed intervals ``[lo_k, hi_k]`` within ``[a, b]``.

    Overlapping or touching inputs are merged; empty and degenerate pieces
    (after clipping) are dropped.
    """

    def __init__(self, lo=(), hi=(), window=(0.0, 1.0)):
        a, b = map(float, window)
        lo = np.clip(np.asarray(lo, dtype=np.float64).reshape(-1), a, b)
        hi = np.clip(np.asarray(hi, dtype=np.float64).reshape(-1), a, b)
        keep = hi > lo
        lo, hi = lo[keep], hi[keep]
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        if lo.size:
            reach = np.maximum.accumulate(hi)
            # a new component starts where lo exceeds everything seen so far
            start = np.ones(lo.size, dtype=bool)
            start[1:] = lo[1:] > reach[:-1]
            idx = np.flatnonzero(start)
            ends = np.append(idx[1:], lo.size) - 1
            lo, hi = lo[idx], reach[ends]
        self.lo = lo
        self.hi = hi
        self.window = (a, b)

    @classmethod
    def from_centers(cls, centers, radii, window=(0.0, 1.0)):
        centers = np.asarray(centers, dtype=np.float64)
        radii = np.asarray(radii, dtype=np.float64)
        return cls(centers - radii, centers + radii, window)

    def __len__(self):
        return self.lo.size

    def __iter__(self):
        return iter(zip(self.lo.tolist(), self.hi.tolist()))

    def __repr__(self):
        return f"IntervalUnion({list(self)!r})"

    def __eq__(self, other):
        return (
            isinstance(other, IntervalUnion)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    @property
    def is_empty(self):
        return self.lo.size == 0

    def length(self):
        return float(np.sum(self.hi - self.lo))

    def coverage(self):
        """Fraction of the window covered."""
        a, b = self.window
        return self.length() / (b - a)

    def contains(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.lo, t, side="right") - 1
        ok = k >= 0
        kk = np.where(ok, k, 0)
        return ok & (t <= self.hi[kk]) if self.lo.size else np.zeros(t.shape, dtype=bool)

    def union(self, other):
        return IntervalUnion(np.concatenate([self.lo, other.lo]), np.concatenate([self.hi, other.hi]), self.window)

    def _combine(self, other, keep_fn):
        edges = np.unique(np.concatenate([self.lo, self.hi, other.lo, other.hi]))
        mid = 0.5 * (edges[:-1] + edges[1:])
        keep = keep_fn(self.contains(mid), other.contains(mid))
        return IntervalUnion(edges[:-1][keep], edges[1:][keep], self.window)

    def difference(self, other):
        """Closure of ``self`` minus ``other``."""
        if self.is_empty or other.is_empty:
            return IntervalUnion(self.lo, self.hi, self.window)
        return self._combine(other, lambda a, b: a & ~b)

    def intersection(self, other):
        if self.is_empty or other.is_empty:
            return IntervalUnion(window=self.window)
        return self._combine(other, lambda a, b: a & b)

    def box_count(self, scale):
        """Number of grid cells ``[a + k s, a + (k+1) s)`` meeting the union."""
        if self.lo.size == 0:
            return 0
        a, b = self.window
        # cell indices stay in float64, exact while below 2^53
        last = np.ceil((b - a) / scale - 1e-12) - 1.0
        k_lo = np.floor((self.lo - a) / scale)
        k_hi = np.minimum(np.floor((self.hi - a) / scale), last)
        prev = np.concatenate([[-1.0], np.maximum.accumulate(k_hi)[:-1]])
        first = np.maximum(k_lo, prev + 1.0)
        return int(np.sum(np.maximum(k_hi - first + 1.0, 0.0)))
