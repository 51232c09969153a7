"""Jump-band statistics, covering sets, approximation indices and spectra.

Sizes are absolute jump norms ``|dv|``; band ``m`` collects the jumps with
``2^(-m-1) < |dv| <= 2^(-m)``. Finite-resolution proxies replace the
limsup objects: the approximation index of ``t`` is the largest ``delta``
with ``|t - s| <= |dv_s|^delta`` over the jumps of a band window
``[m_lo, m_hi]``.
"""

from dataclasses import dataclass
import math

import numpy as np
from numba import njit

from .intervals import IntervalUnion

NEG_INF = float("-inf")
UNDETERMINED = float("nan")
DELTA_CAP = 64.0
# boxes finer than 2^-48 are below the resolution of double-precision times
MAX_SCALE_BITS = 48


def _as_list(paths):
    return [paths] if hasattr(paths, "times") else list(paths)


# -- jump bands ---------------------------------------------------------------


def jump_bands(path, m):
    """Index arrays ``(J_m, Jtilde_m)`` of the jumps with |dv| <= 2^-m and
    of the band 2^(-m-1) < |dv| <= 2^-m."""
    size = path.jump_norms
    top = 2.0**-m
    small = (size > 0.0) & (size <= top)
    band = small & (size > 0.5 * top)
    return np.flatnonzero(small), np.flatnonzero(band)


def band_index(sizes):
    """Band label m of each jump size, 2^(-m-1) < |dv| <= 2^-m."""
    sizes = np.asarray(sizes, dtype=np.float64)
    m = np.floor(-np.log2(sizes)).astype(np.int64)
    # guard against log2 rounding at the band edges
    m -= (np.ldexp(1.0, -m) < sizes).astype(np.int64)
    m += (np.ldexp(1.0, -m - 1) >= sizes).astype(np.int64)
    return m


def resolved_band(path, theta_min=None):
    """Largest band whose jumps cannot be cut off by the angular cutoff.

    A jump of a pair with relative speed ``d`` is at least
    ``sin(theta_min/2) d``; with ``d`` bounded by the largest relative speed
    seen on the path (``kappa / theta``), bands below that floor are complete.
    """
    if len(path) == 0:
        return None
    if theta_min is None:
        theta_min = float(path.meta["theta_min"])
    d_max = float(np.max(path.kappa / path.theta))
    floor = math.sin(0.5 * theta_min) * d_max
    return int(math.floor(-math.log2(floor))) - 1


def covering_union(path, delta, m, band_only=False):
    """A_delta^m (or its band version): union of [s - |dv|^delta, s + |dv|^delta]."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    small, band = jump_bands(path, m)
    sel = band if band_only else small
    radii = path.jump_norms[sel] ** delta
    return IntervalUnion.from_centers(path.times[sel], radii, (0.0, path.horizon))


def coverage_fraction(path, delta, m):
    return covering_union(path, delta, m).coverage()


# -- approximation index and velocity exponents ------------------------------


@njit(cache=True, nogil=True)
def _approx_index(times, logsize, queries, out, witness):
    n = times.size
    if n == 0:
        return
    # the least negative log-size bounds every ratio from above
    lmax = logsize.max()
    for q in range(queries.size):
        t = queries[q]
        best = 0.0
        w = -1
        p = np.searchsorted(times, t)
        for direction in (1, -1):
            k = p if direction == 1 else p - 1
            while 0 <= k < n:
                dist = abs(t - times[k])
                if dist == 0.0:
                    best = np.inf
                    w = k
                    break
                ld = math.log(dist)
                if ld >= 0.0 or ld / lmax <= best:
                    break
                r = ld / logsize[k]
                if r > best:
                    best = r
                    w = k
                k += direction
            if best == np.inf:
                break
        out[q] = best
        witness[q] = w


def approximation_index(path, t, m_lo, m_hi, delta_cap=DELTA_CAP, return_witness=False):
    """Finite-resolution approximation index of the times ``t``.

    For every jump ``s`` of the bands ``m_lo..m_hi`` the exponent solving
    ``|t - s| = |dv_s|^delta`` is ``log|t - s| / log|dv_s|``; the index is
    the maximum of these, clamped to ``[0, delta_cap]``. At a jump time of
    the path the index is ``delta_cap``. Times with no jump in the window
    get ``nan`` (undetermined).
    """
    _check_window(m_lo, m_hi)
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    size = path.jump_norms
    sel = window_jumps(path, m_lo, m_hi)
    out = np.full(t.shape, np.nan)
    wit = np.full(t.shape, -1, dtype=np.int64)
    if sel.size:
        flat_out = np.empty(t.size)
        flat_wit = np.empty(t.size, dtype=np.int64)
        _approx_index(path.times[sel], np.log(size[sel]), t.ravel(), flat_out, flat_wit)
        out = np.minimum(flat_out.reshape(t.shape), delta_cap)
        wit = np.where(flat_wit >= 0, sel[np.maximum(flat_wit, 0)], -1).reshape(t.shape)
    at_jump = is_jump_time(path, t)
    out = np.where(at_jump, delta_cap, out)
    if return_witness:
        return (out[0], wit[0]) if scalar else (out, wit)
    return float(out[0]) if scalar else out


def _check_window(m_lo, m_hi):
    if not 1 <= m_lo < m_hi:
        raise ValueError("band window needs 1 <= m_lo < m_hi")


def window_jumps(path, m_lo, m_hi):
    """Indices of the jumps in bands m_lo..m_hi."""
    size = path.jump_norms
    return np.flatnonzero((size > 2.0 ** (-m_hi - 1)) & (size <= 2.0**-m_lo))


def is_jump_time(path, t):
    t = np.asarray(t, dtype=np.float64)
    jt = path.times[path.jump_norms > 0]
    if jt.size == 0:
        return np.zeros(t.shape, dtype=bool)
    k = np.clip(np.searchsorted(jt, t), 0, jt.size - 1)
    return jt[k] == t


def holder_velocity(path, t, m_lo, m_hi, delta_cap=DELTA_CAP):
    """Velocity exponent estimate 1/delta_t; 0 at jump times, nan if undetermined."""
    d = approximation_index(path, t, m_lo, m_hi, delta_cap)
    return _reciprocal(d, delta_cap)


def _reciprocal(d, delta_cap=DELTA_CAP):
    d = np.asarray(d, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(d >= delta_cap, 0.0, 1.0 / d)
    return float(h) if h.ndim == 0 else h


# -- jump counting -----------------------------------------------------------


def large_jump_count(path, m, r=0.0, t=None):
    """H^m_[r,t]: number of jumps of size >= 2^-m at times in [r, t]."""
    if t is None:
        t = path.horizon
    size = path.jump_norms
    mask = (size >= 2.0**-m) & (path.times >= r) & (path.times <= t)
    return int(np.count_nonzero(mask))


def jump_scaling(paths, ms):
    """Mean of H^m over ``paths`` for each m, with the least-squares line of
    log2(mean) against m.

    Returns ``(counts, slope, intercept)``; the line is undetermined when
    fewer than two counts are positive.
    """
    ms = np.asarray(ms, dtype=np.int64)
    paths = _as_list(paths)
    counts = np.zeros(ms.size)
    if paths:
        counts = np.mean([[large_jump_count(p, int(m)) for m in ms] for p in paths], axis=0)
    ok = counts > 0
    if ok.sum() < 2:
        return counts, UNDETERMINED, UNDETERMINED
    slope, intercept = np.polyfit(ms[ok], np.log2(counts[ok]), 1)
    return counts, float(slope), float(intercept)


def pair_gap_count(paths, m, delta, epsilon):
    """N_m^{delta,eps}: consecutive gaps <= 2^(-m delta) between the jumps of
    size >= 2^(-m(1+eps)); the first gap is measured from time 0.
    Summed over ``paths`` when a sequence is given."""
    total = 0
    for path in _as_list(paths):
        big = path.times[path.jump_norms >= 2.0 ** (-m * (1.0 + epsilon))]
        gaps = np.diff(np.concatenate([[0.0], big]))
        total += int(np.count_nonzero(gaps <= 2.0 ** (-m * delta)))
    return total


# -- truncated increments ----------------------------------------------------


@njit(cache=True, nogil=True)
def _window_sup(times, csum, width):
    n = times.size
    best = 0.0
    for i in range(n):
        for j in range(i, n):
            if times[j] - times[i] >= width:
                break
            dx = csum[j + 1, 0] - csum[i, 0]
            dy = csum[j + 1, 1] - csum[i, 1]
            dz = csum[j + 1, 2] - csum[i, 2]
            s = math.sqrt(dx * dx + dy * dy + dz * dz)
            if s > best:
                best = s
    return best


def truncated_increment_sup(path, m, delta):
    """sup over |x - y| <= 2^-m of |V^{B,m/delta}_x - V^{B,m/delta}_y|.

    The truncated path keeps only the jumps with |dv| <= 2^(-m/delta). Its
    increment over (x, y] is the sum of a run of consecutive kept jumps,
    and such a run fits in a window of width w iff its time span is < w.
    """
    keep = (path.jump_norms > 0) & (path.jump_norms <= 2.0 ** (-m / delta))
    times = path.times[keep]
    if times.size == 0:
        return 0.0
    csum = np.vstack([np.zeros(3), np.cumsum(path.dv[keep], axis=0)])
    return float(_window_sup(times, csum, 2.0**-m))


def z_total(path, m):
    """Z_1^{B,m}: sum of kappa over the events with kappa/4 <= 2^-m."""
    k = path.kappa
    return float(np.sum(k[k / 4.0 <= 2.0**-m]))


# -- box counting ------------------------------------------------------------


def box_count(obj, scale, window=(0.0, 1.0)):
    if isinstance(obj, IntervalUnion):
        return obj.box_count(scale)
    pts = np.asarray(obj, dtype=np.float64).reshape(-1)
    if pts.size == 0:
        return 0
    a, b = window
    n_cells = int(np.ceil((b - a) / scale - 1e-12))
    cells = np.minimum(np.floor((pts - a) / scale).astype(np.int64), n_cells - 1)
    return int(np.unique(cells).size)


def box_dimension(obj, scales, window=(0.0, 1.0)):
    """Least-squares slope of log N(scale) against log(1/scale).

    ``obj`` is an :class:`IntervalUnion` or an array of points. The empty
    set returns ``-inf``.
    """
    scales = np.asarray(scales, dtype=np.float64)
    if scales.size < 2:
        raise ValueError("need at least two scales")
    counts = np.array([box_count(obj, s, window) for s in scales])
    if np.all(counts == 0):
        return NEG_INF
    if np.any(counts == 0):
        return UNDETERMINED
    return float(np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0])


def dyadic_scales(j_lo, j_hi):
    return 2.0 ** -np.arange(j_lo, j_hi + 1, dtype=np.float64)


# -- level sets and spectra --------------------------------------------------


def superlevel_set(path, delta, m_lo, m_hi):
    """{t : delta_hat_t >= delta} as an exact interval union.

    delta_hat_t >= delta iff |t - s| <= |dv_s|^delta for some jump s of the
    window, so this is the finite covering set built from those jumps.
    """
    sel = window_jumps(path, m_lo, m_hi)
    radii = path.jump_norms[sel] ** delta
    return IntervalUnion.from_centers(path.times[sel], radii, (0.0, path.horizon))


def level_set(path, h, tolerance, m_lo, m_hi, delta_cap=DELTA_CAP):
    """Closure of {t : |h_hat_t - h| <= tolerance} for the velocity exponent.

    Returned as ``(union, delta_lo, delta_hi)``: the times whose index lies
    in [delta_lo, delta_hi] with delta_lo = 1/(h + tol), delta_hi = 1/(h - tol).
    Jump times (h_hat = 0) are isolated points and are not part of the union.
    """
    _check_window(m_lo, m_hi)
    d_lo = 1.0 / (h + tolerance)
    d_hi = 1.0 / (h - tolerance) if h > tolerance else math.inf
    outer = superlevel_set(path, d_lo, m_lo, m_hi)
    if d_hi >= delta_cap:
        return outer, d_lo, d_hi
    return outer.difference(superlevel_set(path, d_hi, m_lo, m_hi)), d_lo, d_hi


def band_matched_counts(path, region, delta, m_lo, m_hi):
    """Box counts N_k, k = m_lo..m_hi, at the scale 2^(-k delta) of band k.

    N_k counts the boxes meeting ``region`` within the band-k intervals of
    radius |dv|^delta. For a limsup set of dimension ``nu/delta`` these
    counts grow like 2^(k nu), the band population, until they saturate.
    """
    counts = np.zeros(m_hi - m_lo + 1)
    for i, k in enumerate(range(m_lo, m_hi + 1)):
        if k * delta > MAX_SCALE_BITS:
            break
        band = covering_union(path, delta, k, band_only=True)
        if band.is_empty or region.is_empty:
            continue
        counts[i] = band.intersection(region).box_count(2.0 ** (-k * delta))
    return counts


def covering_dimension(paths, delta, m_lo, m_hi):
    """Dimension estimate of the covering set A_delta at finite resolution.

    Band k of A_delta is observed at its own scale 2^(-k delta); the slope
    of log(mean N_k) against k delta log 2 estimates nu/delta.
    """
    _check_window(m_lo, m_hi)
    counts = [band_matched_counts(p, _full(p), delta, m_lo, m_hi) for p in _as_list(paths)]
    return _matched_slope(np.mean(counts, axis=0), delta, m_lo)


def _matched_slope(counts, delta, m_lo, min_bands=3):
    k = m_lo + np.arange(counts.size)
    ok = counts > 0
    if not ok.any():
        return NEG_INF
    if ok.sum() < min_bands:
        return UNDETERMINED
    return float(np.polyfit(k[ok] * delta * math.log(2.0), np.log(counts[ok]), 1)[0])


@dataclass
class SpectrumEstimate:
    h: np.ndarray
    d_hat: np.ndarray
    d_theory: np.ndarray
    n_samples: np.ndarray
    nu: float
    kind: str = "velocity"

    def rows(self):
        return list(zip(self.h.tolist(), self.d_hat.tolist(), self.d_theory.tolist(), self.n_samples.tolist()))


def theoretical_spectrum(h, nu, kind="velocity"):
    """nu h on [0, 1/nu] (velocity) or nu (h - 1) on [1, 1 + 1/nu] (position); -inf elsewhere."""
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    h = np.asarray(h, dtype=np.float64)
    if kind == "velocity":
        out = np.where((h >= 0.0) & (h <= 1.0 / nu), nu * h, NEG_INF)
    elif kind == "position":
        out = np.where((h >= 1.0) & (h <= 1.0 + 1.0 / nu), nu * (h - 1.0), NEG_INF)
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    return float(out) if out.ndim == 0 else out


def empirical_spectrum(paths, h_grid, m_lo=4, m_hi=None, tolerance=0.05, kind="velocity",
                       n_queries=1 << 14, min_samples=10, min_bands=3, seed=0):
    """Spectrum estimate (h, d_hat) for the velocity or position exponent.

    Each level set {|h_hat - h| <= tol} is built exactly from the jump data
    and ``n_queries`` uniform times per path are tested against it
    (``n_samples``). An empty level set gives -inf, one hit by fewer than
    ``min_samples`` query times is undetermined. Otherwise d_hat is the
    band-matched dimension of the covering set A_{1/h}, which carries the
    level set up to a set of smaller dimension; the level set itself is too
    thin at finite resolution to be box-counted directly. The h = 0 level
    consists of the jump times and is box-counted as a point set.
    Position exponents of cusp singularities are velocity exponents plus
    one, so ``kind="position"`` evaluates the velocity estimate at h - 1.
    """
    paths = _as_list(paths)
    h_grid = np.asarray(h_grid, dtype=np.float64)
    if h_grid.size and np.any(np.diff(h_grid) <= 0):
        raise ValueError("h grid must be strictly increasing")
    nus = {float(p.meta["nu"]) for p in paths if "nu" in p.meta}
    if len(nus) > 1:
        raise ValueError("paths mix different nu values")
    nu = nus.pop() if nus else float("nan")
    shift = 1.0 if kind == "position" else 0.0
    if m_hi is None:
        bands = [resolved_band(p) for p in paths]
        bands = [b for b in bands if b is not None]
        m_hi = min(bands) if bands else m_lo + 1
    m_hi = max(m_hi, m_lo + 1)
    rng = np.random.default_rng(seed)
    queries = [rng.uniform(0.0, p.horizon, n_queries) for p in paths]
    has_jumps = any(len(window_jumps(p, m_lo, m_hi)) for p in paths)

    d_hat = np.full(h_grid.size, NEG_INF)
    n_samples = np.zeros(h_grid.size, dtype=np.int64)
    for i, hv in enumerate(h_grid - shift):
        if hv < 0.0:
            continue
        if not has_jumps:
            d_hat[i] = UNDETERMINED
            continue
        if hv <= tolerance:
            pts = np.concatenate([p.times[window_jumps(p, m_lo, m_hi)] for p in paths])
            scales = dyadic_scales(MAX_SCALE_BITS - 16, MAX_SCALE_BITS)
            d_hat[i] = max(box_dimension(pts, scales), 0.0)
            continue
        nonempty = False
        for path, q in zip(paths, queries):
            region = level_set(path, hv, tolerance, m_lo, m_hi)[0]
            if not region.is_empty:
                nonempty = True
                n_samples[i] += int(np.count_nonzero(region.contains(q)))
        if not nonempty:
            continue
        if n_samples[i] < min_samples:
            d_hat[i] = UNDETERMINED
            continue
        delta = 1.0 / hv
        counts = np.mean(
            [band_matched_counts(p, _full(p), delta, m_lo, m_hi) for p in paths], axis=0
        )
        est = _matched_slope(counts, delta, m_lo, min_bands)
        d_hat[i] = min(max(est, 0.0), 1.0) if np.isfinite(est) else UNDETERMINED
    if nu == nu:
        theory = np.asarray(theoretical_spectrum(h_grid, nu, kind), dtype=np.float64)
    else:
        theory = np.full(h_grid.size, UNDETERMINED)
    return SpectrumEstimate(h_grid, d_hat, theory, n_samples, nu, kind)


def _full(path):
    return IntervalUnion([0.0], [path.horizon], (0.0, path.horizon))


# -- covering criteria -------------------------------------------------------


def h_m_delta_density(y, m, delta, a, b, d, K, gamma, nu):
    """Intensity density of the points (s, (a theta_s / 4)^delta) of band m.

    (8 pi d^gamma b / (a delta)) beta(4 y^(1/delta) / a) y^(1/delta - 1),
    restricted to y <= (a K 2^(-(m+2)))^delta ^ (a pi / 8)^delta.
    """
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0) or not delta > 0:
        raise ValueError("need y > 0 and delta > 0")
    cut = min((a * K * 2.0 ** (-(m + 2))) ** delta, (a * math.pi / 8.0) ** delta)
    theta = 4.0 / a * y ** (1.0 / delta)
    val = 8.0 * math.pi * d**gamma * b / (a * delta) * theta ** (-1.0 - nu) * y ** (1.0 / delta - 1.0)
    out = np.where(y <= cut, val, 0.0)
    return float(out) if out.ndim == 0 else out


def shepp_diverges(delta, nu):
    """Whether the covering integral diverges (intervals cover [0, 1] a.s.).

    The double integral behaves like t^(1 - nu/delta) near 0, which blows
    up iff delta < nu.
    """
    return bool(delta < nu)
