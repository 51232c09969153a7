"""Derivative-of-bump wavelets, exact transforms of jump paths, position exponents.

The bump ``phi(x) = Z exp(-1/(x(1-x)))`` on (0, 1) has derivatives
``phi^(k) = P_k(2x - 1) / (4x(1-x))^(2k) * phi(x)`` with integer
polynomials ``P_k``; ``psi_N = phi^(N)`` has N vanishing moments. Velocity paths are
piecewise constant and position paths piecewise linear, so every transform
below is a finite sum of bump-derivative evaluations.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .errors import DomainError
from .fractal import DELTA_CAP, holder_velocity

CUSP = "cusp"
OSCILLATING = "oscillating"
JUMP_TIME = "jump_time"
UNDETERMINED = "undetermined"
DEFAULT_MARGIN = 0.15
DEFAULT_ORDER = 4

# With y = 2x - 1 and s = 1 - y^2 = 4x(1-x): phi = Z exp(-4/s) and
# phi^(k) = P_k(y) / s^(2k) * phi, where (d/dx = 2 d/dy)
#   P_{k+1} = 2 s^2 P_k' + 8 k y s P_k - 16 y P_k.
# Centering at y = 0 keeps the evaluation well conditioned up to k ~ 13.


def _pmul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _padd(*ps):
    out = [0] * max(len(p) for p in ps)
    for p in ps:
        for i, a in enumerate(p):
            out[i] += a
    return out


@lru_cache(maxsize=None)
def numerator_coefficients(k):
    """Integer coefficients of P_k in powers of y = 2x - 1."""
    if k == 0:
        return (1,)
    p = list(numerator_coefficients(k - 1))
    j = k - 1
    s = [1, 0, -1]
    dp = [i * a for i, a in enumerate(p)][1:] or [0]
    term1 = [2 * c for c in _pmul(_pmul(s, s), dp)]
    term2 = [8 * j * c for c in _pmul([0, 1], _pmul(s, p))]
    term3 = [-16 * c for c in _pmul([0, 1], p)]
    return tuple(_padd(term1, term2, term3))


@lru_cache(maxsize=None)
def _numerator(k):
    return Polynomial([float(c) for c in numerator_coefficients(k)])


@lru_cache(maxsize=1)
def _log_norm():
    val, _ = quad(lambda x: math.exp(-1.0 / (x * (1.0 - x))), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return -math.log(val)


@lru_cache(maxsize=None)
def _log_norm_mp(dps):
    with mpmath.workdps(dps):
        return -mpmath.log(mpmath.quad(lambda x: mpmath.exp(-1 / (x * (1 - x))), [0, 0.5, 1]))


def bump_derivative(x, k=0):
    """phi^(k)(x); zero outside the open interval (0, 1)."""
    if k < 0:
        raise ValueError("derivative order must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    inside = (x > 0.0) & (x < 1.0)
    xi = np.where(inside, x, 0.5)
    s = 4.0 * xi * (1.0 - xi)
    with np.errstate(under="ignore", over="ignore"):
        val = _numerator(k)(2.0 * xi - 1.0) * np.exp(_log_norm() - 4.0 / s - 2 * k * np.log(s))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def bump(x):
    return bump_derivative(x, 0)


@dataclass(frozen=True)
class Wavelet:
    """psi_N = phi^(N), supported on [0, 1] with N vanishing moments."""

    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("wavelet order must be positive")

    def __call__(self, x):
        return bump_derivative(x, self.order)

    def moment(self, k, dps=40):
        """k-th moment int x^k psi_N(x) dx by extended-precision quadrature.

        psi_N reaches ~1e20 in size for N = 12 while the vanishing moments
        are exact zeros, so double precision cannot resolve them; the
        integrand is evaluated from the same integer recursion in mpmath.
        """
        with mpmath.workdps(dps):
            coeffs = list(reversed(numerator_coefficients(self.order)))
            log_z = _log_norm_mp(dps)

            def f(x):
                if x <= 0 or x >= 1:
                    return mpmath.mpf(0)
                s = 4 * x * (1 - x)
                poly = mpmath.polyval(coeffs, 2 * x - 1)
                return x**k * poly * mpmath.exp(log_z - 4 / s - 2 * self.order * mpmath.log(s))

            return float(mpmath.quad(f, [0, 0.25, 0.5, 0.75, 1]))


# -- exact transforms ----------------------------------------------------------


def _check_scale(a):
    if not a > 0:
        raise DomainError("wavelet scale a must be positive")


def _pieces(path, a, b):
    """Constant pieces of V on [b, b + a] as (u_start, u_end, value) in u = (t - b)/a."""
    knots = np.concatenate([[0.0], path.times])
    values = path.v0 + np.vstack([np.zeros(3), np.cumsum(path.dv, axis=0)])
    ends = np.append(path.times, np.inf)
    keep = (ends > b) & (knots < b + a)
    u0 = np.clip((knots[keep] - b) / a, 0.0, 1.0)
    u1 = np.clip((ends[keep] - b) / a, 0.0, 1.0)
    return u0, u1, values[keep], knots[keep]


def wavelet_transform(path, a, b, order=DEFAULT_ORDER):
    """W(V, a, b) = (1/a) int V(t) psi_N((t - b)/a) dt for the velocity path.

    Each constant piece contributes value * [phi^(N-1)] over its u-range.
    """
    _check_scale(a)
    u0, u1, vals, _ = _pieces(path, a, b)
    if u0.size == 0:
        return np.zeros(3)
    # constants have zero transform; removing the first value avoids cancellation
    w = bump_derivative(u1, order - 1) - bump_derivative(u0, order - 1)
    return w @ (vals - vals[0])


def position_transform(path, a, b, order=DEFAULT_ORDER):
    """W(X, a, b) for the piecewise-linear position path (order >= 2).

    On a piece X(b + a u) = c + s u, and
    int (c + s u) phi^(N) du = [(c + s u) phi^(N-1) - s phi^(N-2)].
    """
    _check_scale(a)
    if order < 2:
        raise ValueError("position transform needs order >= 2")
    u0, u1, vals, knots = _pieces(path, a, b)
    if u0.size == 0:
        return np.zeros(3)
    # affine functions have zero transform, so X is replaced by
    # X(t) - X(s_0) - v_0 (t - b), accumulated locally over the pieces;
    # on the piece starting at s_k this is c_k + a (v_k - v_0) u
    start = np.maximum(knots, b)
    rel = vals - vals[0]
    widths = np.diff(start)
    ref = np.vstack([np.zeros(3), np.cumsum(rel[:-1] * widths[:, None], axis=0)])
    c = ref - rel * (start - b)[:, None]
    slope = a * rel

    def prim(u):
        lead = bump_derivative(u, order - 1)[:, None]
        return (c + slope * u[:, None]) * lead - slope * bump_derivative(u, order - 2)[:, None]

    return np.sum(prim(u1) - prim(u0), axis=0)


def ibp_check(path, a, b, order=DEFAULT_ORDER):
    """Both sides of W(V, a, b) = -(1/a) W(X, a, b) with wavelets of order N, N+1.

    Returns ``(lhs, rhs, gap)`` with gap the relative Euclidean difference.
    """
    lhs = wavelet_transform(path, a, b, order)
    rhs = -position_transform(path, a, b, order + 1) / a
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    gap = float(np.linalg.norm(lhs - rhs) / scale) if scale > 0 else 0.0
    return lhs, rhs, gap


def positive_point(order=DEFAULT_ORDER, grid=4096):
    """A point theta in (0, 1) with psi_{N-1}(theta) > 0 (largest value on a grid)."""
    x = (np.arange(grid) + 0.5) / grid
    y = bump_derivative(x, order - 1)
    k = int(np.argmax(y))
    if not y[k] > 0:
        raise RuntimeError("no positive value found")
    return float(x[k])


# -- oscillation and position exponents ---------------------------------------


def oscillation(path, lo, hi, drop=None):
    """max over components of sup - inf of V on [lo, hi].

    ``drop`` optionally names one event index whose jump is removed from
    the path before measuring.
    """
    if not hi > lo:
        return 0.0
    dv = path.dv
    if drop is not None:
        dv = dv.copy()
        dv[drop] = 0.0
    csum = np.vstack([np.zeros(3), np.cumsum(dv, axis=0)])
    k0 = np.searchsorted(path.times, lo, side="right")
    k1 = np.searchsorted(path.times, hi, side="right")
    vals = csum[k0 : k1 + 1]
    return float(np.max(vals.max(axis=0) - vals.min(axis=0)))


def position_holder_bound(path, t, m_lo, m_hi, epsilon=0.1, ratio_max=0.2, return_bands=False):
    """Upper bound of the position exponent at ``t`` from isolated big jumps.

    For each band m: t_m is the jump of size >= 2^-m nearest to t (among
    the jumps of the window, i.e. of size <= 2^-m_lo), r_m is
    half its distance to the nearest other jump of size >= 2^(-m(1+eps))
    (or to the ends of the time window), and the band qualifies when the
    jump-removed path oscillates by at most ``ratio_max * |J_m|`` on
    [t_m - r_m, t_m + r_m]. The result is the smallest
    log(r_m |J_m|) / log(|t_m - t| + r_m) over qualifying bands; +inf when
    none qualifies.
    """
    size = path.jump_norms
    times = path.times
    best = math.inf
    bands = []
    top = 2.0**-m_lo
    for m in range(m_lo, m_hi + 1):
        big = np.flatnonzero((size >= 2.0**-m) & (size <= top))
        if big.size == 0:
            continue
        i = big[np.argmin(np.abs(times[big] - t))]
        tm, jm = times[i], size[i]
        near = np.flatnonzero(size >= 2.0 ** (-m * (1.0 + epsilon)))
        near = near[near != i]
        gap = min(tm, path.horizon - tm)
        if near.size:
            gap = min(gap, float(np.min(np.abs(times[near] - tm))))
        r = 0.5 * gap
        if not r > 0:
            continue
        dist = abs(tm - t) + r
        if dist >= 1.0:
            continue
        osc = oscillation(path, tm - r, tm + r, drop=i)
        if osc > ratio_max * jm:
            continue
        val = math.log(r * jm) / math.log(dist)
        bands.append((m, val))
        best = min(best, val)
    return (best, bands) if return_bands else best


# -- cusp / oscillating classification ----------------------------------------


@dataclass
class ExponentSample:
    t: float
    delta_hat: float
    h_v: float
    h_x: float
    kind: str = UNDETERMINED
    inconsistent: bool = False


def classify_singularity(sample, margin=DEFAULT_MARGIN):
    """Label a sample cusp / oscillating / undetermined.

    cusp: |h_x - (1 + h_v)| <= margin; oscillating: h_x > 1 + h_v + margin.
    h_x < 1 + h_v - margin contradicts h_X >= 1 + h_V and marks the sample
    estimator-inconsistent (kind undetermined).
    """
    h_v, h_x = sample.h_v, sample.h_x
    if not (np.isfinite(h_v) and np.isfinite(h_x)):
        return UNDETERMINED, False
    excess = h_x - (1.0 + h_v)
    if abs(excess) <= margin:
        return CUSP, False
    if excess > margin:
        return OSCILLATING, False
    return UNDETERMINED, True


def exponent_samples(path, t, m_lo, m_hi, epsilon=0.1, ratio_max=0.2, margin=DEFAULT_MARGIN):
    """Velocity and position exponent estimates plus labels at the times ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    h_v = np.atleast_1d(holder_velocity(path, t, m_lo, m_hi))
    jt = set(path.times[path.jump_norms > 0].tolist())
    out = []
    for ti, hv in zip(t.tolist(), h_v.tolist()):
        hx = position_holder_bound(path, ti, m_lo, m_hi, epsilon, ratio_max)
        delta = DELTA_CAP if hv == 0.0 else (1.0 / hv if hv == hv else math.nan)
        s = ExponentSample(ti, delta, hv, hx)
        if ti in jt:
            s.kind = JUMP_TIME
            s.inconsistent = classify_singularity(s, margin)[1]
        else:
            s.kind, s.inconsistent = classify_singularity(s, margin)
        out.append(s)
    return out
