import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from boltzfractal import wavelet as W
from boltzfractal.errors import DomainError
from boltzfractal.paths import PathRecord

from conftest import jumps_x, make_path


def random_path(rng, n, horizon=1.0):
    return make_path(np.sort(rng.uniform(0, horizon, n)), rng.normal(size=(n, 3)) * 0.01,
                     v0=rng.normal(size=3), horizon=horizon)


def test_support():
    x = np.array([-1.0, 0.0, 1.0, 1.5])
    for k in range(6):
        assert np.all(W.bump_derivative(x, k) == 0.0)
    with pytest.raises(ValueError):
        W.bump_derivative(0.5, -1)


def test_normalization_and_derivative_integrals():
    total, _ = quad(W.bump, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
    assert total == pytest.approx(1.0, abs=1e-10)
    for k in range(1, 7):
        scale, _ = quad(lambda x: abs(W.bump_derivative(x, k)), 0, 1, limit=400)
        val, _ = quad(lambda x: W.bump_derivative(x, k), 0, 1, epsabs=1e-13 * scale, limit=400)
        assert abs(val) < 1e-10 * scale


# frozen from 30-digit numerical differentiation of Z exp(-1/(x(1-x)))
ORACLE = [
    (1, 0.25, 9.7675050788344894),
    (3, 0.3, -866.28086719735988),
    (4, 0.7, 2953.9507628540880),
    (8, 0.6, -144885186.33289499),
    (12, 0.45, -2944255674916.4039),
]


@pytest.mark.parametrize("k,x,ref", ORACLE)
def test_bump_derivative_oracle(k, x, ref):
    assert W.bump_derivative(x, k) == pytest.approx(ref, rel=1e-9)


def test_numerator_recursion():
    assert W.numerator_coefficients(0) == (1,)
    assert W.numerator_coefficients(1)[:2] == (0, -16) and not any(W.numerator_coefficients(1)[2:])
    assert all(isinstance(c, int) for c in W.numerator_coefficients(12))


def test_derivative_consistency():
    # phi^(k) is the slope of phi^(k-1)
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    for k in (1, 3, 5):
        fd = (W.bump_derivative(x + h, k - 1) - W.bump_derivative(x - h, k - 1)) / (2 * h)
        assert np.allclose(fd, W.bump_derivative(x, k), rtol=1e-5, atol=1e-6 * np.max(np.abs(fd)))


@pytest.mark.parametrize("order", [1, 2, 4, 6])
def test_vanishing_moments_low_order(order):
    w = W.Wavelet(order)
    for k in range(order):
        assert abs(w.moment(k)) < 1e-8
    # int x^N phi^(N) = (-1)^N N! by repeated integration by parts
    assert w.moment(order) == pytest.approx((-1) ** order * math.factorial(order), rel=1e-12)


def test_wavelet_validation():
    with pytest.raises(ValueError):
        W.Wavelet(0)
    assert W.Wavelet(3)(0.3) == W.bump_derivative(0.3, 3)


def test_transform_constant_is_zero():
    p = PathRecord.empty([1.5, -2.0, 3.0])
    assert np.array_equal(W.wavelet_transform(p, 0.3, 0.2), np.zeros(3))
    assert np.allclose(W.position_transform(p, 0.3, 0.2), 0.0, atol=1e-15)


@pytest.mark.parametrize("order", [1, 2, 4, 7])
def test_transform_unit_step(order):
    theta, a, b = 0.3, 0.5, 0.1
    p = jumps_x([b + theta * a], [1.0])
    got = W.wavelet_transform(p, a, b, order)
    assert got[0] == pytest.approx(-W.bump_derivative(theta, order - 1), rel=1e-12)
    assert got[1] == 0.0 and got[2] == 0.0


def test_transform_against_quadrature(rng):
    p = random_path(rng, 40)
    a, b = 0.3, 0.35
    for order in (2, 4):
        got = W.wavelet_transform(p, a, b, order)
        f = lambda t: p.velocity(t)[0] * W.bump_derivative((t - b) / a, order) / a
        knots = [b] + [t for t in p.times if b < t < b + a] + [b + a]
        ref = sum(quad(f, lo, hi, epsabs=0, epsrel=1e-12)[0] for lo, hi in zip(knots[:-1], knots[1:]))
        assert got[0] == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_position_transform_against_quadrature(rng):
    p = random_path(rng, 40)
    a, b = 0.3, 0.35
    x = p.position()
    got = W.position_transform(p, a, b, 4)
    f = lambda t: x(t)[1] * W.bump_derivative((t - b) / a, 4) / a
    knots = [b] + [t for t in p.times if b < t < b + a] + [b + a]
    ref = sum(quad(f, lo, hi, epsabs=0, epsrel=1e-12)[0] for lo, hi in zip(knots[:-1], knots[1:]))
    assert got[1] == pytest.approx(ref, rel=1e-7, abs=1e-13)
    with pytest.raises(ValueError):
        W.position_transform(p, a, b, 1)


def test_linear_signal_vanishes():
    # X(t) = t v0 for a jump-free path: a linear function has zero transform for N >= 2
    p = PathRecord.empty([1.0, 2.0, -0.5])
    assert np.allclose(W.position_transform(p, 0.4, 0.3, 2), 0.0, atol=1e-14)


def test_scale_domain():
    p = jumps_x([0.5], [1.0])
    for fn in (W.wavelet_transform, W.position_transform):
        with pytest.raises(DomainError):
            fn(p, 0.0, 0.1)
        with pytest.raises(DomainError):
            fn(p, -1.0, 0.1)


def test_linearity_and_dilation(rng):
    p, q = random_path(rng, 30), random_path(rng, 30)
    both = make_path(np.concatenate([p.times, q.times]), np.vstack([p.dv, q.dv]), v0=p.v0 + q.v0)
    order = np.argsort(both.times)
    both = both.subset(order)
    a, b = 0.4, 0.2
    assert np.allclose(W.wavelet_transform(both, a, b), W.wavelet_transform(p, a, b) + W.wavelet_transform(q, a, b))
    # g(lam t) has transform W(g, lam a, lam b) at (a, b)
    lam = 2.0
    squeezed = make_path(p.times / lam, p.dv, v0=p.v0, horizon=1.0 / lam)
    assert np.allclose(W.wavelet_transform(squeezed, a / lam, b / lam), W.wavelet_transform(p, a, b))


def test_ibp_single_jump():
    p = jumps_x([0.5], [0.3])
    for a, b in [(0.2, 0.4), (0.9, 0.05), (0.01, 0.495)]:
        assert W.ibp_check(p, a, b)[2] <= 1e-10


def test_ibp_zero_path():
    p = PathRecord.empty([0.0, 0.0, 0.0])
    lhs, rhs, gap = W.ibp_check(p, 0.3, 0.1)
    assert np.array_equal(lhs, np.zeros(3)) and np.array_equal(rhs, np.zeros(3)) and gap == 0.0


def test_ibp_large_path(rng):
    p = random_path(rng, 10_000)
    gaps = []
    for _ in range(100):
        a = float(np.exp(rng.uniform(math.log(1e-4), 0.0)))
        b = float(rng.uniform(-a, 1.0))
        gaps.append(W.ibp_check(p, a, b)[2])
    assert max(gaps) <= 1e-9


@given(st.floats(1e-3, 1.0), st.floats(-0.5, 1.0), st.integers(1, 8))
def test_ibp_property(a, b, order):
    p = random_path(np.random.default_rng(7), 200)
    assert W.ibp_check(p, a, b, order)[2] <= 1e-9


def test_positive_point():
    theta = W.positive_point(4)
    assert 0 < theta < 1 and W.bump_derivative(theta, 3) > 0


def test_oscillation_examples():
    p = jumps_x([0.5], [0.2])
    assert W.oscillation(p, 0.1, 0.4) == 0.0
    assert W.oscillation(p, 0.4, 0.6) == pytest.approx(0.2)
    assert W.oscillation(p, 0.4, 0.6, drop=0) == 0.0
    assert W.oscillation(p, 0.6, 0.4) == 0.0


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_oscillation_superadditive(a, b, c, d):
    p = random_path(np.random.default_rng(3), 50)
    i, j = sorted((a, b)), sorted((c, d))
    whole = W.oscillation(p, min(i[0], j[0]), max(i[1], j[1]))
    assert whole >= max(W.oscillation(p, *i), W.oscillation(p, *j))


def test_position_bound_examples():
    p = jumps_x([0.5], [2.0**-5])
    assert W.position_holder_bound(p, 0.5, 1, 10) == pytest.approx(3.5)
    q = jumps_x([0.3, 0.5], [2.0**-5, 2.0**-3])
    # isolation radius at 0.5 is half the gap to the jump at 0.3 (size >= 2^-3.3)
    r = 0.1
    val, bands = W.position_holder_bound(q, 0.5, 3, 3, epsilon=1.0, return_bands=True)
    assert bands == [(3, pytest.approx(math.log(r * 2.0**-3) / math.log(r)))]
    assert W.position_holder_bound(PathRecord.empty([0, 0, 0]), 0.5, 1, 10) == math.inf


def test_position_bound_needs_small_oscillation():
    # a cloud of medium jumps around the big one breaks the oscillation hypothesis
    times = np.concatenate([[0.5], 0.5 + np.linspace(-0.2, 0.2, 41)[np.arange(41) != 20]])
    sizes = np.concatenate([[2.0**-4], np.full(40, 2.0**-8)])
    order = np.argsort(times)
    p = jumps_x(times[order], sizes[order])
    assert W.position_holder_bound(p, 0.5, 4, 4, epsilon=0.1) == math.inf


def test_classify_examples():
    s = W.ExponentSample(0.1, 2.0, 0.5, 1.5)
    assert W.classify_singularity(s, 0.1) == (W.CUSP, False)
    s = W.ExponentSample(0.1, 2.0, 0.5, 2.0)
    assert W.classify_singularity(s, 0.1) == (W.OSCILLATING, False)
    s = W.ExponentSample(0.1, 2.0, 0.5, 1.0)
    assert W.classify_singularity(s, 0.1) == (W.UNDETERMINED, True)
    s = W.ExponentSample(0.1, 2.0, float("nan"), 1.0)
    assert W.classify_singularity(s) == (W.UNDETERMINED, False)


def test_exponent_samples_labels(rng):
    n = 300
    p = jumps_x(np.sort(rng.uniform(0, 1, n)), 2.0 ** -rng.uniform(2, 14, n))
    t = np.concatenate([p.times[:3], rng.uniform(0, 1, 20)])
    out = W.exponent_samples(p, t, 2, 12)
    assert [s.kind for s in out[:3]] == [W.JUMP_TIME] * 3
    assert all(s.h_v == 0.0 for s in out[:3])
    assert all(s.kind != W.JUMP_TIME for s in out[3:])
    for s in out[3:]:
        if s.h_v > 0:
            assert s.h_v * s.delta_hat == pytest.approx(1.0)
