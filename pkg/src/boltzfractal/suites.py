"""Property suites with built-in desk-scale configurations.

Each property is reported as ``PROP <name> PASS|FAIL <observed> <bound>``.
The checks are plain functions of simulated paths so larger studies can
reuse them with their own ensembles.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import fractal, wavelet
from .collision import post_collision
from .cross_section import CrossSection
from .simulator import Maxwellian, SimulationConfig, run, simulate_replica


@dataclass(frozen=True)
class Prop:
    name: str
    passed: bool
    observed: float
    bound: str

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"PROP {self.name} {verdict} {self.observed:.6g} {self.bound}"


def at_most(name, observed, limit):
    observed = float(observed)
    return Prop(name, bool(observed <= limit), observed, f"<={limit:g}")


def at_least(name, observed, limit):
    observed = float(observed)
    return Prop(name, bool(observed >= limit), observed, f">={limit:g}")


def within(name, observed, target, tol):
    observed = float(observed)
    ok = bool(abs(observed - target) <= tol)
    return Prop(name, ok, observed, f"{target:g}+-{tol:g}")


def maxwell_config(theta_bits, temperature=1.0, replicas=1, n_tracked=1, seed=1, n_particles=256, gamma=0.0, nu=0.5):
    cs = CrossSection(gamma, nu, 2.0**-theta_bits)
    return SimulationConfig(
        cs, seed=seed, n_particles=n_particles, replicas=replicas, n_tracked=n_tracked,
        initial_law=Maxwellian(temperature=temperature),
    )


# -- property checks -----------------------------------------------------------


def collision_props(n=100_000, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3)) * rng.lognormal(0.0, 1.0, size=(n, 1))
    w = rng.normal(size=(n, 3)) * rng.lognormal(0.0, 1.0, size=(n, 1))
    theta = rng.uniform(0.0, 0.5 * math.pi, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    vp, wp = post_collision(v, w, theta, phi)
    scale_p = np.linalg.norm(v, axis=1) + np.linalg.norm(w, axis=1)
    scale_e = np.sum(v * v, axis=1) + np.sum(w * w, axis=1)
    d = np.linalg.norm(v - w, axis=1)
    mom = np.max(np.linalg.norm(vp + wp - v - w, axis=1) / scale_p)
    energy = np.max(np.abs(np.sum(vp * vp, axis=1) + np.sum(wp * wp, axis=1) - scale_e) / scale_e)
    mid = np.max(np.abs(np.linalg.norm(vp - 0.5 * (v + w), axis=1) - 0.5 * d) / d)
    return [
        at_most("collision_momentum", mom, 1e-12),
        at_most("collision_energy", energy, 1e-12),
        at_most("collision_midpoint", mid, 1e-12),
    ]


def system_drift(result):
    """Relative momentum and second-moment drift of a finished replica."""
    v0, v1 = result.v_initial, result.v_final
    m2 = np.sum(v0 * v0)
    mom = np.linalg.norm(v1.sum(axis=0) - v0.sum(axis=0)) / np.sum(np.linalg.norm(v0, axis=1))
    return float(mom), float(abs(np.sum(v1 * v1) - m2) / m2)


def scaling_props(paths, nu, ms=range(4, 13), tol=0.05):
    _, slope, _ = fractal.jump_scaling(paths, list(ms))
    return [within("jump_scaling_slope", slope, nu, tol)]


def coverage_props(paths, deltas=(0.3, 0.4), ms=range(10, 15), level=0.99, share=0.95):
    worst = 1.0
    for delta in deltas:
        for m in ms:
            frac = np.array([fractal.coverage_fraction(p, delta, m) for p in paths])
            worst = min(worst, float(np.mean(frac >= level)))
    return [at_least("covering_share", worst, share)]


def dimension_props(paths, nu, deltas=(0.6, 0.8, 1.0), span=10, tol=0.15):
    k = min(b for b in (fractal.resolved_band(p) for p in paths) if b is not None)
    return [
        within(f"covering_dimension_{delta:g}", fractal.covering_dimension(paths, delta, k - span, k), nu / delta, tol)
        for delta in deltas
    ]


def ibp_props(paths, pairs=20, max_order=12, seed=0, moments=True):
    rng = np.random.default_rng(seed)
    gap = 0.0
    for p in paths:
        for _ in range(pairs):
            a = float(np.exp(rng.uniform(math.log(1e-4), 0.0))) * p.horizon
            b = float(rng.uniform(-a, p.horizon))
            gap = max(gap, wavelet.ibp_check(p, a, b)[2])
    out = [at_most("ibp_gap", gap, 1e-9)]
    if moments:
        worst = max(abs(float(wavelet.Wavelet(n).moment(k))) for n in range(1, max_order + 1) for k in range(n))
        out.append(at_most("vanishing_moments", worst, 1e-8))
    return out


def classify_props(paths, nu, m_lo=1, n_times=200, n_largest=50, epsilon=0.1, margin=wavelet.DEFAULT_MARGIN, seed=1):
    """Position-exponent checks: the uniform bound, cusps at the largest
    jumps, rarity of oscillating flags at low velocity exponents and the
    primitive-exponent consistency count."""
    m_hi = min(b for b in (fractal.resolved_band(p) for p in paths) if b is not None)
    rng = np.random.default_rng(seed)
    samples = []
    for p in paths:
        t = rng.uniform(0.0, p.horizon, n_times)
        samples += wavelet.exponent_samples(p, t, m_lo, m_hi, epsilon, margin=margin)
    h_x = np.array([s.h_x for s in samples])
    h_v = np.array([s.h_v for s in samples])
    finite = np.isfinite(h_x)
    bound = float(np.max(h_x[finite])) if finite.any() else -math.inf

    big = []
    for i, p in enumerate(paths):
        sel = fractal.window_jumps(p, m_lo, m_hi)
        big += [(float(s), i, int(k)) for s, k in zip(p.jump_norms[sel], sel)]
    big.sort(reverse=True)
    dev = 0.0
    for _, i, k in big[:n_largest]:
        p = paths[i]
        hx = wavelet.position_holder_bound(p, float(p.times[k]), m_lo, m_hi, epsilon)
        dev = max(dev, abs(hx - 1.0)) if math.isfinite(hx) else math.inf

    low = np.isfinite(h_v) & finite & (h_v < 1.0 / (2.0 * nu) - margin)
    osc = np.mean([s.kind == wavelet.OSCILLATING for s, ok in zip(samples, low) if ok]) if low.any() else 0.0
    labelled = np.isfinite(h_v) & finite
    incons = np.mean([s.inconsistent for s, ok in zip(samples, labelled) if ok]) if labelled.any() else 0.0
    return [
        at_most("position_bound_max", bound, 1.0 + 1.0 / nu + 0.2),
        at_most("cusp_deviation_max", dev, 0.3),
        at_most("oscillating_fraction_low_h", osc, 0.02),
        Prop("inconsistent_fraction", bool(incons < 0.01), float(incons), "<0.01"),
    ]


# -- suites --------------------------------------------------------------------


def _suite_conservation(workers):
    cfg = maxwell_config(12, n_particles=512, seed=3)
    res = simulate_replica(cfg, 0)
    mom, m2 = system_drift(res)
    return collision_props() + [at_most("momentum_drift", mom, 1e-10), at_most("m2_drift", m2, 1e-10)]


def _suite_scaling(workers):
    paths = run(maxwell_config(16, temperature=16.0, replicas=50, n_tracked=4, seed=5), workers)
    return scaling_props(paths, 0.5)


def _suite_coverage(workers):
    paths = run(maxwell_config(18, temperature=1e-4, replicas=10, n_tracked=8, seed=7), workers)
    return coverage_props(paths)


def _suite_dimension(workers):
    paths = run(maxwell_config(18, temperature=1e-4, replicas=4, n_tracked=8, seed=7), workers)
    return dimension_props(paths, 0.5)


def _suite_wavelet(workers):
    paths = run(maxwell_config(12, replicas=5, seed=9), workers)
    return ibp_props(paths)


def _suite_classify(workers):
    cfg = maxwell_config(20, temperature=0.04, replicas=3, n_tracked=4, seed=11, gamma=0.2)
    return classify_props(run(cfg, workers), 0.5)


SUITES = {
    "conservation": _suite_conservation,
    "scaling": _suite_scaling,
    "coverage": _suite_coverage,
    "dimension": _suite_dimension,
    "wavelet": _suite_wavelet,
    "classify": _suite_classify,
}


def run_suite(name, workers=1):
    return SUITES[name](workers)
