import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from boltzfractal.paths import PathRecord

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_path(times, dv, v0=(0.0, 0.0, 0.0), horizon=1.0, theta=None, kappa=None, **meta):
    times = np.asarray(times, dtype=np.float64)
    dv = np.asarray(dv, dtype=np.float64).reshape(-1, 3)
    norms = np.linalg.norm(dv, axis=1)
    theta = np.full(times.size, 0.5) if theta is None else theta
    kappa = 2.0 * norms if kappa is None else kappa
    meta.setdefault("nu", 0.5)
    meta.setdefault("theta_min", 2.0**-12)
    return PathRecord(v0, times, dv, theta, kappa, horizon, meta)


def jumps_x(times, sizes, **kw):
    """Path whose jumps all point along +x with the given sizes."""
    sizes = np.asarray(sizes, dtype=np.float64)
    dv = np.zeros((sizes.size, 3))
    dv[:, 0] = sizes
    return make_path(times, dv, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one ``C<k> PASS|FAIL ...`` line per acceptance criterion."""

    def record(label, passed, detail):
        line = f"{label} {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:].rstrip("abc"))):
            terminalreporter.write_line(line)
