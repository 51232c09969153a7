"""Jump-path records of tracked particles and their exact reconstruction."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError


class JumpEvent(NamedTuple):
    t: float
    dv: tuple
    theta: float
    kappa: float


@dataclass(eq=False)
class PathRecord:
    """Initial velocity plus the time-ordered jumps of one particle.

    Events are stored column-wise: ``times`` (n,), ``dv`` (n, 3),
    ``theta`` (n,) and ``kappa`` (n,), where ``kappa`` is theta times the
    relative speed that produced the jump.
    """

    v0: np.ndarray
    times: np.ndarray
    dv: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    horizon: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v0 = np.asarray(self.v0, dtype=np.float64).reshape(3)
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        self.dv = np.asarray(self.dv, dtype=np.float64).reshape(-1, 3)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        self.kappa = np.asarray(self.kappa, dtype=np.float64).reshape(-1)
        n = self.times.size
        if not (self.dv.shape[0] == self.theta.size == self.kappa.size == n):
            raise ValueError("event columns have mismatched lengths")
        self.horizon = float(self.horizon)
        self.meta = dict(self.meta)
        self.meta["horizon"] = self.horizon

    @classmethod
    def empty(cls, v0, horizon=1.0, meta=None):
        return cls(v0, np.empty(0), np.empty((0, 3)), np.empty(0), np.empty(0), horizon, dict(meta or {}))

    @classmethod
    def from_events(cls, v0, events, horizon=1.0, meta=None):
        events = list(events)
        if not events:
            return cls.empty(v0, horizon, meta)
        return cls(
            v0,
            [e.t for e in events],
            [e.dv for e in events],
            [e.theta for e in events],
            [e.kappa for e in events],
            horizon,
            dict(meta or {}),
        )

    def __len__(self):
        return self.times.size

    @property
    def events(self):
        return [
            JumpEvent(float(t), tuple(float(c) for c in d), float(th), float(k))
            for t, d, th, k in zip(self.times, self.dv, self.theta, self.kappa)
        ]

    @property
    def jump_norms(self):
        return np.linalg.norm(self.dv, axis=1)

    def __eq__(self, other):
        if not isinstance(other, PathRecord):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.meta == other.meta
            and np.array_equal(self.v0, other.v0)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.dv, other.dv)
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.kappa, other.kappa)
        )

    def subset(self, mask):
        """Same path rebuilt from the selected events only."""
        return PathRecord(
            self.v0, self.times[mask], self.dv[mask], self.theta[mask], self.kappa[mask], self.horizon, dict(self.meta)
        )

    def velocity(self, t):
        return reconstruct(self, t)

    def position(self):
        return position_path(self)


def _check_times(path, t):
    t = np.asarray(t, dtype=np.float64)
    if np.any((t < 0.0) | (t > path.horizon)):
        raise DomainError(f"time outside [0, {path.horizon}]")
    return t


def reconstruct(path, t):
    """Right-continuous velocity V_t = v0 + sum of jumps at times <= t."""
    t = _check_times(path, t)
    csum = np.vstack([np.zeros(3), np.cumsum(path.dv, axis=0)])
    k = np.searchsorted(path.times, t, side="right")
    return path.v0 + csum[k]


class PositionPath:
    """Continuous piecewise-linear X_t = integral of the velocity path."""

    def __init__(self, path):
        self.horizon = path.horizon
        self.knots = np.concatenate([[0.0], path.times])
        # velocity on [knots[k], knots[k+1])
        self.slopes = path.v0 + np.vstack([np.zeros(3), np.cumsum(path.dv, axis=0)])
        widths = np.diff(self.knots)
        self.values = np.vstack([np.zeros(3), np.cumsum(self.slopes[:-1] * widths[:, None], axis=0)])

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any((t < 0.0) | (t > self.horizon)):
            raise DomainError(f"time outside [0, {self.horizon}]")
        k = np.searchsorted(self.knots, t, side="right") - 1
        return self.values[k] + self.slopes[k] * (t - self.knots[k])[..., None]


def position_path(path):
    return PositionPath(path)
