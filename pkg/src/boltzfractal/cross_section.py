"""Power-law angular kernel beta(theta) = theta^(-1-nu) on (0, pi/2] with cutoff."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

HALF_PI = 0.5 * math.pi
DEFAULT_THETA_MIN = 2.0**-12
DEFAULT_SPEED_FLOOR = 1e-3


def from_inverse_power(s):
    """Exponents ``(gamma, nu)`` for a repulsive 1/r^s interaction."""
    if not s > 3:
        raise DomainError(f"inverse-power exponent s={s} must exceed 3 (gamma + nu > 0)")
    return (s - 5.0) / (s - 1.0), 2.0 / (s - 1.0)


@dataclass(frozen=True)
class CrossSection:
    gamma: float
    nu: float
    theta_min: float = DEFAULT_THETA_MIN
    c0: float = 1.0
    C0: float = 1.0

    def __post_init__(self):
        if not -1.0 < self.gamma < 1.0:
            raise DomainError(f"gamma={self.gamma} outside (-1, 1)")
        if not 0.0 < self.nu < 1.0:
            raise DomainError(f"nu={self.nu} outside (0, 1)")
        if not self.gamma + self.nu > 0.0:
            raise DomainError("standing assumption violated: gamma + nu must be > 0")
        # theta_min == pi/2 is allowed and yields an empty kernel
        if not 0.0 < self.theta_min <= HALF_PI:
            raise DomainError(f"theta_min={self.theta_min} outside (0, pi/2]")
        if not 0.0 < self.c0 <= self.C0:
            raise DomainError("kernel constants must satisfy 0 < c0 <= C0")

    @classmethod
    def from_inverse_power(cls, s, theta_min=DEFAULT_THETA_MIN):
        gamma, nu = from_inverse_power(s)
        return cls(gamma=gamma, nu=nu, theta_min=theta_min)


def beta_kernel(cs, theta):
    """beta(theta): theta^(-1-nu) on (0, pi/2], zero beyond."""
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(theta <= 0.0):
        raise DomainError("beta_kernel: theta must be positive")
    out = np.where(theta <= HALF_PI, np.power(theta, -1.0 - cs.nu), 0.0)
    return out if out.ndim else float(out)


def tail_mass(cs, theta_lo):
    """Closed form of the integral of beta over [theta_lo, pi/2]."""
    theta_lo = np.asarray(theta_lo, dtype=np.float64)
    if np.any((theta_lo <= 0.0) | (theta_lo > HALF_PI)):
        raise DomainError("tail_mass: theta_lo must lie in (0, pi/2]")
    out = (np.power(theta_lo, -cs.nu) - HALF_PI ** (-cs.nu)) / cs.nu
    return out if out.ndim else float(out)


def band_mass(cs, theta_1, theta_2):
    """Integral of beta over [theta_1, theta_2] within the kernel support."""
    return tail_mass(cs, theta_1) - tail_mass(cs, theta_2)


def speed_factor_cap(cs, speed_cap=None, relative_speed_cap=None, floor=DEFAULT_SPEED_FLOOR):
    """Upper bound of ``|v - v*|^gamma`` used by the thinning step.

    For gamma >= 0 the bound is ``relative_speed_cap^gamma`` (default
    ``2 B``); for gamma < 0 the pair rate is floored at ``floor`` and the
    bound is ``floor^gamma``.
    """
    if cs.gamma == 0.0:
        return 1.0
    if cs.gamma < 0.0:
        return floor**cs.gamma
    if relative_speed_cap is None:
        if speed_cap is None:
            raise DomainError("hard potentials need a speed cap B or a relative-speed cap")
        relative_speed_cap = 2.0 * speed_cap
    return relative_speed_cap**cs.gamma


def majorant_collision_rate(cs, speed_cap=None, relative_speed_cap=None, floor=DEFAULT_SPEED_FLOOR):
    """Per-particle proposal rate 2 pi * cap * tail_mass(theta_min)."""
    if speed_cap is not None and speed_cap < 1.0:
        raise DomainError("speed cap B must be >= 1")
    cap = speed_factor_cap(cs, speed_cap, relative_speed_cap, floor)
    return 2.0 * math.pi * cap * tail_mass(cs, cs.theta_min)


def sample_theta(cs, u):
    """Inverse-CDF draw from beta restricted to [theta_min, pi/2].

    ``u`` are uniforms in [0, 1); u = 0 maps to theta_min.
    """
    lo = cs.theta_min ** (-cs.nu)
    hi = HALF_PI ** (-cs.nu)
    u = np.asarray(u, dtype=np.float64)
    return np.power(lo - u * (lo - hi), -1.0 / cs.nu)
