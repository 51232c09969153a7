"""Geometry of a single binary collision in the (theta, phi) parameterization.

All functions accept a single 3-vector or a stack of them with shape
``(..., 3)`` and broadcast over the leading axes.
"""

import numpy as np

from .errors import DomainError

__all__ = [
    "orthonormal_frame",
    "gamma_vec",
    "deviation",
    "post_collision",
    "jump_size",
]


def _as_vec(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (3,):
        raise ValueError(f"expected trailing dimension 3, got shape {x.shape}")
    return x


def orthonormal_frame(x):
    """Return ``(i_vec, j_vec)`` completing ``x`` to an orthogonal frame.

    ``i_vec`` is perpendicular to ``x`` with the same norm; it is built from
    the cross product of ``x`` with the basis vector along the smallest
    magnitude component of ``x``. ``j_vec = (x/|x|) x i_vec``.
    """
    x = _as_vec(x)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DomainError("orthonormal_frame: zero vector has no perpendicular frame")
    k = np.argmin(np.abs(x), axis=-1)
    e = np.zeros_like(x)
    np.put_along_axis(e, k[..., None], 1.0, axis=-1)
    c = np.cross(x, e)
    i_vec = c * (norm / np.linalg.norm(c, axis=-1, keepdims=True))
    j_vec = np.cross(x / norm, i_vec)
    return i_vec, j_vec


def gamma_vec(x, phi):
    """cos(phi) I(x) + sin(phi) J(x): perpendicular to ``x``, same norm."""
    i_vec, j_vec = orthonormal_frame(x)
    phi = np.asarray(phi, dtype=np.float64)[..., None]
    return np.cos(phi) * i_vec + np.sin(phi) * j_vec


def deviation(v, v_star, theta, phi):
    """Velocity change ``v' - v`` of the particle with velocity ``v``.

    Pairs with ``v == v_star`` (or ``theta == 0``) give a zero deviation.
    """
    v = _as_vec(v)
    v_star = _as_vec(v_star)
    x = v - v_star
    theta = np.asarray(theta, dtype=np.float64)
    shape = np.broadcast_shapes(x.shape, theta.shape + (3,), np.shape(phi) + (3,))
    x = np.broadcast_to(x, shape)
    out = np.zeros(shape)
    live = np.linalg.norm(x, axis=-1) > 0.0
    if not np.any(live):
        return out
    th = np.broadcast_to(theta, shape[:-1])[live]
    ph = np.broadcast_to(np.asarray(phi, dtype=np.float64), shape[:-1])[live]
    xl = x[live]
    # 1 - cos(theta) = 2 sin^2(theta/2), stable for small angles
    out[live] = (-np.sin(0.5 * th) ** 2)[..., None] * xl + (
        0.5 * np.sin(th)
    )[..., None] * gamma_vec(xl, ph)
    return out


def post_collision(v, v_star, theta, phi):
    """Post-collisional pair ``(v', v_star')``.

    ``v'`` follows the (theta, phi) rule; the partner receives the opposite
    deviation so momentum and kinetic energy are conserved pairwise.
    """
    v = _as_vec(v)
    v_star = _as_vec(v_star)
    a = deviation(v, v_star, theta, phi)
    return v + a, v_star - a


def jump_size(v, v_star, theta):
    """Norm of the deviation: sqrt((1 - cos theta)/2) |v - v_star|."""
    theta = np.asarray(theta, dtype=np.float64)
    if np.any((theta < 0.0) | (theta > np.pi / 2)):
        raise DomainError("jump_size: theta must lie in [0, pi/2]")
    d = np.linalg.norm(_as_vec(v) - _as_vec(v_star), axis=-1)
    out = np.sin(0.5 * theta) * d
    return out if out.ndim else float(out)
