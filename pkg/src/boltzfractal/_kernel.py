"""Compiled event loop of the symmetric N-particle collision system."""

import math

import numpy as np
from numba import njit

# uniforms consumed per proposed collision: clock, i, j, theta, phi, thinning
UNIFORMS_PER_PROPOSAL = 6
# kernel status codes
RUNNING = 0
FINISHED = 1
OVERFLOW = 2


@njit(cache=True, nogil=True)
def _truncate(v, B, out):
    s = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if s > B:
        f = B / s
        out[0] = v[0] * f
        out[1] = v[1] * f
        out[2] = v[2] * f
    else:
        out[0] = v[0]
        out[1] = v[1]
        out[2] = v[2]


@njit(cache=True, nogil=True)
def _deviation(x, theta, phi, a):
    """a = -sin^2(theta/2) x + sin(theta)/2 * Gamma(x, phi); returns |x|."""
    nx = math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    if nx == 0.0:
        a[0] = 0.0
        a[1] = 0.0
        a[2] = 0.0
        return 0.0
    ax, ay, az = abs(x[0]), abs(x[1]), abs(x[2])
    # I(x) = |x| * normalize(x cross e_k), k = argmin |x_k| (first on ties)
    if ax <= ay and ax <= az:
        cx, cy, cz = 0.0, x[2], -x[1]
    elif ay <= az:
        cx, cy, cz = -x[2], 0.0, x[0]
    else:
        cx, cy, cz = x[1], -x[0], 0.0
    f = nx / math.sqrt(cx * cx + cy * cy + cz * cz)
    ix, iy, iz = cx * f, cy * f, cz * f
    ux, uy, uz = x[0] / nx, x[1] / nx, x[2] / nx
    jx = uy * iz - uz * iy
    jy = uz * ix - ux * iz
    jz = ux * iy - uy * ix
    cp = math.cos(phi)
    sp = math.sin(phi)
    s2 = math.sin(0.5 * theta)
    s2 = s2 * s2
    st = 0.5 * math.sin(theta)
    a[0] = -s2 * x[0] + st * (cp * ix + sp * jx)
    a[1] = -s2 * x[1] + st * (cp * iy + sp * jy)
    a[2] = -s2 * x[2] + st * (cp * iz + sp * jz)
    return nx


@njit(cache=True, nogil=True)
def advance(
    vel,
    slot_of,
    u,
    t,
    horizon,
    base_rate,
    gamma,
    nu,
    theta_min,
    B,
    cap_factor,
    dynamic_cap,
    floor,
    max_speed,
    out_slot,
    out_t,
    out_dv,
    out_theta,
    out_kappa,
):
    """Consume one block of uniforms ``u`` (shape (n, 6)).

    ``base_rate`` is N/2 * 2 pi * tail_mass(theta_min); the proposal clock runs
    at ``base_rate * cap_factor``. With ``dynamic_cap`` the cap factor is
    ``(2 * max_speed)^gamma`` and follows the running bound on speeds.

    Returns ``(status, t, used, n_out, max_speed, n_accepted, n_floor)``.
    """
    n = vel.shape[0]
    lo = theta_min ** (-nu)
    hi = (0.5 * math.pi) ** (-nu)
    hi_span = lo - hi
    vi_t = np.empty(3)
    vj_t = np.empty(3)
    x = np.empty(3)
    a = np.empty(3)
    n_out = 0
    n_acc = 0
    n_floor = 0
    cap_out = out_t.shape[0]
    status = RUNNING
    used = 0
    if base_rate <= 0.0:
        return FINISHED, horizon, 0, 0, max_speed, 0, 0
    for k in range(u.shape[0]):
        if dynamic_cap:
            cap_factor = (2.0 * max_speed) ** gamma
        rate = base_rate * cap_factor
        dt = -math.log1p(-u[k, 0]) / rate
        used = k + 1
        if t + dt > horizon:
            t = horizon
            status = FINISHED
            break
        t += dt
        i = int(u[k, 1] * n)
        j = int(u[k, 2] * (n - 1))
        if i >= n:
            i = n - 1
        if j >= n - 1:
            j = n - 2
        if j >= i:
            j += 1
        _truncate(vel[i], B, vi_t)
        _truncate(vel[j], B, vj_t)
        x[0] = vi_t[0] - vj_t[0]
        x[1] = vi_t[1] - vj_t[1]
        x[2] = vi_t[2] - vj_t[2]
        d = math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        if gamma != 0.0:
            if gamma < 0.0:
                pair = max(d, floor) ** gamma
            else:
                pair = d**gamma
            if u[k, 5] * cap_factor > pair:
                continue
            if gamma < 0.0 and d < floor:
                n_floor += 1
        theta = (lo - u[k, 3] * hi_span) ** (-1.0 / nu)
        phi = 2.0 * math.pi * u[k, 4]
        _deviation(x, theta, phi, a)
        n_acc += 1
        for c in range(3):
            vel[i, c] += a[c]
            vel[j, c] -= a[c]
        if dynamic_cap:
            si = math.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2 + vel[i, 2] ** 2)
            sj = math.sqrt(vel[j, 0] ** 2 + vel[j, 1] ** 2 + vel[j, 2] ** 2)
            max_speed = max(max_speed, si, sj)
        kappa = theta * d
        for p, sign in ((i, 1.0), (j, -1.0)):
            s = slot_of[p]
            if s < 0:
                continue
            if n_out >= cap_out:
                return OVERFLOW, t, used, n_out, max_speed, n_acc, n_floor
            out_slot[n_out] = s
            out_t[n_out] = t
            out_dv[n_out, 0] = sign * a[0]
            out_dv[n_out, 1] = sign * a[1]
            out_dv[n_out, 2] = sign * a[2]
            out_theta[n_out] = theta
            out_kappa[n_out] = kappa
            n_out += 1
    return status, t, used, n_out, max_speed, n_acc, n_floor
