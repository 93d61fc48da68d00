"""Pure-numpy compute kernels.

Reference implementations of the three hot loops: the outward sweep of
the regular eigenfunction ODE, the inward sweep of the oscillatory
amplitude (Jost) ODE, and the finite-difference leapfrog for the full
wave map.  The compiled twin in _fastkernels.pyx matches these
signatures; kernels.py picks a backend at import time.

Sweeps are vectorized across a batch of frequencies sharing one step
ladder; the ladder must already satisfy the accuracy step rule (see
kernels.build_ladder).
"""

from __future__ import annotations

import numpy as np

POT_MAP = 0  # V = (r^4 - 6 r^2 + 1) / (r^2 (1+r^2)^2)
POT_GAUGE = 1  # V = 4 / (r^2 (1+r^2))


def _potential(pot, r):
    r2 = r * r
    if pot == POT_MAP:
        return (r2 * r2 - 6.0 * r2 + 1.0) / (r2 * (1.0 + r2) ** 2)
    return 4.0 / (r2 * (1.0 + r2))


def _w_amp(pot, q, xi2):
    """W(q/xi)/xi^2 for the amplitude equation, vectorized in xi."""
    q2 = q * q
    if pot == POT_MAP:
        return 3.0 / (4.0 * q2) - 8.0 * xi2 / (xi2 + q2) ** 2
    return 15.0 / (4.0 * q2) - 4.0 / (xi2 + q2)


def sweep_regular(r_ladder, out_idx, xi, pot, y0):
    """Integrate phi'' = -phi'/r + (V - xi^2) phi outward along a ladder.

    r_ladder: (nl,) increasing; out_idx: sorted ladder indices to record;
    xi: (nc,); y0: (2, nc) state at r_ladder[0].  Returns (phi, dphi) of
    shape (len(out_idx), nc).
    """
    r_ladder = np.asarray(r_ladder, dtype=float)
    xi2 = np.asarray(xi, dtype=float) ** 2
    phi = np.array(y0[0], dtype=float)
    dphi = np.array(y0[1], dtype=float)
    nout = len(out_idx)
    out_phi = np.empty((nout, phi.size))
    out_dphi = np.empty((nout, phi.size))
    out_pos = 0
    out_idx = np.asarray(out_idx)

    def acc(r, f, df):
        return -df / r + (_potential(pot, r) - xi2) * f

    for i in range(r_ladder.size - 1):
        while out_pos < nout and out_idx[out_pos] == i:
            out_phi[out_pos] = phi
            out_dphi[out_pos] = dphi
            out_pos += 1
        r = r_ladder[i]
        h = r_ladder[i + 1] - r
        k1f = dphi
        k1d = acc(r, phi, dphi)
        f2 = phi + 0.5 * h * k1f
        d2 = dphi + 0.5 * h * k1d
        k2f = d2
        k2d = acc(r + 0.5 * h, f2, d2)
        f3 = phi + 0.5 * h * k2f
        d3 = dphi + 0.5 * h * k2d
        k3f = d3
        k3d = acc(r + 0.5 * h, f3, d3)
        f4 = phi + h * k3f
        d4 = dphi + h * k3d
        k4f = d4
        k4d = acc(r + h, f4, d4)
        phi = phi + (h / 6.0) * (k1f + 2.0 * (k2f + k3f) + k4f)
        dphi = dphi + (h / 6.0) * (k1d + 2.0 * (k2d + k3d) + k4d)
    while out_pos < nout:
        out_phi[out_pos] = phi
        out_dphi[out_pos] = dphi
        out_pos += 1
    return out_phi, out_dphi


def sweep_jost(q_ladder, out_idx, xi, pot, y0):
    """Integrate sigma'' + 2i sigma' = (W(q/xi)/xi^2) sigma along a ladder.

    q_ladder: (nl,) strictly decreasing (inward); y0: (2, nc) complex at
    q_ladder[0].  Returns (sig, dsig) at out_idx, shape (nout, nc).
    """
    q_ladder = np.asarray(q_ladder, dtype=float)
    xi2 = np.asarray(xi, dtype=float) ** 2
    sig = np.array(y0[0], dtype=complex)
    dsig = np.array(y0[1], dtype=complex)
    nout = len(out_idx)
    out_s = np.empty((nout, sig.size), dtype=complex)
    out_d = np.empty((nout, sig.size), dtype=complex)
    out_pos = 0
    out_idx = np.asarray(out_idx)

    def acc(q, s, ds):
        return _w_amp(pot, q, xi2) * s - 2.0j * ds

    for i in range(q_ladder.size - 1):
        while out_pos < nout and out_idx[out_pos] == i:
            out_s[out_pos] = sig
            out_d[out_pos] = dsig
            out_pos += 1
        q = q_ladder[i]
        h = q_ladder[i + 1] - q
        k1s = dsig
        k1d = acc(q, sig, dsig)
        s2 = sig + 0.5 * h * k1s
        d2 = dsig + 0.5 * h * k1d
        k2s = d2
        k2d = acc(q + 0.5 * h, s2, d2)
        s3 = sig + 0.5 * h * k2s
        d3 = dsig + 0.5 * h * k2d
        k3s = d3
        k3d = acc(q + 0.5 * h, s3, d3)
        s4 = sig + h * k3s
        d4 = dsig + h * k3d
        k4s = d4
        k4d = acc(q + h, s4, d4)
        sig = sig + (h / 6.0) * (k1s + 2.0 * (k2s + k3s) + k4s)
        dsig = dsig + (h / 6.0) * (k1d + 2.0 * (k2d + k3d) + k4d)
    while out_pos < nout:
        out_s[out_pos] = sig
        out_d[out_pos] = dsig
        out_pos += 1
    return out_s, out_d


def leapfrog(u, v, h, dt, nsteps, snap_every, bc, blowup_level):
    """Staggered leapfrog for u_tt = u_rr + u_r/r - sin(2u)/(2 r^2).

    u: (n,) at nodes r_i = (i+1) h, time t0; v: (n,) velocity at
    t0 - dt/2.  Regularity closes the origin with u(0) = 0; the outer
    boundary holds the Dirichlet value bc.  Snapshots (including the
    initial state) are taken every snap_every steps.  Velocity snapshots
    lag u by dt/2 (the staggered native position); callers re-center
    with half a force step when they need collocated pairs.

    Returns (u_snaps, v_snaps, steps_done, blowup_step) with
    blowup_step = -1 if |u(h)| stayed below blowup_level.
    """
    u = np.array(u, dtype=float)
    v = np.array(v, dtype=float)
    n = u.size
    r = (np.arange(n) + 1.0) * h
    inv_h2 = 1.0 / (h * h)
    inv_2hr = 1.0 / (2.0 * h * r)
    inv_2r2 = 0.5 / (r * r)
    snaps_u = [u.copy()]
    snaps_v = [v.copy()]
    blow = -1
    up = np.empty(n + 2)
    up[0] = 0.0
    up[-1] = bc
    steps = 0
    for step in range(1, nsteps + 1):
        up[1:-1] = u
        lap = (up[2:] - 2.0 * u + up[:-2]) * inv_h2 \
            + (up[2:] - up[:-2]) * inv_2hr
        force = lap - np.sin(2.0 * u) * inv_2r2
        v = v + dt * force
        u = u + dt * v
        steps = step
        if abs(u[0]) > blowup_level:
            blow = step
            break
        if step % snap_every == 0:
            snaps_u.append(u.copy())
            snaps_v.append(v.copy())
    return (np.array(snaps_u), np.array(snaps_v), steps, blow)
