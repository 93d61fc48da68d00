# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the _kernels_py reference kernels.

Same signatures and semantics; per-frequency inner loops run in C.  See
_kernels_py.py for the contracts.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sin

cnp.import_array()

DEF POT_MAP = 0


cdef inline double _potential(int pot, double r) nogil:
    cdef double r2 = r * r
    if pot == POT_MAP:
        return (r2 * r2 - 6.0 * r2 + 1.0) / (r2 * (1.0 + r2) * (1.0 + r2))
    return 4.0 / (r2 * (1.0 + r2))


cdef inline double _w_amp(int pot, double q, double xi2) nogil:
    cdef double q2 = q * q
    if pot == POT_MAP:
        return 3.0 / (4.0 * q2) - 8.0 * xi2 / ((xi2 + q2) * (xi2 + q2))
    return 15.0 / (4.0 * q2) - 4.0 / (xi2 + q2)


def sweep_regular(cnp.ndarray[double, ndim=1] r_ladder,
                  out_idx,
                  cnp.ndarray[double, ndim=1] xi,
                  int pot,
                  cnp.ndarray[double, ndim=2] y0):
    cdef cnp.ndarray[long, ndim=1] oidx = np.asarray(out_idx, dtype=np.int64)
    cdef Py_ssize_t nl = r_ladder.shape[0]
    cdef Py_ssize_t nc = xi.shape[0]
    cdef Py_ssize_t nout = oidx.shape[0]
    cdef cnp.ndarray[double, ndim=2] out_phi = np.empty((nout, nc))
    cdef cnp.ndarray[double, ndim=2] out_dphi = np.empty((nout, nc))
    cdef Py_ssize_t c, i, op
    cdef double f, df, r, h, xi2
    cdef double k1f, k1d, k2f, k2d, k3f, k3d, k4f, k4d, f2, d2, f3, d3, f4, d4
    cdef double vr, vmid, vend, rm, re
    for c in range(nc):
        f = y0[0, c]
        df = y0[1, c]
        xi2 = xi[c] * xi[c]
        op = 0
        for i in range(nl - 1):
            while op < nout and oidx[op] == i:
                out_phi[op, c] = f
                out_dphi[op, c] = df
                op += 1
            r = r_ladder[i]
            h = r_ladder[i + 1] - r
            rm = r + 0.5 * h
            re = r + h
            vr = _potential(pot, r) - xi2
            vmid = _potential(pot, rm) - xi2
            vend = _potential(pot, re) - xi2
            k1f = df
            k1d = -df / r + vr * f
            f2 = f + 0.5 * h * k1f
            d2 = df + 0.5 * h * k1d
            k2f = d2
            k2d = -d2 / rm + vmid * f2
            f3 = f + 0.5 * h * k2f
            d3 = df + 0.5 * h * k2d
            k3f = d3
            k3d = -d3 / rm + vmid * f3
            f4 = f + h * k3f
            d4 = df + h * k3d
            k4f = d4
            k4d = -d4 / re + vend * f4
            f = f + (h / 6.0) * (k1f + 2.0 * (k2f + k3f) + k4f)
            df = df + (h / 6.0) * (k1d + 2.0 * (k2d + k3d) + k4d)
        while op < nout:
            out_phi[op, c] = f
            out_dphi[op, c] = df
            op += 1
    return out_phi, out_dphi


def sweep_jost(cnp.ndarray[double, ndim=1] q_ladder,
               out_idx,
               cnp.ndarray[double, ndim=1] xi,
               int pot,
               cnp.ndarray[complex, ndim=2] y0):
    cdef cnp.ndarray[long, ndim=1] oidx = np.asarray(out_idx, dtype=np.int64)
    cdef Py_ssize_t nl = q_ladder.shape[0]
    cdef Py_ssize_t nc = xi.shape[0]
    cdef Py_ssize_t nout = oidx.shape[0]
    cdef cnp.ndarray[complex, ndim=2] out_s = np.empty((nout, nc), dtype=complex)
    cdef cnp.ndarray[complex, ndim=2] out_d = np.empty((nout, nc), dtype=complex)
    cdef Py_ssize_t c, i, op
    cdef double complex s, ds, k1s, k1d, k2s, k2d, k3s, k3d, k4s, k4d
    cdef double complex s2, d2, s3, d3, s4, d4
    cdef double complex two_i = 2.0j
    cdef double q, h, xi2, wq, wm, we, qm, qe
    for c in range(nc):
        s = y0[0, c]
        ds = y0[1, c]
        xi2 = xi[c] * xi[c]
        op = 0
        for i in range(nl - 1):
            while op < nout and oidx[op] == i:
                out_s[op, c] = s
                out_d[op, c] = ds
                op += 1
            q = q_ladder[i]
            h = q_ladder[i + 1] - q
            qm = q + 0.5 * h
            qe = q + h
            wq = _w_amp(pot, q, xi2)
            wm = _w_amp(pot, qm, xi2)
            we = _w_amp(pot, qe, xi2)
            k1s = ds
            k1d = wq * s - two_i * ds
            s2 = s + 0.5 * h * k1s
            d2 = ds + 0.5 * h * k1d
            k2s = d2
            k2d = wm * s2 - two_i * d2
            s3 = s + 0.5 * h * k2s
            d3 = ds + 0.5 * h * k2d
            k3s = d3
            k3d = wm * s3 - two_i * d3
            s4 = s + h * k3s
            d4 = ds + h * k3d
            k4s = d4
            k4d = we * s4 - two_i * d4
            s = s + (h / 6.0) * (k1s + 2.0 * (k2s + k3s) + k4s)
            ds = ds + (h / 6.0) * (k1d + 2.0 * (k2d + k3d) + k4d)
        while op < nout:
            out_s[op, c] = s
            out_d[op, c] = ds
            op += 1
    return out_s, out_d


def leapfrog(cnp.ndarray[double, ndim=1] u0,
             cnp.ndarray[double, ndim=1] v0,
             double h, double dt, long nsteps, long snap_every,
             double bc, double blowup_level):
    cdef Py_ssize_t n = u0.shape[0]
    cdef cnp.ndarray[double, ndim=1] u = u0.copy()
    cdef cnp.ndarray[double, ndim=1] v = v0.copy()
    cdef cnp.ndarray[double, ndim=1] lap = np.empty(n)
    cdef Py_ssize_t i
    cdef long step, blow = -1, steps = 0
    cdef double inv_h2 = 1.0 / (h * h)
    cdef double r, ul, ur
    snaps_u = [u0.copy()]
    snaps_v = [v0.copy()]
    for step in range(1, nsteps + 1):
        for i in range(n):
            r = (i + 1) * h
            ul = u[i - 1] if i > 0 else 0.0
            ur = u[i + 1] if i < n - 1 else bc
            lap[i] = (ur - 2.0 * u[i] + ul) * inv_h2 \
                + (ur - ul) / (2.0 * h * r) \
                - sin(2.0 * u[i]) * 0.5 / (r * r)
        for i in range(n):
            v[i] = v[i] + dt * lap[i]
            u[i] = u[i] + dt * v[i]
        steps = step
        if u[0] > blowup_level or u[0] < -blowup_level:
            blow = step
            break
        if step % snap_every == 0:
            snaps_u.append(np.asarray(u).copy())
            snaps_v.append(np.asarray(v).copy())
    return (np.array(snaps_u), np.array(snaps_v), steps, blow)
