"""Backend dispatch for the compute kernels.

The compiled extension _fastkernels is preferred when importable; the
pure-numpy module _kernels_py is the always-available fallback.  Set
COROTWAVE_BACKEND=pure or =fast to force a choice (forcing "fast"
raises if the extension is missing).  Both implement identical
contracts; tests/test_kernels.py pins their agreement.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

POT_MAP = _kernels_py.POT_MAP
POT_GAUGE = _kernels_py.POT_GAUGE

_requested = os.environ.get("COROTWAVE_BACKEND", "auto").lower()
_impl = None
if _requested in ("auto", "fast"):
    try:
        from . import _fastkernels as _impl
        BACKEND = "fast"
    except ImportError:
        if _requested == "fast":
            raise ImportError(
                "COROTWAVE_BACKEND=fast but the compiled extension is "
                "unavailable; rebuild with Cython or use the pure backend")
        _impl = _kernels_py
        BACKEND = "pure"
elif _requested == "pure":
    _impl = _kernels_py
    BACKEND = "pure"
else:
    raise ValueError(f"unknown COROTWAVE_BACKEND={_requested!r}")


def backend_name():
    return BACKEND


def get_backend(name=None):
    """Return the kernel module for `name` (None: the active choice)."""
    if name in (None, BACKEND):
        return _impl
    if name == "pure":
        return _kernels_py
    if name == "fast":
        from . import _fastkernels
        return _fastkernels
    raise ValueError(name)


def sweep_regular(r_ladder, out_idx, xi, pot, y0):
    return _impl.sweep_regular(
        np.ascontiguousarray(r_ladder, dtype=float),
        np.ascontiguousarray(out_idx, dtype=np.int64),
        np.ascontiguousarray(xi, dtype=float), int(pot),
        np.ascontiguousarray(y0, dtype=float))


def sweep_jost(q_ladder, out_idx, xi, pot, y0):
    return _impl.sweep_jost(
        np.ascontiguousarray(q_ladder, dtype=float),
        np.ascontiguousarray(out_idx, dtype=np.int64),
        np.ascontiguousarray(xi, dtype=float), int(pot),
        np.ascontiguousarray(y0, dtype=complex))


def leapfrog(u0, v0, h, dt, nsteps, snap_every, bc, blowup_level):
    return _impl.leapfrog(
        np.ascontiguousarray(u0, dtype=float),
        np.ascontiguousarray(v0, dtype=float),
        float(h), float(dt), int(nsteps), int(snap_every),
        float(bc), float(blowup_level))


def build_ladder(r0, r1, xi_max, dphase=0.035, out_points=None):
    """Step ladder for the outward sweep, RK4 phase rule h*k <= dphase.

    The local wavenumber is bounded by xi_max + 1.2/r (potential and
    centrifugal scales), so steps are h = dphase / (xi_max + 1.2/r).
    out_points (sorted, within [r0, r1]) are merged exactly into the
    ladder; returns (ladder, out_idx) with ladder[out_idx] == out_points.
    """
    if not r1 > r0:
        raise ValueError("need r1 > r0")
    pts = [] if out_points is None else list(np.asarray(out_points, dtype=float))
    if pts and (pts[0] < r0 - 1e-12 or pts[-1] > r1 + 1e-12):
        raise ValueError("out_points outside ladder range")
    targets = np.unique(np.concatenate([[r0, r1], pts]))
    ladder = [targets[0]]
    for t_next in targets[1:]:
        r = ladder[-1]
        while True:
            h = dphase / (xi_max + 1.2 / r)
            if r + h >= t_next:
                break
            # avoid a tiny final step: split the remainder evenly
            nrem = int(np.ceil((t_next - r) / h))
            h = (t_next - r) / nrem
            r = r + h
            ladder.append(r)
        ladder.append(t_next)
    ladder = np.asarray(ladder)
    if pts:
        out_idx = np.nonzero(np.isin(ladder, np.asarray(pts)))[0]
    else:
        out_idx = np.array([], dtype=np.int64)
    return ladder, out_idx.astype(np.int64)


def build_q_ladder(q_start, q_end, dq=0.05, out_points=None):
    """Decreasing ladder for the inward amplitude sweep (step rule |h|<=dq).

    out_points (decreasing or increasing; matched after sorting
    decreasing) are merged exactly.
    """
    if not q_start > q_end:
        raise ValueError("need q_start > q_end")
    pts = [] if out_points is None else sorted(
        np.asarray(out_points, dtype=float), reverse=True)
    targets = np.unique(np.concatenate([[q_start, q_end], pts]))[::-1]
    ladder = [targets[0]]
    for t_next in targets[1:]:
        r = ladder[-1]
        span = r - t_next
        nstep = max(1, int(np.ceil(span / dq)))
        h = span / nstep
        for _ in range(nstep - 1):
            r = r - h
            ladder.append(r)
        ladder.append(t_next)
    ladder = np.asarray(ladder)
    if pts:
        out_idx = np.nonzero(np.isin(ladder, np.asarray(pts)))[0]
    else:
        out_idx = np.array([], dtype=np.int64)
    return ladder, out_idx.astype(np.int64)
