"""Radial and frequency grids.

Radial grids are strictly increasing node sets on (0, r_max] used for
sampling fields and for quadrature against the measure r dr.  The default
grid is log-uniform, which concentrates nodes near the origin where the
soliton and the spectral weights vary fastest.  Composite grids union a
log-uniform base with a uniformly spaced band, used to resolve light-cone
features of time-dependent fields near r = t.

Frequency grids are organized in dyadic octaves [2^k, 2^(k+1)].  Each
octave is subdivided into panels carrying Chebyshev-Lobatto nodes, because
every xi-integral downstream is evaluated panel-by-panel with a
Filon-Legendre rule (see filon.py).  Octaves whose linear width exceeds
the structural scale of Schwartz-data spectral densities get more panels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PANEL_PTS = 17  # Chebyshev-Lobatto points per panel, degree-16 interpolation


# ---------------------------------------------------------------------------
# generic nonuniform-grid calculus helpers


def _lagrange_quad_weights(x):
    """Composite 4th-order quadrature weights on a strictly increasing grid.

    Each interval [x_i, x_{i+1}] is integrated with the cubic through the
    four nearest nodes (one-sided at the ends).  Returns w with
    integral(f) ~= sum(w * f).
    """
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 nodes")
    w = np.zeros(n)
    # stencil start index for each interval
    starts = np.clip(np.arange(n - 1) - 1, 0, n - 4)
    # Build Vandermonde systems in a shifted/scaled coordinate for stability.
    idx = starts[:, None] + np.arange(4)[None, :]
    xs = x[idx]  # (n-1, 4)
    a = x[:-1]
    b = x[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = (xs - mid[:, None]) / half[:, None]
    # moments of t^m over [-1, 1]
    mom = np.array([2.0, 0.0, 2.0 / 3.0, 0.0])
    v = t[:, None, :] ** np.arange(4)[None, :, None]  # (n-1, m, j)
    rhs = np.broadcast_to(mom[:, None], (n - 1, 4, 1)).copy()
    wloc = np.linalg.solve(v, rhs)[..., 0]
    wloc *= half[:, None]
    np.add.at(w, idx, wloc)
    return w


def _interval_cubic_integrals(x, f):
    """Per-interval integrals of the local interpolating cubic.

    Returns I with I[i] ~= integral of f over [x_i, x_{i+1}], 4th order.
    Accepts f with shape (..., n).
    """
    n = x.size
    starts = np.clip(np.arange(n - 1) - 1, 0, n - 4)
    idx = starts[:, None] + np.arange(4)[None, :]
    xs = x[idx]
    a, b = x[:-1], x[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    t = (xs - mid[:, None]) / half[:, None]
    mom = np.array([2.0, 0.0, 2.0 / 3.0, 0.0])
    v = t[:, None, :] ** np.arange(4)[None, :, None]
    rhs = np.broadcast_to(mom[:, None], (n - 1, 4, 1)).copy()
    wloc = np.linalg.solve(v, rhs)[..., 0]
    wloc *= half[:, None]
    fi = f[..., idx]
    return np.einsum("ij,...ij->...i", wloc, fi)


def _fd_weights(x, n_stencil=5, order=1):
    """Rows of finite-difference weights for the first or second derivative.

    5-point stencils give 4th-order first derivatives and at least
    3rd-order second derivatives on smoothly graded grids.
    """
    n = x.size
    m = n_stencil
    starts = np.clip(np.arange(n) - m // 2, 0, n - m)
    idx = starts[:, None] + np.arange(m)[None, :]
    dx = x[idx] - x[:, None]
    scale = np.abs(dx).max(axis=1)
    t = dx / scale[:, None]
    v = np.transpose(t[:, :, None] ** np.arange(m)[None, None, :], (0, 2, 1))
    rhs = np.zeros((n, m, 1))
    if order == 1:
        rhs[:, 1, 0] = 1.0
    else:
        rhs[:, 2, 0] = 2.0
    wloc = np.linalg.solve(v, rhs)[..., 0]
    wloc /= scale[:, None] ** order
    return idx, wloc


class RadialGrid:
    """Strictly increasing radial nodes with quadrature and stencil calculus.

    Parameters
    ----------
    nodes : array
        Strictly increasing, nodes[0] > 0.
    descriptor : dict, optional
        Grading metadata, serialized alongside field CSVs.
    """

    def __init__(self, nodes, descriptor=None):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 8:
            raise ValueError("need a 1-d grid with at least 8 nodes")
        if nodes[0] <= 0.0:
            raise ValueError("first node must be positive")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        self.r = nodes
        self.n = nodes.size
        self.r_min = float(nodes[0])
        self.r_max = float(nodes[-1])
        self.descriptor = descriptor or {"type": "custom"}
        self._check_octave_density()
        self._wq = None
        self._d1 = None
        self._d2 = None

    def _check_octave_density(self):
        k_lo = int(np.floor(np.log2(self.r_min)))
        k_hi = int(np.ceil(np.log2(self.r_max)))
        edges = 2.0 ** np.arange(k_lo, k_hi + 1)
        counts, _ = np.histogram(self.r, bins=edges)
        # only interior octaves fully covered by the grid are constrained
        full = (edges[:-1] >= self.r_min) & (edges[1:] <= self.r_max)
        if np.any(counts[full] < 3):
            raise ValueError("grid has an octave with fewer than 3 nodes")

    @classmethod
    def log_spaced(cls, n=4096, r_min=1e-3, r_max=512.0):
        nodes = np.exp(np.linspace(np.log(r_min), np.log(r_max), n))
        nodes[-1] = r_max
        desc = {"type": "log", "n": n, "r_min": r_min, "r_max": r_max}
        return cls(nodes, desc)

    @classmethod
    def with_band(cls, base, center, halfwidth, dr):
        """Union of a base grid and a uniform band, for light-cone sampling."""
        lo = max(base.r_min, center - halfwidth)
        hi = min(base.r_max, center + halfwidth)
        band = np.arange(lo, hi + 0.5 * dr, dr)
        nodes = np.union1d(base.r, band)
        # drop near-duplicates that would spoil stencil conditioning
        keep = np.concatenate([[True], np.diff(nodes) > 1e-9 * np.maximum(nodes[1:], 1.0)])
        desc = dict(base.descriptor)
        desc = {"type": "composite", "base": desc,
                "band": {"center": center, "halfwidth": halfwidth, "dr": dr}}
        return cls(nodes[keep], desc)

    # -- calculus ----------------------------------------------------------

    @property
    def quad_weights(self):
        """Weights for integral f(r) dr (plain dr measure)."""
        if self._wq is None:
            self._wq = _lagrange_quad_weights(self.r)
        return self._wq

    def integrate(self, f, measure="rdr"):
        f = np.asarray(f)
        if measure == "rdr":
            return (self.quad_weights * self.r * f).sum(axis=-1)
        if measure == "dr":
            return (self.quad_weights * f).sum(axis=-1)
        raise ValueError(measure)

    def cumulative_to_rmax(self, f):
        """g(r_i) = integral of f over [r_i, r_max], 4th order, plain dr."""
        f = np.asarray(f)
        inc = _interval_cubic_integrals(self.r, f)
        out = np.zeros(f.shape, dtype=inc.dtype)
        out[..., :-1] = np.cumsum(inc[..., ::-1], axis=-1)[..., ::-1]
        return out

    def deriv(self, f, order=1):
        if order == 1:
            if self._d1 is None:
                self._d1 = _fd_weights(self.r, 5, 1)
            idx, w = self._d1
        elif order == 2:
            if self._d2 is None:
                self._d2 = _fd_weights(self.r, 5, 2)
            idx, w = self._d2
        else:
            raise ValueError(order)
        f = np.asarray(f)
        return np.einsum("ij,...ij->...i", w, f[..., idx])

    def to_json(self):
        return json.dumps(self.descriptor, sort_keys=True)


# ---------------------------------------------------------------------------
# frequency grid


@dataclass
class Panel:
    """One Filon panel: nodes[sl] are 17 Chebyshev-Lobatto points."""

    start: int
    center: float
    half: float

    @property
    def sl(self):
        return slice(self.start, self.start + PANEL_PTS)


def _lobatto():
    m = np.arange(PANEL_PTS)
    return -np.cos(np.pi * m / (PANEL_PTS - 1))


class FrequencyGrid:
    """Dyadic-octave frequency grid with Chebyshev-Lobatto panel structure.

    Octaves [2^k, 2^(k+1)] for k in [k_lo, k_hi) are split into
    panels_per_octave[k] equal panels; each panel carries 17 Lobatto nodes
    with shared endpoints.  Every octave holds at least 16 nodes.
    """

    def __init__(self, k_lo=-13, k_hi=8, panels_per_octave=None):
        if k_lo > -6 or k_hi < 6:
            raise ValueError("octave range must cover [-6, 6]")
        self.k_lo = k_lo
        self.k_hi = k_hi
        tloc = _lobatto()
        nodes = []
        panels = []
        pos = 0
        self._octave_of_panel = []
        for k in range(k_lo, k_hi):
            npan = 1 if panels_per_octave is None else panels_per_octave.get(k, 1)
            edges = 2.0 ** (k + np.linspace(0.0, 1.0, npan + 1))
            for p in range(npan):
                a, b = edges[p], edges[p + 1]
                c, h = 0.5 * (a + b), 0.5 * (b - a)
                pts = c + h * tloc
                if nodes:
                    pts = pts[1:]  # shared endpoint
                    start = pos - 1
                else:
                    start = 0
                nodes.append(pts)
                panels.append(Panel(start, c, h))
                self._octave_of_panel.append(k)
                pos = start + PANEL_PTS
        self.xi = np.concatenate(nodes)
        # Lobatto interior points are analytic; guard exact monotonicity
        assert np.all(np.diff(self.xi) > 0)
        self.panels = panels
        self.xi_min = float(self.xi[0])
        self.xi_max = float(self.xi[-1])
        self._wq = None
        counts = self.octave_counts()
        if min(counts.values()) < 16:
            raise ValueError("an octave has fewer than 16 nodes")

    @classmethod
    def default(cls):
        ppo = {0: 1, 1: 2, 2: 3, 3: 6}
        return cls(-13, 8, ppo)

    def dyadic_index(self):
        """Dyadic block k of each node (xi ~ 2^k), clipped to the octave range."""
        k = np.floor(np.log2(self.xi)).astype(int)
        return np.clip(k, self.k_lo, self.k_hi - 1)

    def octave_counts(self):
        out = {}
        for k in range(self.k_lo, self.k_hi):
            lo, hi = 2.0**k, 2.0 ** (k + 1)
            out[k] = int(np.count_nonzero((self.xi >= lo) & (self.xi < hi)))
        return out

    @property
    def quad_weights(self):
        """Weights for integral f(xi) dxi, exact on per-panel interpolants."""
        if self._wq is None:
            x = _lobatto()
            v = np.polynomial.legendre.legvander(x, PANEL_PTS - 1)
            vinv = np.linalg.inv(v)
            w_ref = 2.0 * vinv[0]  # integral of interpolant over [-1,1]
            w = np.zeros(self.xi.size)
            for p in self.panels:
                w[p.sl] += w_ref * p.half
            self._wq = w
        return self._wq

    def integrate(self, f):
        return (self.quad_weights * np.asarray(f)).sum(axis=-1)

    def descriptor(self):
        return {"k_lo": self.k_lo, "k_hi": self.k_hi,
                "panels": [[p.start, p.center, p.half] for p in self.panels]}

    @classmethod
    def from_descriptor(cls, desc):
        """Rebuild the grid a descriptor() came from."""
        k_lo, k_hi = int(desc["k_lo"]), int(desc["k_hi"])
        ppo = {}
        for _, center, _ in desc["panels"]:
            k = int(np.floor(np.log2(center)))
            ppo[k] = ppo.get(k, 0) + 1
        grid = cls(k_lo, k_hi, ppo)
        got = grid.descriptor()["panels"]
        want = [[float(s), float(c), float(h)] for s, c, h in desc["panels"]]
        if not np.allclose(got, want, rtol=0.0, atol=1e-12):
            raise ValueError("descriptor does not match a dyadic panel grid")
        return grid


# ---------------------------------------------------------------------------
# smooth dyadic cutoffs


def _bump_step(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        fa = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        fb = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return fa / (fa + fb)


def chi_dyadic(xi, k):
    """Smooth bump of the dyadic partition: supp in [2^(k-1), 2^(k+1)].

    sum over all integer k equals 1 for xi > 0 (telescoping).
    """
    s = np.log2(np.maximum(np.asarray(xi, dtype=float), 1e-300))
    return _bump_step(s - (k - 1)) - _bump_step(s - k)


def chi_le(x):
    """Smooth cutoff ~1 for x <= 1, 0 for x >= 2 (argument pre-scaled)."""
    s = np.log2(np.maximum(np.asarray(x, dtype=float), 1e-300))
    return 1.0 - _bump_step(s)


def smooth_taper(r, m):
    """chi_{<= M} taper used for singular-sense transforms."""
    return chi_le(np.asarray(r, dtype=float) / m)
