"""Distorted Fourier transforms and the spectral norm suite.

The tabulated eigenfunctions carry the far-field normalization
field = 2 Re(a sigma e^{i r xi}) / sqrt(r) with |a| = sqrt(2/pi),
which makes the family 4x delta-normalized in L^2(r dr); the
transforms here use the delta-normalized family (half the tabulated
columns) in both directions so that Plancherel and the inversion
formula hold with plain dxi, with no spectral weight.

The forward transform is a radial quadrature of f against the family,
taken in the improper sense: a smooth taper chi_{<=M} is applied and
M is doubled, with consecutive results required to agree in L^2(dxi)
before the last one is accepted.  The radial nodes resolve phases
r*xi only up to a fixed step; input mass at radii where the top grid
frequency goes unresolved would alias into the density, so the
forward transform refuses such inputs.

The inverse transform is assembled in two zones: for r xi below the
far-field window the nodal interpolant of phi_xi(r) G(xi) is smooth
and the panel weights integrate it; beyond, phi_xi(r) = 2 Re(a sigma
e^{i r xi})/sqrt(r) splits into a slow amplitude times e^{i r xi} and
each panel is integrated by Filon moments, so the phase is exact at
every radius.  On top of the transforms sit the dyadic
Littlewood-Paley projections, the X / LX norm report, the nonresonant
pairing against psi_0, and the spectral decay audit for nonresonant
data.

X is evaluated from the H-calculus density,

    ||u||_X = (sum_{k>=0} 4^k ||chi_k F_H u||^2)^{1/2}
              + sum_{k<0} |k|^{-1} ||chi_k F_H u||,

and LX by its defining pullback ||f||_LX = ||u||_X with Lu = f, i.e.
the X expression applied to F_Ht(f)/xi.  The dyadic Ht-calculus
display

    (sum_{k>=0} ||chi_k F_Ht f||^2)^{1/2}
        + sum_{k<0} (2^{-k}/|k|) ||chi_k F_Ht f||

is an equivalent norm, not an identity, so it is reported alongside
rather than used as the LX value; only the pullback makes
||L u||_LX = ||u||_X hold to transform accuracy.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field

import numpy as np

from .eigenbasis import Q_NEAR, _blend_weight
from .fields import RadialField, SpectralDensity
from .filon import legendre_moments, legendre_vinv
from .geometry import h1, h3, psi0_values
from .grids import chi_dyadic, smooth_taper

__all__ = [
    "NormReport",
    "transform",
    "band_limit",
    "project_dyadic",
    "norm_suite",
    "density_x_norm",
    "nonres_pairing",
    "project_nonres",
    "schwartz_suite",
    "spectral_decay_audit",
    "DYADIC_SUM_RANGE",
]

# k-window for the X / LX dyadic sums; pieces outside carry suite mass
# below double precision and are folded into the truncation remainder.
DYADIC_SUM_RANGE = (-12, 12)


def _radial_values(f, rgrid):
    if isinstance(f, RadialField):
        if f.grid.r.shape != rgrid.r.shape or not np.array_equal(
                f.grid.r, rgrid.r):
            raise ValueError("calculus/table mismatch: field lives on a "
                             "different radial grid than the table")
        return f.values
    v = np.asarray(f)
    if not np.iscomplexobj(v):
        v = v.astype(float)
    if v.shape != rgrid.r.shape:
        raise ValueError("radial samples do not match the table grid")
    if not np.all(np.isfinite(v)):
        raise ValueError("radial samples must be finite")
    return v


# Quadratic Savitzky-Golay smoother (5 nodes).  Its residual vanishes
# like s^4 for content whose phase advances s << 1 radians per node but
# stays O(1) for oscillations near the nodal Nyquist rate, so the
# residual mass flags input content the radial sampling cannot resolve.
_SG5 = np.array([-3.0, 12.0, 17.0, 12.0, -3.0]) / 35.0
_OSC_LIMIT = 1e-11


def _check_resolved(rgrid, v):
    tot = float(rgrid.integrate(np.abs(v) ** 2))
    if tot == 0.0:
        return
    sm = np.convolve(v, _SG5, mode="same")
    resid = v - sm
    resid[:2] = 0.0
    resid[-2:] = 0.0
    frac = float(rgrid.integrate(np.abs(resid) ** 2)) / tot
    if frac > _OSC_LIMIT:
        raise ValueError(
            f"tail estimate violation: a relative L^2 mass {frac:.3e} of "
            f"the input oscillates near the nodal Nyquist rate of the "
            f"radial grid (limit {_OSC_LIMIT:.1e}); such content cannot "
            f"be integrated against the tabulated eigenfunctions")


# Per-frequency Nyquist truncation for the forward quadrature: the row
# for xi only integrates over radii where the local phase step xi*dr
# stays below pi, with a smooth roll-off from pi/2.  For inputs that
# are smooth on the grid scale the dropped true tail is a
# non-stationary oscillatory integral and is negligible, while keeping
# those radii would alias the smooth mass into the density at the
# radius where xi*dr wraps through 2 pi.
_FWD_CACHE = weakref.WeakKeyDictionary()


def _forward_matrix(table, calculus):
    per = _FWD_CACHE.setdefault(table, {})
    if calculus in per:
        return per[calculus]
    mat = table.phi_matrix() if calculus == "H" else table.psi_matrix()
    r = table.rgrid.r
    dr = np.gradient(r)
    taper = smooth_taper(np.outer(table.fgrid.xi, dr), 0.5 * np.pi)
    per[calculus] = mat * taper
    return per[calculus]


def transform(table, f, direction="forward", calculus="H", tail_tol=1e-7):
    """Distorted Fourier transform against the tabulated eigenbasis.

    forward: f (RadialField or samples on the table's radial grid) ->
    SpectralDensity in the requested calculus.  The integral is taken
    in the improper sense: the integrand is tapered at scales
    r_max/8, r_max/4, r_max/2 and the three densities must agree in
    L^2(dxi) within tail_tol (relative), otherwise the input does not
    decay enough for the truncated domain.  Each density node only
    integrates over radii where the local phase step xi*dr is below
    the nodal Nyquist rate (smooth roll-off), and input content that
    itself oscillates near that rate is refused, since it can neither
    be integrated nor safely dropped.

    inverse: f (SpectralDensity, or density samples + calculus) ->
    RadialField with the matching space tag (a bare complex array when
    the density is complex).  The oscillatory far zone is synthesized
    with Filon panel moments, so the result is reliable at every
    radius, not just where the nodal sampling resolves e^{i r xi}.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    if calculus not in ("H", "Htilde"):
        raise ValueError("calculus must be 'H' or 'Htilde'")

    if direction == "forward":
        mat = _forward_matrix(table, calculus)
        v = _radial_values(f, table.rgrid)
        r = table.rgrid.r
        _check_resolved(table.rgrid, v)
        base = 0.5 * table.rgrid.quad_weights * r * v
        scales = [table.rgrid.r_max / 8.0, table.rgrid.r_max / 4.0,
                  table.rgrid.r_max / 2.0]
        dens = [mat @ (base * smooth_taper(r, m)) for m in scales]
        ref = float(np.sqrt(table.fgrid.integrate(np.abs(dens[-1]) ** 2)))
        for a, b in zip(dens, dens[1:]):
            drift = float(np.sqrt(table.fgrid.integrate(np.abs(b - a) ** 2)))
            if drift > tail_tol * max(ref, 1e-300):
                raise ValueError(
                    f"tail estimate violation: doubling the taper scale "
                    f"moved the density by {drift / max(ref, 1e-300):.3e} "
                    f"relative (tol {tail_tol:.1e}); input decays too "
                    f"slowly for the truncated domain")
        return SpectralDensity(table.fgrid, dens[-1], calculus)

    # inverse
    if isinstance(f, SpectralDensity):
        if f.calculus != calculus:
            raise ValueError(
                f"calculus/table mismatch: density is tagged "
                f"'{f.calculus}' but the '{calculus}' transform was asked")
        if not np.array_equal(f.fgrid.xi, table.fgrid.xi):
            raise ValueError("calculus/table mismatch: density lives on a "
                             "different frequency grid than the table")
        g = f.values
    else:
        g = np.asarray(f)
        if g.shape != table.fgrid.xi.shape:
            raise ValueError("density samples do not match the "
                             "frequency grid")
    out = _synthesis_matrix(table, calculus) @ g
    if np.iscomplexobj(out):
        return out
    tag = "map" if calculus == "H" else "gauge"
    return RadialField(table.rgrid, out, tag)


_SYNTH_CACHE = weakref.WeakKeyDictionary()


def _synthesis_matrix(table, calculus):
    """Dense inverse-transform matrix B with samples = B @ density.

    Near zone (r xi below the far window): phi_xi(r) is tabulated at
    the nodes and the xi-integrand is smooth there (at most a few
    phase radians per panel), so the plain panel weights apply.  Far
    zone: the integrand is W(r xi) S(r, xi) e^{i r xi} with the slow
    amplitude S = a sigma / sqrt(r); per panel the slow part is fitted
    by the 17-node Legendre interpolant and the phase is integrated
    exactly through Filon moments.  Both zones are linear in the
    density's nodal values, so the whole inverse collapses to one real
    matrix, cached per table and calculus.
    """
    per = _SYNTH_CACHE.setdefault(table, {})
    if calculus in per:
        return per[calculus]
    rg, fg = table.rgrid, table.fgrid
    r, xi = rg.r, fg.xi
    mat = table.phi_matrix() if calculus == "H" else table.psi_matrix()
    qq = r[:, None] * xi[None, :]
    wfar = _blend_weight(qq)
    bmat = 0.5 * mat.T * (1.0 - wfar) * fg.quad_weights[None, :]

    which = "phi" if calculus == "H" else "psi"
    slow = np.zeros((r.size, xi.size), dtype=complex)
    for j in range(xi.size):
        sel = qq[:, j] > Q_NEAR
        if sel.any():
            slow[sel, j] = table.slow_amplitude(j, r[sel], which)
    slow *= wfar

    vinv = legendre_vinv()
    for p, pan in enumerate(fg.panels):
        idx = np.arange(pan.start, pan.start + vinv.shape[0])
        if not np.any(slow[:, idx]):
            continue
        mom = legendre_moments(r * pan.half)      # (17, nr)
        tmat = np.einsum("ni,nm->im", mom, vinv)  # (nr, 17)
        phase = pan.half * np.exp(1j * r * pan.center)
        bmat[:, idx] += (tmat * phase[:, None] * slow[:, idx]).real
    per[calculus] = bmat
    return bmat


def band_limit(table, f, calculus="H", center=4.0, logwidth=1.0):
    """Concentrate the spectral density of f in the xi-grid interior.

    Returns (field, density): the forward density multiplied by the
    window exp(-(ln(xi/center)/logwidth)^2), and its synthesis.  The
    window is analytic on (0, inf), so the synthesized field decays
    quasi-exponentially (exp(-ln^2 r) type) and round trips cleanly on
    the truncated domain.  A generic Schwartz function does not: its
    density keeps mass outside any finite xi-window (a resonant
    1/(sqrt(xi) log xi) tail at the bottom whenever the phi_0 pairing
    is nonzero, and an algebraic tail at the top whenever the origin
    behavior is not matched to the calculus), and cutoff windows of
    finite smoothness leave r-tails too fat for the taper ladder.
    """
    dens = transform(table, f, "forward", calculus)
    xi = table.fgrid.xi
    win = np.exp(-(np.log(xi / center) / logwidth) ** 2)
    wdens = SpectralDensity(table.fgrid, win * dens.values, calculus)
    return transform(table, wdens, "inverse", calculus), wdens


def project_dyadic(density, k):
    """Littlewood-Paley piece P_k: multiply by the dyadic cutoff chi_k.

    chi_k is supported on [2^(k-1), 2^(k+1)] and the family telescopes
    to 1, so summing P_k over the grid's octave range (k_lo..k_hi
    inclusive, the edge pieces complete the partition) reproduces the
    density.
    """
    fg = density.fgrid
    if not (fg.k_lo <= k <= fg.k_hi):
        raise ValueError(f"dyadic index k={k} outside the grid octave "
                         f"range [{fg.k_lo}, {fg.k_hi}]")
    return density.copy_with(density.values * chi_dyadic(fg.xi, k))


# ---------------------------------------------------------------------------
# norm suite


@dataclass(frozen=True)
class NormReport:
    """Radial and spectral norms of one function, all nonnegative."""

    l2_rdr: float
    l1_rdr: float
    linf: float
    h1e_dot: float
    h1e: float
    x: float
    lx: float
    lx_dyadic: float
    trunc_x: float
    trunc_lx: float
    pieces_x: dict = field(default_factory=dict)
    pieces_lx: dict = field(default_factory=dict)

    _SCALARS = ("l2_rdr", "l1_rdr", "linf", "h1e_dot", "h1e", "x", "lx",
                "lx_dyadic", "trunc_x", "trunc_lx")

    def __post_init__(self):
        for name in self._SCALARS:
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0.0):
                raise ValueError(f"norm entry {name} must be a nonnegative "
                                 f"finite real, got {val!r}")
        for d in (self.pieces_x, self.pieces_lx):
            for k, p in d.items():
                if not (np.isfinite(p) and p >= 0.0):
                    raise ValueError(f"dyadic piece k={k} must be "
                                     f"nonnegative, got {p!r}")

    def as_dict(self):
        out = {name: float(getattr(self, name)) for name in self._SCALARS}
        out["pieces_x"] = {str(k): float(v)
                           for k, v in sorted(self.pieces_x.items())}
        out["pieces_lx"] = {str(k): float(v)
                            for k, v in sorted(self.pieces_lx.items())}
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def read_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        pieces_x = {int(k): v for k, v in raw.pop("pieces_x").items()}
        pieces_lx = {int(k): v for k, v in raw.pop("pieces_lx").items()}
        return cls(pieces_x=pieces_x, pieces_lx=pieces_lx, **raw)


def _sum_range(fgrid):
    return range(max(fgrid.k_lo, DYADIC_SUM_RANGE[0]),
                 min(fgrid.k_hi, DYADIC_SUM_RANGE[1]) + 1)


def _pieces(fgrid, values):
    out = {}
    for k in _sum_range(fgrid):
        cut = chi_dyadic(fgrid.xi, k)
        out[k] = float(np.sqrt(fgrid.integrate((cut * np.abs(values)) ** 2)))
    return out


def _x_sum(pieces):
    hi = sum(4.0 ** k * p * p for k, p in pieces.items() if k >= 0)
    lo = sum(p / abs(k) for k, p in pieces.items() if k < 0)
    return float(np.sqrt(hi) + lo)


def _lx_display_sum(pieces):
    hi = sum(p * p for k, p in pieces.items() if k >= 0)
    lo = sum(2.0 ** (-k) * p / abs(k) for k, p in pieces.items() if k < 0)
    return float(np.sqrt(hi) + lo)


def _trunc_remainder(fgrid, values):
    cover = np.zeros_like(fgrid.xi)
    for k in _sum_range(fgrid):
        cover += chi_dyadic(fgrid.xi, k)
    rem = (1.0 - cover) * np.abs(values)
    return float(np.sqrt(fgrid.integrate(rem ** 2)))


def density_x_norm(fgrid, values):
    """X-type dyadic sum of density samples.

    Applied to an H-calculus density this is ||u||_X; applied to
    F_Ht(f)/xi it is the LX pullback.  Exposed so that audits working
    directly with densities need not synthesize and re-transform.
    """
    return _x_sum(_pieces(fgrid, values))


def norm_suite(table, f, tail_tol=1e-7):
    """Full norm report of a radial function (or of a density).

    A SpectralDensity input is inverse-transformed for the radial
    entries and supplies its own calculus side directly; the other
    side is recomputed by a forward transform, which is faithful for
    band-limited densities.
    """
    rgrid, fgrid = table.rgrid, table.fgrid
    if isinstance(f, SpectralDensity):
        back = transform(table, f, "inverse", f.calculus)
        v = back if isinstance(back, np.ndarray) else back.values
        if f.calculus == "H":
            fh = f
            ft = transform(table, v, "forward", "Htilde", tail_tol)
        else:
            ft = f
            fh = transform(table, v, "forward", "H", tail_tol)
    else:
        v = _radial_values(f, rgrid)
        fh = transform(table, v, "forward", "H", tail_tol)
        ft = transform(table, v, "forward", "Htilde", tail_tol)

    r = rgrid.r
    av = np.abs(v)
    l2 = float(np.sqrt(rgrid.integrate(av * av)))
    l1 = float(rgrid.integrate(av))
    linf = float(np.max(av))
    dv = rgrid.deriv(v)
    h1e_dot = float(np.sqrt(rgrid.integrate(np.abs(dv) ** 2 + (av / r) ** 2)))
    h1e = float(np.hypot(h1e_dot, l2))

    pieces_x = _pieces(fgrid, fh.values)
    pieces_lx = _pieces(fgrid, ft.values)
    return NormReport(
        l2_rdr=l2, l1_rdr=l1, linf=linf, h1e_dot=h1e_dot, h1e=h1e,
        x=_x_sum(pieces_x),
        lx=_x_sum(_pieces(fgrid, ft.values / fgrid.xi)),
        lx_dyadic=_lx_display_sum(pieces_lx),
        trunc_x=_trunc_remainder(fgrid, fh.values),
        trunc_lx=_trunc_remainder(fgrid, ft.values),
        pieces_x=pieces_x, pieces_lx=pieces_lx)


# ---------------------------------------------------------------------------
# nonresonant pairing and projection


def nonres_pairing(rgrid, f, tail_tol=1e-8, full=False):
    """Pairing <f, psi_0> in L^2(r dr) with a geometric tail bound.

    psi_0 grows logarithmically, so the truncated quadrature is only
    trustworthy when the integrand dies fast: the per-octave maxima of
    |f psi_0| r^2 (the log-r density of the pairing) must contract
    toward r_max, and the geometric extrapolation of the tail must
    stay below tail_tol relative to the absolute pairing mass.
    """
    v = _radial_values(f, rgrid)
    r = rgrid.r
    p0 = psi0_values(r)
    value = float(rgrid.integrate(v * p0))
    scale = float(rgrid.integrate(np.abs(v * p0)))
    g = np.abs(v * p0) * r * r
    last = r >= rgrid.r_max / 2.0
    prev = (r >= rgrid.r_max / 4.0) & ~last
    m1 = float(np.max(g[last]))
    m0 = float(np.max(g[prev]))
    if m1 == 0.0:
        bound = 0.0
    elif m1 >= m0:
        bound = float("inf")
    else:
        rho = m1 / m0
        bound = float(np.log(2.0) * m1 * rho / (1.0 - rho))
    if bound > tail_tol * max(scale, 1e-300):
        raise ValueError(
            f"pairing tail bound exceeds tolerance: estimated tail "
            f"{bound:.3e} vs {tail_tol:.1e} x mass {scale:.3e}; the "
            f"integrand decays too slowly for the truncated domain")
    if full:
        return {"value": value, "tail_bound": bound, "scale": scale}
    return value


def _default_mold(r):
    return r * np.exp(-1.5 * r * r)


def project_nonres(rgrid, f, mold=None):
    """Remove the resonant part: f - c*g0 with <f - c*g0, psi_0> = 0.

    g0 is a fixed Schwartz mold with nonvanishing psi_0 pairing (psi_0
    is strictly negative for r > 0, so any positive mold works).
    Returns the projected samples.
    """
    v = _radial_values(f, rgrid)
    g0 = _default_mold(rgrid.r) if mold is None else _radial_values(
        mold, rgrid)
    p0 = psi0_values(rgrid.r)
    denom = float(rgrid.integrate(g0 * p0))
    if denom == 0.0:
        raise ValueError("mold has zero pairing against psi_0")
    c = float(rgrid.integrate(v * p0)) / denom
    return v - c * g0


# ---------------------------------------------------------------------------
# fixed Schwartz test suite

# (name, p, a, b, c) for f = r^p exp(-a (r-c)^2) cos(b r); all members
# vanish at the origin, and every envelope is dead by r ~ 7.5 so that
# no mass sits beyond the alias radius of the top frequency octave.
_SUITE_SPEC = [
    ("gauss_narrow", 1, 2.0, 0.0, 0.0),
    ("gauss_unit", 1, 1.0, 0.0, 0.0),
    ("gauss_broad", 1, 0.5, 0.0, 0.0),
    ("gauss_wide", 1, 0.375, 0.0, 0.0),
    ("gauss_broadest", 1, 0.28, 0.0, 0.0),
    ("quadratic_unit", 2, 1.0, 0.0, 0.0),
    ("quadratic_broad", 2, 0.3, 0.0, 0.0),
    ("cubic_unit", 3, 1.0, 0.0, 0.0),
    ("cubic_broad", 3, 0.5, 0.0, 0.0),
    ("cubic_narrow", 3, 2.0, 0.0, 0.0),
    ("quintic_unit", 5, 1.0, 0.0, 0.0),
    ("quintic_broad", 5, 0.5, 0.0, 0.0),
    ("osc_slow", 1, 1.0, 1.0, 0.0),
    ("osc_unit", 1, 1.0, 2.0, 0.0),
    ("osc_fast", 1, 0.5, 4.0, 0.0),
    ("osc_fastest", 1, 0.5, 8.0, 0.0),
    ("osc_cubic", 3, 1.0, 3.0, 0.0),
    ("bump_mid", 1, 1.0, 0.0, 3.0),
    ("bump_osc", 1, 2.0, 2.0, 4.0),
    ("bump_far", 1, 2.0, 0.0, 4.0),
]


def _member_values(r, p, a, b, c):
    env = np.exp(-a * (r - c) ** 2)
    cs, sn = np.cos(b * r), np.sin(b * r)
    f = r ** p * env * cs
    df = (p * r ** (p - 1) * cs - 2.0 * a * (r - c) * r ** p * cs
          - b * r ** p * sn) * env
    return f, df


def schwartz_suite(rgrid):
    """The fixed 20-member Schwartz suite with exact L-images.

    Each member is returned as (name, f, lf) with lf = L f = f' +
    h3 f / r computed from the closed-form derivative.  Members are
    orthogonalized against phi_0 = h1 in L^2(r dr) (subtracting a
    multiple of a fixed mold), so their H-calculus densities carry no
    resonant mass below the grid's frequency cutoff; their L-images
    are then automatically nonresonant against psi_0, since
    <L f, psi_0> = <f, L* psi_0> = <f, phi_0> = 0.
    """
    r = rgrid.r
    p0 = h1(r)
    t3 = h3(r)
    g0 = _default_mold(r)
    dg0 = (1.0 - 3.0 * r * r) * np.exp(-1.5 * r * r)
    lg0 = dg0 + t3 * g0 / r
    denom = float(rgrid.integrate(g0 * p0))
    out = []
    for name, p, a, b, c in _SUITE_SPEC:
        f, df = _member_values(r, p, a, b, c)
        lf = df + t3 * f / r
        cc = float(rgrid.integrate(f * p0)) / denom
        out.append((name, f - cc * g0, lf - cc * lg0))
    return out


# ---------------------------------------------------------------------------
# spectral decay audit


def spectral_decay_audit(table, f, n_large=6, xi_fit_min=2.0 ** -9,
                         require_nonresonant=True, pairing_tol=1e-6):
    """Small- and large-frequency decay of the Ht-calculus density.

    For nonresonant f the density obeys |F(xi)| <~ xi^(5/2)/<log xi>
    at small xi and decays super-polynomially at large xi.  The audit
    reports the sup constants on xi <= 1/8 (weighted by
    <log xi>/xi^(5/2)) and on xi >= 8 (weighted by <xi>^n_large),
    plus fitted log-log slopes; the small-xi fit starts at xi_fit_min
    to stay above the quadrature noise floor.  With
    require_nonresonant a nonzero psi_0 pairing raises instead of
    producing a meaningless fit.
    """
    rgrid, fgrid = table.rgrid, table.fgrid
    v = _radial_values(f, rgrid)
    pair = nonres_pairing(rgrid, v, full=True)
    rel = abs(pair["value"]) / max(pair["scale"], 1e-300)
    if require_nonresonant and rel > pairing_tol:
        raise ValueError(
            f"nonzero pairing against psi_0 (relative size {rel:.2e}): "
            f"project the resonant part before the decay audit")
    dens = transform(table, v, "forward", "Htilde")
    absf = np.abs(dens.values)
    xi = fgrid.xi
    wlog = np.sqrt(1.0 + np.log(xi) ** 2)

    small = xi <= 2.0 ** -3
    sup_small = float(np.max(absf[small] * wlog[small] / xi[small] ** 2.5))
    fit = small & (xi >= xi_fit_min)
    y = np.log(np.maximum(absf[fit] * wlog[fit], 1e-300))
    exp_small = float(np.polyfit(np.log(xi[fit]), y, 1)[0])

    large = xi >= 2.0 ** 3
    wpoly = (1.0 + xi[large] ** 2) ** (n_large / 2.0)
    sup_large = float(np.max(wpoly * absf[large]))
    alive = large & (absf > 1e-250)
    if np.count_nonzero(alive) >= 8:
        exp_large = float(np.polyfit(np.log(xi[alive]),
                                     np.log(absf[alive]), 1)[0])
    else:
        exp_large = float("-inf")

    return {
        "pairing_value": pair["value"],
        "pairing_rel": rel,
        "pairing_tail_bound": pair["tail_bound"],
        "sup_small": sup_small,
        "exp_small": exp_small,
        "sup_large": sup_large,
        "exp_large": exp_large,
        "n_large": int(n_large),
    }
