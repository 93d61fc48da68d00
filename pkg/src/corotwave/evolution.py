"""Free waves in the gauge calculus and the Duhamel operator from infinity.

A free gauge wave with data (w0, w1) at t = 0 is represented spectrally:
with f_0 = F_Ht(w0) and f_1 = F_Ht(w1),

    bw(t) = int psi_xi(r) [ f_0 cos(t xi) + xi^{-1} f_1 sin(t xi) ] dxi,

so each frequency rotates independently and the per-xi quadratic form
xi^2 f_0^2 + f_1^2 is conserved exactly in the representation.  The
data must satisfy the nonresonance condition <w, psi_0> = 0: a
resonant component feeds the xi -> 0 end of the density, where nothing
oscillates, and the dispersive decay audited here degrades.

The inhomogeneous problem with zero data at infinity is solved by the
Duhamel operator

    (Kf)(t)      = -F_Ht^{-1} int_t^inf xi^{-1} sin((t-s)xi) F_Ht f(s) ds,
    (dtK f)(t)   = -F_Ht^{-1} int_t^inf cos((t-s)xi) F_Ht f(s) ds,
    (LstarK f)(t) = -F_H^{-1} int_t^inf sin((t-s)xi) F_Ht f(s) ds,

the last through the intertwining F_H(Lstar psi) = xi F_Ht(psi), which
also gives the checkable identity ||Lstar Kf||_{L^2} = ||xi Fpsi||_{L^2}.
The s-integral is truncated at S_max and evaluated on panels graded
toward s = t (the sources of interest peak there); per panel the
source density is fitted by its 17-node Legendre interpolant in s and
the kernel is integrated exactly through Filon moments, per xi, with
no stationary-phase shortcuts.  The truncated tail is not estimated
from samples it cannot see: the source's decay hint alpha promises
s^(alpha+2) ||f(s)||_LX bounded, which bounds the dropped tail by
C S_max^{-(alpha+1)} sup_s s^(alpha+2) ||f(s)|| with C = 1/(alpha+1),
and each run reports that budget next to the quadrature's own
convergence proxy.

kest_audit monitors the weighted energy estimate for K: with
M = sup_s s^(alpha+2) ||f(s)||_LX the three ratios

    t^alpha ||Kf||_LX / M,   t^(alpha+1) ||dtK f||_LX / M,
    t^(alpha+1) ||Kf||_{H1e-dot} / M

stay bounded across dyadic t.  Everything here is vectorized over xi
(the per-xi columns are independent); sources are sampled once per
quadrature node and must be safe to call repeatedly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .eigenbasis import Q_NEAR, _blend_weight
from .fields import RadialField, SpectralDensity
from .filon import PanelQuad, graded_edges, legendre_moments, legendre_vinv
from .fourier import density_x_norm, nonres_pairing, transform

__all__ = [
    "WaveState",
    "SpaceTimeSource",
    "EvolutionRecord",
    "free_evolve",
    "decay_profile",
    "pointwise_decay_audit",
    "duhamel_K",
    "duhamel_residual",
    "kest_audit",
    "append_evolution_records",
    "read_evolution_records",
]


# ---------------------------------------------------------------------------
# free evolution


def _synthesize_wave(table, gvals, tau, calculus="Htilde"):
    """Re int psi_xi(r) G(xi) e^{i tau xi} dxi with the phase kept exact.

    The plain inverse transform integrates nodal values with panel
    weights, so a time phase e^{i tau xi} in the density would alias
    once tau exceeds the nodal xi-resolution (about 150 in the top
    octaves).  Here G holds only panel-smooth factors and the phase
    stays symbolic: the near-zone amplitude and the far-field slow
    amplitude are Legendre-fitted per panel, and the three phase
    families e^{i tau xi} (near) and e^{i (tau +- r) xi} (far split
    of 2 Re(a sigma e^{i r xi})/sqrt(r)) are integrated by exact
    Filon moments at every radius.
    """
    rg, fg = table.rgrid, table.fgrid
    r, xi = rg.r, fg.xi
    mat = table.phi_matrix() if calculus == "H" else table.psi_matrix()
    qq = r[:, None] * xi[None, :]
    wfar = _blend_weight(qq)
    near = 0.5 * mat.T * (1.0 - wfar)              # (nr, nxi)
    which = "phi" if calculus == "H" else "psi"
    slow = np.zeros((r.size, xi.size), dtype=complex)
    for j in range(xi.size):
        sel = qq[:, j] > Q_NEAR
        if sel.any():
            slow[sel, j] = table.slow_amplitude(j, r[sel], which)
    # delta-normalized far field = Re[slow_amplitude e^{i r xi}], so the
    # e^{+-i r xi} halves each carry 0.5 wfar slow_amplitude.
    slow *= 0.5 * wfar
    vinv = legendre_vinv()
    out = np.zeros(r.size, dtype=complex)
    for pan in fg.panels:
        idx = slice(pan.start, pan.start + vinv.shape[0])
        h, c = pan.half, pan.center
        g = gvals[idx]
        co = (near[:, idx] * g[None, :]) @ vinv.T            # (nr, 17)
        mom = legendre_moments(np.asarray(h * tau))          # (17,)
        out += h * np.exp(1j * tau * c) * (co @ mom)
        if not np.any(slow[:, idx]):
            continue
        co_p = (slow[:, idx] * g[None, :]) @ vinv.T
        mom_p = legendre_moments(h * (tau + r))              # (17, nr)
        out += (h * np.exp(1j * (tau + r) * c)
                * np.einsum("rn,nr->r", co_p, mom_p))
        co_m = (np.conj(slow[:, idx]) * g[None, :]) @ vinv.T
        mom_m = legendre_moments(h * (tau - r))
        out += (h * np.exp(1j * (tau - r) * c)
                * np.einsum("rn,nr->r", co_m, mom_m))
    return out.real


class WaveState:
    """Spectral position/velocity pair of a free gauge wave at time t.

    f0 and f1 are Htilde-calculus densities of the wave and its time
    derivative.  evolve() rotates each frequency exactly, so the
    spectral energy density xi^2 f0^2 + f1^2 never drifts.
    """

    def __init__(self, t, f0, f1):
        if not (isinstance(f0, SpectralDensity)
                and isinstance(f1, SpectralDensity)):
            raise TypeError("f0 and f1 must be SpectralDensity")
        if f0.calculus != "Htilde" or f1.calculus != "Htilde":
            raise ValueError("wave data must be Htilde-calculus densities")
        if f0.fgrid is not f1.fgrid and not np.array_equal(
                f0.fgrid.xi, f1.fgrid.xi):
            raise ValueError("f0 and f1 live on different frequency grids")
        self.t = float(t)
        self.f0 = f0
        self.f1 = f1

    @classmethod
    def from_fields(cls, table, w0, w1, pairing_tol=1e-8):
        """Transform data at t = 0, enforcing the nonresonance condition.

        pairing_tol bounds |<w, psi_0>| relative to the absolute pairing
        mass for both components; pass None to skip the check (control
        experiments only; the decay bounds fail for resonant data).
        """
        if pairing_tol is not None:
            for name, w in (("w0", w0), ("w1", w1)):
                rep = nonres_pairing(table.rgrid, w, full=True)
                if abs(rep["value"]) > pairing_tol * max(rep["scale"], 1e-300):
                    raise ValueError(
                        f"nonresonance violated: <{name}, psi_0> = "
                        f"{rep['value']:.3e} against pairing mass "
                        f"{rep['scale']:.3e} (tol {pairing_tol:.1e}); "
                        f"project the resonant part first")
        f0 = transform(table, w0, "forward", "Htilde")
        f1 = transform(table, w1, "forward", "Htilde")
        return cls(0.0, f0, f1)

    def energy_density(self):
        """Per-xi conserved quadratic form xi^2 f0^2 + f1^2."""
        xi = self.f0.fgrid.xi
        return (xi * self.f0.values) ** 2 + np.abs(self.f1.values) ** 2

    def spectral_energy(self):
        return float(self.f0.fgrid.integrate(self.energy_density()))

    def evolve(self, t):
        """Exact free evolution to absolute time t."""
        xi = self.f0.fgrid.xi
        dt = float(t) - self.t
        c, s = np.cos(xi * dt), np.sin(xi * dt)
        g0 = self.f0.values * c + self.f1.values * s / xi
        g1 = -xi * self.f0.values * s + self.f1.values * c
        return WaveState(t, self.f0.copy_with(g0), self.f1.copy_with(g1))

    def fields(self, table):
        """Synthesize (bw, d_t bw) at this state's own time."""
        return (transform(table, self.f0, "inverse", "Htilde"),
                transform(table, self.f1, "inverse", "Htilde"))

    def fields_at(self, table, t):
        """Synthesize (bw(t), d_t bw(t)) with the time phase kept exact.

        Evolving the nodal densities and then inverting is only valid
        while the rotation phases stay resolved on the xi panels; this
        route instead folds cos/sin(tau xi) into the Filon synthesis,
        so it is uniformly accurate in t.
        """
        tau = float(t) - self.t
        if tau == 0.0:
            return self.fields(table)
        xi = self.f0.fgrid.xi
        g_pos = self.f0.values - 1j * self.f1.values / xi
        g_vel = self.f1.values + 1j * xi * self.f0.values
        bw = _synthesize_wave(table, g_pos, tau)
        dtbw = _synthesize_wave(table, g_vel, tau)
        return (RadialField(table.rgrid, bw, "gauge"),
                RadialField(table.rgrid, dtbw, "gauge"))

    def position_at(self, table, t):
        """bw(t) alone (half the synthesis work of fields_at)."""
        tau = float(t) - self.t
        if tau == 0.0:
            return transform(table, self.f0, "inverse", "Htilde")
        xi = self.f0.fgrid.xi
        g_pos = self.f0.values - 1j * self.f1.values / xi
        return RadialField(table.rgrid,
                           _synthesize_wave(table, g_pos, tau), "gauge")


def free_evolve(table, w0, w1, t, pairing_tol=1e-8):
    """Evolve nonresonant gauge data freely to time t.

    Returns (bw(t), d_t bw(t)) as gauge fields.  Rejects data with a
    nonzero psi_0 pairing, since every decay estimate downstream
    assumes the density vanishes at the spectral bottom.
    """
    state = WaveState.from_fields(table, w0, w1, pairing_tol)
    return state.fields_at(table, t)


def decay_profile(r, t):
    """Dispersive envelope for free nonresonant waves.

    profile = log(1+r^2)/log<r+t> * <t+r>^(-1/2) <t-r>^(-5/2) / log<t-r>

    with <x> = sqrt(1+x^2) and the logs floored at 1 (log(e+|x|)), so
    the envelope is finite on the cone where <t-r> ~ 1.  sup |bw| /
    profile over space-time is then a bounded constant for data whose
    densities vanish like the nonresonant class at xi -> 0.
    """
    r = np.asarray(r, dtype=float)
    t = float(t)
    clog_sum = np.log(np.e + np.abs(r + t))
    clog_diff = np.log(np.e + np.abs(r - t))
    br_sum = np.hypot(1.0, r + t)
    br_diff = np.hypot(1.0, r - t)
    return (np.log1p(r * r) / clog_sum
            * br_sum ** -0.5 * br_diff ** -2.5 / clog_diff)


def _fit_exponent(times, sups):
    lt = np.log(np.asarray(times, dtype=float))
    lv = np.log(np.asarray(sups, dtype=float))
    return float(np.polyfit(lt, lv, 1)[0])


def pointwise_decay_audit(table, state, times=None, interior_radius=1.0,
                          cone_halfwidth=2.0):
    """Fit the dispersive decay of |bw| snapshots against the envelope.

    Snapshots at dyadic times (default 8..256, half-octave spacing) are
    compared to decay_profile pointwise; the report carries the global
    sup of the ratio, per-time interior sups (r <= interior_radius)
    with their fitted t-exponent, and the same along the cone collar
    |r - t| <= cone_halfwidth.
    """
    if times is None:
        times = [8.0 * 2.0 ** (0.5 * j) for j in range(11)]
    times = [float(t) for t in times]
    r = table.rgrid.r
    interior = r <= interior_radius
    sup_ratio = []
    interior_sup = []
    cone_sup = []
    for t in times:
        bw = state.position_at(table, t).values
        prof = decay_profile(r, t)
        sup_ratio.append(float(np.max(np.abs(bw) / prof)))
        interior_sup.append(float(np.max(np.abs(bw[interior]))))
        collar = np.abs(r - t) <= cone_halfwidth
        cone_sup.append(float(np.max(np.abs(bw[collar]))))
    return {
        "times": times,
        "sup_ratio": float(np.max(sup_ratio)),
        "sup_ratio_per_time": sup_ratio,
        "interior_sup": interior_sup,
        "interior_exponent": _fit_exponent(times, interior_sup),
        "cone_sup": cone_sup,
        "cone_exponent": _fit_exponent(times, cone_sup),
    }


# ---------------------------------------------------------------------------
# Duhamel operator from infinity


@dataclass
class SpaceTimeSource:
    """Space-time inhomogeneity f(s, .) with a decay promise.

    sampler(s) must return the Htilde density of f(s) (a
    SpectralDensity) or its radial samples (RadialField or array, which
    cost a forward transform per call).  alpha > 0 promises that
    s^(alpha+2) ||f(s)||_LX stays bounded on [t, inf), which is what
    makes the tail beyond S_max controllable.
    """

    sampler: object
    alpha: float
    label: str = ""

    def density(self, table, s):
        try:
            out = self.sampler(float(s))
        except Exception as exc:
            raise ValueError(
                f"source sampling failure at s={s:.6g}: {exc}") from exc
        if isinstance(out, SpectralDensity):
            if out.calculus != "Htilde":
                raise ValueError("source densities must be Htilde-calculus")
            if not np.array_equal(out.fgrid.xi, table.fgrid.xi):
                raise ValueError("source density lives on a different "
                                 "frequency grid than the table")
            vals = out.values
        else:
            vals = transform(table, out, "forward", "Htilde").values
        if np.iscomplexobj(vals):
            raise ValueError("source densities must be real")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"source sampling failure at s={s:.6g}: "
                             f"non-finite density")
        return vals


def _duhamel_panels(t, smax):
    # Graded toward s = t: the kernel is only C^0 in |t-s| at xi-extremes
    # and the admissible sources peak there.  The first panel width is
    # ~t/8 so the s^-(alpha+2) amplitude is a flat Legendre fit on every
    # panel; widths double away from t.
    n_levels = int(np.ceil(np.log2((smax - t) / (0.125 * t)))) if smax > 1.125 * t else 2
    n_levels = max(4, min(n_levels, 40))
    edges = graded_edges(t, smax, refine_at=t, n_levels=n_levels,
                         base_split=2)
    return PanelQuad.from_edges(edges)


def _duhamel_integrals(table, source, t, smax):
    """A(xi) = int_t^smax F(s, xi) e^{i (t-s) xi} ds by panel Filon.

    Im A and Re A are the sin/cos kernel integrals shared by all three
    operator variants.  Also returns the sampled source matrix and the
    panel set for tail/budget accounting.
    """
    pq = _duhamel_panels(t, smax)
    xi = table.fgrid.xi
    fmat = np.empty((pq.x.size, xi.size))
    for i, s in enumerate(pq.x):
        fmat[i] = source.density(table, s)
    co = pq.coeffs(fmat.T)                     # (nxi, npan, 17)
    acc = np.zeros(xi.size, dtype=complex)
    for p in range(pq.centers.size):
        h = pq.halves[p]
        mom = legendre_moments(-h * xi)        # (17, nxi)
        phase = h * np.exp(1j * (t - pq.centers[p]) * xi)
        acc += phase * np.einsum("xn,nx->x", co[:, p, :], mom)
    return acc, fmat, pq


def _tail_budget(source, fgrid, fmat, svals, smax, weighted):
    """Bound on the dropped s > smax mass, from the alpha promise.

    The kernel is bounded by 1 (cos/sin) or 1/xi (the K variant;
    weighted=True divides the density by xi first), so the tail is at
    most int_smax^inf ||F(s)(/xi)|| ds <= sup_s s^(alpha+2) ||F(s)(/xi)||
    * smax^-(alpha+1) / (alpha+1), with the sup estimated on the
    sampled window.
    """
    w = fgrid.quad_weights
    scale = fgrid.xi if weighted else np.ones_like(fgrid.xi)
    norms = np.sqrt(np.abs(fmat / scale) ** 2 @ w)
    sup = float(np.max(svals ** (source.alpha + 2.0) * norms))
    return sup * smax ** (-(source.alpha + 1.0)) / (source.alpha + 1.0)


_VARIANTS = ("K", "dtK", "LstarK")


def duhamel_K(table, source, t, variant="K", smax=4096.0, tail_tol=1e-5,
              full=False):
    """Duhamel operator with zero data at infinity, evaluated at time t.

    variant "K" returns the gauge wave psi(t) itself, "dtK" its time
    derivative, and "LstarK" the map-side function Lstar psi(t)
    (synthesized in the H calculus).  The s-integral runs over
    [t, smax] on panels graded toward t with exact per-xi Filon
    kernels; the dropped tail is bounded through the source's alpha
    hint and must stay below tail_tol relative to the result, else the
    run is refused.  full=True also returns a report with the density,
    the tail/quadrature budget split, and the panel count.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"variant must be one of {_VARIANTS}")
    if not (source.alpha > 0):
        raise ValueError("source decay hint alpha must be positive; the "
                         "tail beyond S_max is uncontrolled otherwise")
    t = float(t)
    if not (0.0 < t < smax):
        raise ValueError(f"need 0 < t < smax, got t={t}, smax={smax}")
    acc, fmat, pq = _duhamel_integrals(table, source, t, smax)
    xi = table.fgrid.xi
    if variant == "K":
        values, calculus = -acc.imag / xi, "Htilde"
    elif variant == "dtK":
        values, calculus = -acc.real, "Htilde"
    else:
        values, calculus = -acc.imag, "H"
    dens = SpectralDensity(table.fgrid, values, calculus)
    tail = _tail_budget(source, table.fgrid, fmat, pq.x, smax,
                        weighted=(variant == "K"))
    scale = dens.l2_norm()
    rel = tail / max(scale, 1e-300)
    if rel > tail_tol:
        raise ValueError(
            f"s-integral tail bound exceeds tolerance: dropped tail "
            f"<= {tail:.3e} is {rel:.3e} relative to the result "
            f"(tol {tail_tol:.1e}); raise smax or supply faster decay")
    field = transform(table, dens, "inverse", calculus)
    if not full:
        return field
    co = pq.coeffs(fmat.T)
    # Legendre tail coefficients as a quadrature convergence proxy
    qproxy = float(np.max(np.sum(np.abs(co[:, :, -2:]), axis=-1))
                   / max(np.max(np.abs(fmat)), 1e-300))
    info = {
        "density": dens,
        "variant": variant,
        "smax": smax,
        "n_panels": int(pq.centers.size),
        "n_source_samples": int(pq.x.size),
        "tail_bound": tail,
        "tail_relative": rel,
        "quad_proxy": qproxy,
    }
    return field, info


_FD5_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def duhamel_residual(table, source, t, dt=0.005, smax=4096.0,
                     operator="fd"):
    """Relative residual of (d_t^2 + Htilde) Kf = f at time t.

    d_t^2 is a 5-point finite difference of Kf across [t-2dt, t+2dt];
    Htilde is applied with 4th-order radial stencils (operator="fd",
    independent of the eigenbasis) or spectrally as xi^2 (operator=
    "spectral", isolating the s-quadrature).  Returns ||residual|| /
    ||f(t)|| in L^2(r dr).
    """
    from .geometry import apply_operator

    if operator not in ("fd", "spectral"):
        raise ValueError("operator must be 'fd' or 'spectral'")
    offsets = (np.arange(5) - 2) * dt
    dens = []
    for off in offsets:
        _, info = duhamel_K(table, source, t + off, "K", smax, full=True)
        dens.append(info["density"].values)
    d2 = _FD5_SECOND @ np.array(dens) / (dt * dt)
    xi = table.fgrid.xi
    psi_t = dens[2]
    if operator == "spectral":
        resid_vals = d2 + xi * xi * psi_t
        resid = transform(table, SpectralDensity(table.fgrid, resid_vals,
                                                 "Htilde"),
                          "inverse", "Htilde").values
    else:
        psi_field = transform(table, SpectralDensity(table.fgrid, psi_t,
                                                     "Htilde"),
                              "inverse", "Htilde")
        hpsi = apply_operator(psi_field, "Htilde").values
        d2_field = transform(table, SpectralDensity(table.fgrid, d2,
                                                    "Htilde"),
                             "inverse", "Htilde").values
        resid = d2_field + hpsi
    f_t = transform(table, SpectralDensity(table.fgrid,
                                           source.density(table, t),
                                           "Htilde"),
                    "inverse", "Htilde").values
    resid = resid - f_t
    rg = table.rgrid
    num = float(np.sqrt(rg.integrate(resid ** 2)))
    den = float(np.sqrt(rg.integrate(f_t ** 2)))
    return num / max(den, 1e-300)


# ---------------------------------------------------------------------------
# weighted-energy audit and run records


def _h1e_dot(rgrid, values):
    dv = rgrid.deriv(values)
    return float(np.sqrt(rgrid.integrate(
        np.abs(dv) ** 2 + np.abs(values / rgrid.r) ** 2)))


def kest_audit(table, source, alpha=None, times=None, smax=4096.0,
               n_rhs_probes=9, csv_path=None):
    """Ratios of the weighted energy estimate for K across dyadic t.

    With M = sup_s s^(alpha+2) ||f(s)||_LX (the sup probed on a
    geometric s-ladder up to smax), reports

        ratio_lx   = t^alpha     ||Kf(t)||_LX        / M
        ratio_dtlx = t^(alpha+1) ||dtK f(t)||_LX     / M
        ratio_h1e  = t^(alpha+1) ||Kf(t)||_H1e-dot   / M

    per time, each expected bounded uniformly.  csv_path appends one
    EvolutionRecord row per time.
    """
    if alpha is None:
        alpha = source.alpha
    if times is None:
        times = [8.0 * 2.0 ** j for j in range(6)]
    times = [float(t) for t in times]
    fgrid, rgrid = table.fgrid, table.rgrid
    xi = fgrid.xi

    probes = np.geomspace(min(times), smax, n_rhs_probes)
    rhs = 0.0
    for s in probes:
        lx_s = density_x_norm(fgrid, source.density(table, s) / xi)
        rhs = max(rhs, s ** (alpha + 2.0) * lx_s)

    out = {"alpha": float(alpha), "times": times, "rhs_sup": float(rhs),
           "ratio_lx": [], "ratio_dtlx": [], "ratio_h1e": []}
    records = []
    for t in times:
        acc, _, _ = _duhamel_integrals(table, source, t, smax)
        psi_hat = -acc.imag / xi
        dtpsi_hat = -acc.real
        lx = density_x_norm(fgrid, psi_hat / xi)
        dtlx = density_x_norm(fgrid, dtpsi_hat / xi)
        psi = transform(table, SpectralDensity(fgrid, psi_hat, "Htilde"),
                        "inverse", "Htilde")
        h1e = _h1e_dot(rgrid, psi.values)
        out["ratio_lx"].append(t ** alpha * lx / rhs)
        out["ratio_dtlx"].append(t ** (alpha + 1.0) * dtlx / rhs)
        out["ratio_h1e"].append(t ** (alpha + 1.0) * h1e / rhs)
        records.append(EvolutionRecord(
            t=t, lx=lx, dtlx=dtlx, h1e_dot=h1e,
            diagnostics={"alpha": alpha, "rhs_sup": rhs,
                         "ratio_lx": out["ratio_lx"][-1],
                         "ratio_dtlx": out["ratio_dtlx"][-1],
                         "ratio_h1e": out["ratio_h1e"][-1],
                         "smax": smax, "label": source.label}))
    for key in ("ratio_lx", "ratio_dtlx", "ratio_h1e"):
        out["sup_" + key] = float(np.max(out[key]))
    if csv_path is not None:
        append_evolution_records(csv_path, records)
    return out


@dataclass
class EvolutionRecord:
    """One audited time slice: norms of the wave and its derivative."""

    t: float
    lx: float
    dtlx: float
    h1e_dot: float
    diagnostics: dict

    _FIELDS = ("t", "lx", "dtlx", "h1e_dot")


def append_evolution_records(path, records):
    """Append records as CSV rows (t, lx, dtlx, h1e_dot, diagnostics).

    The diagnostics dict is JSON-encoded into the last column; a header
    is written when the file does not exist yet.
    """
    import os

    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(EvolutionRecord._FIELDS + ("diagnostics",))
        for rec in records:
            writer.writerow([repr(float(getattr(rec, name)))
                             for name in EvolutionRecord._FIELDS]
                            + [json.dumps(rec.diagnostics, sort_keys=True)])


def read_evolution_records(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[:4]) != EvolutionRecord._FIELDS:
            raise ValueError(f"unrecognized record header: {header}")
        out = []
        for row in reader:
            vals = [float(tok) for tok in row[:4]]
            diag = json.loads(row[4]) if len(row) > 4 and row[4] else {}
            out.append(EvolutionRecord(*vals, diagnostics=diag))
    return out
