"""Eigenfunction table and the spectral-side operations.

The independent check here is the interior power series: with the
explicit second solution theta_0 (r W(phi_0, theta_0) = 1), the
hierarchy H u_j = u_{j-1}, u_0 = phi_0 is solved by quadrature, and
(phi_0 + sum_j xi^{2j} u_j) / 2 must reproduce the swept slope-one
solution on the core without any shared code path.
"""

import json

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from corotwave import eigenbasis
from corotwave.eigenbasis import (
    EigenCertificateError,
    EigenTable,
    build_table,
    farfield_match,
    m_k,
    m_k1,
    psi_from_phi,
    regular_solution,
    sigma_tilde_eval,
    smoothness_monitor,
)
from corotwave.geometry import h1, h3, potential_h, potential_ht
from corotwave.grids import FrequencyGrid, RadialGrid
from corotwave.oscsymbol import LaurentSymbol

SQ2PI = np.sqrt(2.0 / np.pi)


def _column(table, xi):
    j = np.nonzero(table.xi == xi)[0]
    assert j.size == 1
    return int(j[0])


def _theta0(r):
    # phi_0 * antiderivative of (1+s^2)^2 / (4 s^3); r W(phi_0, theta_0) = 1
    return h1(r) * (-1.0 / r**2 + 4.0 * np.log(r) + r * r) / 8.0


def _psi0(r):
    return 1.0 - (1.0 + r * r) * np.log1p(r * r) / (r * r)


@pytest.fixture(scope="module")
def interior_series():
    rr = np.geomspace(1e-7, 0.75, 8000)
    phi0 = h1(rr)
    th0 = _theta0(rr)
    terms = [phi0]
    for _ in range(8):
        f = terms[-1]
        a1 = CubicSpline(rr, th0 * f * rr).antiderivative()
        a2 = CubicSpline(rr, phi0 * f * rr).antiderivative()
        terms.append(phi0 * (a1(rr) - a1(rr[0]))
                     - th0 * (a2(rr) - a2(rr[0])))
    return rr, terms


@pytest.fixture(scope="module")
def mini_pair():
    fgrid = FrequencyGrid(-6, 6, {})
    rgrid = RadialGrid.log_spaced(n=1024, r_min=1e-3, r_max=64.0)
    return (build_table(fgrid, rgrid, dphase=0.03),
            build_table(fgrid, rgrid, dphase=0.015))


# ---------------------------------------------------------------------------
# interior series oracle


def test_theta0_wronskian():
    r = np.array([0.05, 0.3, 1.0, 2.5])
    h = 1e-5 * r
    dphi0 = (h1(r + h) - h1(r - h)) / (2.0 * h)
    dth0 = (_theta0(r + h) - _theta0(r - h)) / (2.0 * h)
    w = h1(r) * dth0 - dphi0 * _theta0(r)
    assert np.max(np.abs(r * w - 1.0)) < 1e-8


def test_interior_hierarchy_self_consistent(interior_series):
    rr, terms = interior_series
    s1 = CubicSpline(rr, terms[1])
    w = (rr >= 1e-3) & (rr <= 0.5)
    res = (-s1(rr[w], 2) - s1(rr[w], 1) / rr[w]
           + potential_h(rr[w]) * terms[1][w])
    rel = np.max(np.abs(res - terms[0][w])) / np.max(np.abs(terms[0][w]))
    assert rel < 1e-5


def test_interior_terms_decay(interior_series):
    _, terms = interior_series
    sups = np.array([np.max(np.abs(u)) for u in terms])
    assert np.all(sups[1:] < sups[:-1])
    assert sups[-1] < 1e-12


def test_series_matches_swept_solution(interior_series):
    rr, terms = interior_series
    splines = [CubicSpline(rr, u) for u in terms]
    grid = RadialGrid.log_spaced(n=1024, r_min=1e-3, r_max=2.0)
    xi = 1.0
    phi, _, resid = regular_solution(xi, grid)
    assert resid < 1e-7
    w = grid.r <= 0.5
    series = 0.5 * sum(xi ** (2 * j) * s(grid.r[w])
                       for j, s in enumerate(splines))
    rel = np.max(np.abs(series - phi[w])) / np.max(np.abs(phi[w]))
    assert rel < 1e-6


# ---------------------------------------------------------------------------
# regular solution


def test_regular_solution_small_xi_direction():
    grid = RadialGrid.log_spaced(n=512, r_min=1e-3, r_max=2.0)
    phi, _, resid = regular_solution(2.0**-13, grid)
    assert resid < 1e-7
    ref = h1(grid.r)
    corr = np.sum(phi * ref) / np.sqrt(np.sum(phi**2) * np.sum(ref**2))
    assert corr >= 1.0 - 1e-6


def test_regular_solution_slope_one():
    grid = RadialGrid.log_spaced(n=512, r_min=1e-3, r_max=2.0)
    phi, dphi, _ = regular_solution(1.0, grid)
    assert abs(phi[0] / grid.r[0] - 1.0) < 1e-5
    assert abs(dphi[0] - 1.0) < 1e-5


def test_regular_solution_rejects_nonpositive_xi():
    grid = RadialGrid.log_spaced(n=512, r_min=1e-3, r_max=2.0)
    with pytest.raises(ValueError, match="positive"):
        regular_solution(0.0, grid)


# ---------------------------------------------------------------------------
# far-field matching


def test_farfield_match_consistency_midband(eigen_table):
    j = _column(eigen_table, 1.0)
    grid = eigen_table.rgrid
    phi, _, resid = regular_solution(1.0, grid)
    assert resid < 1e-7
    a, qw, fn = farfield_match(grid.r, phi, 1.0)
    assert abs(abs(a) - SQ2PI) < 1e-12
    assert abs(qw - eigen_table.q_weight[j]) / eigen_table.q_weight[j] < 1e-6
    assert abs(a - eigen_table.a_weight[j]) < 1e-6
    pn = eigen_table.node_values(j)[0]
    assert np.max(np.abs(fn - pn)) / np.max(np.abs(pn)) < 1e-6


def test_farfield_match_consistency_highband(eigen_table):
    j = _column(eigen_table, 256.0)
    grid = eigen_table.rgrid
    phi, _, _ = regular_solution(256.0, grid)
    a, qw, _ = farfield_match(grid.r, phi, 256.0)
    assert abs(abs(a) - SQ2PI) < 1e-12
    assert abs(qw - eigen_table.q_weight[j]) / eigen_table.q_weight[j] < 1e-6


def test_farfield_match_consistency_lowband(eigen_table):
    # the fresh sweep spans ~5e5 in radius; accumulated phase drift sets
    # the agreement scale here, well above the least-squares certificate
    xi = 2.0**-13
    assert eigen_table.xi[0] == xi
    grid = RadialGrid.log_spaced(n=4096, r_min=1e-3, r_max=50.0 / xi)
    phi, _, _ = regular_solution(xi, grid)
    _, qw, _ = farfield_match(grid.r, phi, xi)
    assert abs(qw - eigen_table.q_weight[0]) / eigen_table.q_weight[0] < 3e-5


def test_interior_weight_growth_exponent(eigen_table):
    sel = (eigen_table.xi >= 8.0) & (eigen_table.xi <= 64.0)
    slope = np.polyfit(np.log(eigen_table.xi[sel]),
                       np.log(eigen_table.q_weight[sel]), 1)[0]
    assert abs(slope - 1.5) < 0.05


def test_interior_weight_highband_closure(eigen_table):
    j = _column(eigen_table, 256.0)
    assert abs(eigen_table.q_weight[j] / (0.5 * 256.0**1.5) - 1.0) < 1e-3


def test_interior_weight_lowband_profile(eigen_table):
    kk = eigen_table.fgrid.dyadic_index()
    sel = (kk >= -10) & (kk <= -4)
    xi = eigen_table.xi[sel]
    prof = eigen_table.q_weight[sel] * np.sqrt(xi) * np.abs(np.log(xi))
    assert np.all(prof > 0.9)
    assert np.all(prof < 1.1)


def test_farfield_match_needs_tail():
    r = np.geomspace(0.1, 30.0, 200)
    with pytest.raises(ValueError, match="r xi >= 40"):
        farfield_match(r, h1(r), 1.0)


def test_farfield_match_flags_bad_tail():
    # a non-oscillatory tail cannot sit in the outgoing-wave span
    r = np.geomspace(0.1, 500.0, 2000)
    with pytest.raises(ValueError, match="matching radius too small"):
        farfield_match(r, h1(r), 1.0)


def test_farfield_match_rejects_negative_weight(eigen_table):
    j = _column(eigen_table, 1.0)
    phi = eigen_table.node_values(j)[0]
    with pytest.raises(ValueError, match="interior weight"):
        farfield_match(eigen_table.rgrid.r, -phi, 1.0)


def test_farfield_match_needs_interior_samples(eigen_table):
    j = _column(eigen_table, 1.0)
    r = np.geomspace(45.0, 500.0, 300)
    phi = eigen_table.eval_phi(j, r)[0]
    with pytest.raises(ValueError, match="interior samples"):
        farfield_match(r, phi, 1.0)


# ---------------------------------------------------------------------------
# gauge eigenfunctions from map eigenfunctions


def test_psi_chain_matches_table(eigen_table):
    rgrid = eigen_table.rgrid
    for k in (-8, -6):
        xi = 2.0**k
        vals = eigen_table.node_values(_column(eigen_table, xi))
        psi = psi_from_phi(rgrid, vals[0], xi, dphi=vals[1])
        rel = np.max(np.abs(psi - vals[2])) / np.max(np.abs(vals[2]))
        assert rel < 1e-7


def test_psi_chain_stencil_derivative(eigen_table):
    # no dphi supplied: the input is differentiated on the grid
    rgrid = eigen_table.rgrid
    xi = 2.0**-6
    vals = eigen_table.node_values(_column(eigen_table, xi))
    psi = psi_from_phi(rgrid, vals[0], xi)
    rel = np.max(np.abs(psi - vals[2])) / np.max(np.abs(vals[2]))
    assert rel < 1e-6


def test_psi_gauge_residual(eigen_table):
    # stencil residual of the gauge operator, L^2(r dr)-relative
    rgrid = eigen_table.rgrid
    r = rgrid.r
    for k in (-8, -6, -4):
        xi = 2.0**k
        psi = eigen_table.node_values(_column(eigen_table, xi))[2]
        d1 = rgrid.deriv(psi, 1)
        d2 = rgrid.deriv(psi, 2)
        res = -d2 - d1 / r + (potential_ht(r) - xi * xi) * psi
        res[:3] = 0.0
        res[-3:] = 0.0
        num = rgrid.integrate(res**2)
        den = rgrid.integrate(((np.abs(potential_ht(r)) + xi * xi)
                               * psi) ** 2)
        assert np.sqrt(num / den) < 1e-6


def test_psi_vanishes_at_origin(eigen_table):
    psi = eigen_table.node_values(_column(eigen_table, 1.0))[2]
    assert abs(psi[0]) / np.max(np.abs(psi)) < 1e-5


def test_psi_small_xi_shape(eigen_table):
    rgrid = eigen_table.rgrid
    for k, use_chain in ((-10, False), (-8, True)):
        xi = 2.0**k
        vals = eigen_table.node_values(_column(eigen_table, xi))
        if use_chain:
            psi = psi_from_phi(rgrid, vals[0], xi, dphi=vals[1])
        else:
            psi = vals[2]
        w = rgrid.r <= 0.01 / xi
        ref = _psi0(rgrid.r[w])
        dev = np.abs(psi[w] / psi[w][-1] - ref / ref[-1])
        assert np.max(dev) < 1e-4


def test_psi_chain_guard(eigen_table):
    rgrid = eigen_table.rgrid
    for xi in (0.25, 0.75):
        vals = eigen_table.node_values(_column(eigen_table, xi))
        with pytest.raises(ValueError, match="dual identity"):
            psi_from_phi(rgrid, vals[0], xi, dphi=vals[1])
    # the violation lives at the origin and in the tail; mid radii are clean
    vals = eigen_table.node_values(_column(eigen_table, 0.25))
    psi = psi_from_phi(rgrid, vals[0], 0.25, dphi=vals[1], check_tol=1e-2)
    w = (rgrid.r >= 0.5) & (rgrid.r <= 2.0)
    rel = np.max(np.abs(psi[w] - vals[2][w])) / np.max(np.abs(vals[2][w]))
    assert rel < 1e-8


# ---------------------------------------------------------------------------
# far-field symbol of the gauge operator


def test_sigma_tilde_outgoing_limit():
    assert abs(sigma_tilde_eval(1e8, 1e8) - 1j) < 1e-8


def test_sigma_tilde_subleading_coefficient():
    # extrapolation in 1/q removes the q^{-2} tail: 2 v(2q) - v(q) -> 1/8
    def v(q):
        return (sigma_tilde_eval(q, 1e6) - 1j) * q

    e = 2.0 * v(1000.0) - v(500.0)
    assert abs(e - 0.125) < 1e-3


def test_sigma_tilde_matches_symbol():
    sym = LaurentSymbol("Htilde")
    q = 40.0
    r = 40.0
    full = 1j * sym.eval(np.array([r]), np.array([q / r]))[0]
    assert abs(sigma_tilde_eval(q, r) - full) < 1e-9


def test_sigma_tilde_remainder_profile():
    q = np.geomspace(2.0, 300.0, 25)
    worst = 0.0
    for r in (4.0, 20.0, 100.0, 1e4):
        d = np.abs(sigma_tilde_eval(q, r, j0=6)
                   - sigma_tilde_eval(q, r, j0=7))
        worst = max(worst, float(np.max(d * q**7)))
    assert worst < 20.0


def test_sigma_tilde_requires_wave_zone():
    with pytest.raises(ValueError, match="q = r xi >= 1"):
        sigma_tilde_eval(0.5, 10.0)


def _order1(sym, r):
    acc = 0.0 + 0.0j
    for jj in range(1, 13):
        acc += float(sym.coefficient(jj, 1)) * r ** (1.0 - jj)
    return -0.5j * acc


def test_first_order_amplitudes():
    sh = LaurentSymbol("H")
    st = LaurentSymbol("Htilde")
    assert sh.coefficient(0, 0) == 1
    assert st.coefficient(0, 0) == 1
    # map-side q^{-1} amplitude tends to 3i/8 far out
    assert abs(_order1(sh, 1e8) - 0.375j) < 1e-6
    # gauge and map amplitudes differ by the exact potential term
    for r in (10.0, 50.0):
        lhs = _order1(st, r)
        rhs = _order1(sh, r) - 1j * (float(h3(np.array([r]))[0]) - 0.5)
        assert abs(lhs - rhs) < 1e-10


# ---------------------------------------------------------------------------
# assembled table


def test_certificates_within_tolerance(eigen_table):
    maxima = eigen_table.check_certificates()
    pins = {"resid_phi": 5e-8, "resid_psi": 5e-8, "identity": 5e-8,
            "overlap": 5e-6, "lsq": 1e-8, "richardson": 5e-7}
    for name, pin in pins.items():
        assert maxima[name] < pin


def test_certificates_raise_when_tightened(eigen_table):
    with pytest.raises(EigenCertificateError, match="overlap"):
        eigen_table.check_certificates({"overlap": 1e-16})


def test_mode_normalization(eigen_table):
    assert np.max(np.abs(np.abs(eigen_table.a_weight) - SQ2PI)) < 1e-12
    assert np.all(eigen_table.q_weight > 0)
    assert np.all(eigen_table.c_slope > 0)


def test_shared_columns_consistent(eigen_table):
    worst = 0.0
    blocks = eigen_table.blocks
    for left, right in zip(blocks[:-1], blocks[1:]):
        assert left.xi[-1] == right.xi[0]
        worst = max(worst, abs(left.qw[-1] - right.qw[0]) / left.qw[-1])
        worst = max(worst, abs(left.a[-1] - right.a[0]))
    assert worst < 1e-7


def test_profile_bounds(eigen_table):
    for report in (eigen_table.psi_profile_report(),
                   eigen_table.phi_nonres_report()):
        vals = np.array(list(report.values()))
        assert vals.size == 13
        assert np.all(vals < 3.0)
        assert np.max(vals) / np.min(vals) < 2.5


def test_smoothness_monitor(eigen_table):
    mon = smoothness_monitor(eigen_table)
    assert mon["q_log_slope_max"] < 1.6
    assert mon["a_log_deriv_max"] < 1.0


def test_ladder_identity_offnode(eigen_table):
    worst = 0.0
    for j in (60, 232, 400):
        xi = float(eigen_table.xi[j])
        r = np.geomspace(2e-3, min(8.0 / xi, 500.0), 300) * 1.00137
        phi = eigen_table.eval_phi(j, r)[0]
        psi, dpsi = eigen_table.eval_psi(j, r)
        lhs = -dpsi + (h3(r) - 1.0) * psi / r
        worst = max(worst, np.max(np.abs(lhs - xi * phi))
                    / np.max(np.abs(xi * phi)))
    assert worst < 1e-6


def test_eval_exact_at_nodes(eigen_table):
    j = _column(eigen_table, 1.0)
    sub = eigen_table.rgrid.r[5:4000:97]
    phi = eigen_table.eval_phi(j, sub)[0]
    ref = eigen_table.node_values(j)[0][5:4000:97]
    assert np.max(np.abs(phi - ref)) <= 1e-13 * np.max(np.abs(ref))


def test_eval_smooth_through_blend(eigen_table):
    worst = 0.0
    for xi in (1.0, 16.0):
        j = _column(eigen_table, xi)
        r = np.linspace(5.5, 12.5, 6000) / xi
        for f, df in (eigen_table.eval_phi(j, r),
                      eigen_table.eval_psi(j, r)):
            fd = (f[2:] - f[:-2]) / (r[2:] - r[:-2])
            worst = max(worst, np.max(np.abs(fd - df[1:-1]))
                        / np.max(np.abs(df)))
    assert worst < 5e-5


def test_eval_outside_near_zone_raises(eigen_table):
    with pytest.raises(ValueError, match="near zone"):
        eigen_table.eval_phi(0, 600.0)


def test_profile_weights_are_caps():
    r = np.geomspace(1e-3, 1e3, 50)
    for k in (-5, 0, 3):
        for fn in (m_k, m_k1):
            v = fn(r, k)
            assert np.all(v <= 1.0)
            assert np.all(np.diff(v) >= -1e-15)
            assert v[-1] == 1.0


# ---------------------------------------------------------------------------
# build, refinement, persistence


def test_refinement_is_monotone(mini_pair):
    coarse, fine = mini_pair
    mc = coarse.check_certificates()
    mf = fine.check_certificates()
    for name in ("resid_phi", "resid_psi", "richardson"):
        assert mf[name] <= mc[name]
    # the pair discrepancy contracts at the step-rule order
    assert mc["richardson"] / mf["richardson"] > 8.0


def test_refinement_agreement(mini_pair):
    coarse, fine = mini_pair
    r = np.geomspace(2e-3, 50.0, 40)
    for j in (0, 48, 96, 192):
        pc = coarse.eval_phi(j, r)[0]
        pf = fine.eval_phi(j, r)[0]
        assert np.max(np.abs(pc - pf)) / np.max(np.abs(pf)) < 1e-6


def test_rebuild_bit_identical(mini_pair):
    _, fine = mini_pair
    again = build_table(fine.fgrid, fine.rgrid, dphase=fine.dphase)
    assert again.content_hash() == fine.content_hash()


def test_cache_roundtrip(mini_pair, tmp_path):
    _, fine = mini_pair
    path = tmp_path / "table.npz"
    fine.save(path)
    back = EigenTable.load(path, fine.fgrid, fine.rgrid)
    assert back.content_hash() == fine.content_hash()
    manifest = json.loads((tmp_path / "table.npz.json").read_text())
    assert manifest["content_sha256"] == fine.content_hash()
    assert manifest["certificates"]["resid_phi"] < 1e-7
    assert manifest["dphase"] == fine.dphase


def test_cache_rejects_other_grid(mini_pair, tmp_path, eigen_table):
    _, fine = mini_pair
    path = tmp_path / "table.npz"
    fine.save(path)
    with pytest.raises(ValueError, match="another grid"):
        EigenTable.load(path, eigen_table.fgrid, eigen_table.rgrid)


def test_build_table_disk_cache(tmp_path):
    fgrid = FrequencyGrid(-6, 6, {})
    rgrid = RadialGrid.log_spaced(n=1024, r_min=1e-3, r_max=64.0)
    first = build_table(fgrid, rgrid, dphase=0.03, cache_dir=tmp_path)
    files = list(tmp_path.glob("eigen_*.npz"))
    assert len(files) == 1
    second = build_table(fgrid, rgrid, dphase=0.03, cache_dir=tmp_path)
    assert second.content_hash() == first.content_hash()


def test_csv_export(eigen_table, tmp_path):
    path = tmp_path / "columns.csv"
    j = _column(eigen_table, 1.0)
    eigen_table.export_csv(path, columns=[0, j])
    lines = path.read_text().splitlines()
    heads = [ln for ln in lines if ln.startswith("# xi=")]
    assert len(heads) == 2
    assert f"q={float(eigen_table.q_weight[j])!r}" in heads[1]
    n = eigen_table.rgrid.n
    assert len(lines) == 1 + 2 * (1 + n)
    r0, p0, s0 = (float(tok) for tok in lines[2].split(","))
    vals = eigen_table.node_values(0)
    assert r0 == eigen_table.rgrid.r[0]
    assert p0 == vals[0, 0]
    assert s0 == vals[2, 0]
