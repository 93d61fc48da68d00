from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from corotwave.oscsymbol import (
    LaurentSymbol,
    gauge_amplitude_from_map,
    order1_amplitude,
    order1_from_coefficients,
)


def test_leading_coefficients_exact():
    sym = LaurentSymbol("H")
    symt = LaurentSymbol("Htilde")
    # c1 = (3i/8) xi^{-1}  <->  a[1][1] = -3/4 against (-i/2)
    assert sym.coefficient(1, 1) == Fraction(-3, 4)
    # gauge side: c1 = -(i/8) xi^{-1}  <->  a[1][1] = 1/4
    assert symt.coefficient(1, 1) == Fraction(1, 4)
    # powers of xi^{-1} in c_j only occur with parity of j and m >= 1
    for j in range(1, sym.max_order + 1):
        for m in sym.coeff[j]:
            assert 1 <= m <= j
            assert (j - m) % 2 == 0


@pytest.mark.parametrize("side", ["H", "Htilde"])
def test_order1_closed_form(side):
    sym = LaurentSymbol(side, max_order=12)
    r = np.array([6.0, 10.0, 20.0])
    got = order1_from_coefficients(sym, r)
    want = order1_amplitude(r, side)
    assert np.max(np.abs(got - want)) < 1e-9


def test_order1_limits():
    # r -> inf limits: 3i/8 on the map side, -i/8 on the gauge side
    assert order1_amplitude(1e8, "H") == pytest.approx(3j / 8, abs=1e-7)
    assert order1_amplitude(1e8, "Htilde") == pytest.approx(-1j / 8, abs=1e-7)


def _w_of_r(side, r):
    if side == "H":
        return 3.0 / (4 * r * r) - 8.0 / (1 + r * r) ** 2
    return 15.0 / (4 * r * r) - 4.0 / (1 + r * r)


@pytest.mark.parametrize("side,xi", [("H", 0.9), ("H", 5.0), ("Htilde", 0.9),
                                     ("Htilde", 2.5)])
def test_against_direct_integration(side, xi):
    # integrate the amplitude equation inward from far away and compare
    sym = LaurentSymbol(side)
    r_hi, r_lo = 3000.0, 40.0

    def rhs(r, y):
        s = y[0] + 1j * y[1]
        ds = y[2] + 1j * y[3]
        dds = _w_of_r(side, r) * s - 2j * xi * ds
        return [ds.real, ds.imag, dds.real, dds.imag]

    s0, ds0 = sym.eval(r_hi, xi, deriv=True)
    sol = solve_ivp(rhs, (r_hi, r_lo),
                    [s0.real, s0.imag, ds0.real, ds0.imag],
                    rtol=1e-12, atol=1e-14, dense_output=False,
                    method="DOP853", t_eval=[r_lo])
    got = sol.y[0, -1] + 1j * sol.y[1, -1]
    want = sym.eval(r_lo, xi)
    assert abs(got - want) < 1e-9


def test_ladder_consistency():
    # the gauge-side amplitude equals the image of the map side under L
    sym = LaurentSymbol("H")
    symt = LaurentSymbol("Htilde")
    for xi in (0.5, 1.0, 8.0):
        r = np.array([50.0, 80.0, 200.0]) / min(xi, 1.0)
        s, ds = sym.eval(r, xi, deriv=True)
        st = gauge_amplitude_from_map(r, xi, s, ds)
        want = symt.eval(r, xi)
        assert np.max(np.abs(st - want)) < 1e-10


def test_truncation_estimate_decays():
    sym = LaurentSymbol("H")
    est = sym.trunc_estimate(np.array([40.0, 80.0]), 1.0)
    assert est[1] < est[0] / 1000
    assert est[0] < 1e-12
