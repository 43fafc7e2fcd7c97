import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import argrelmax

from eitqc import medium as m
from eitqc.medium import C

from .conftest import GAMMA, eit_medium


def test_suppression_at_line_centre(fig3_medium):
    chi = m.susceptibility(fig3_medium, 0.0, 0.0, normalized=True)
    assert chi.real == 0.0
    assert chi.imag == pytest.approx(1 / 1001, rel=1e-13)
    raw = m.susceptibility(fig3_medium, 0.0, 0.0)
    assert raw == pytest.approx(chi * 2 * fig3_medium.kappa0 / fig3_medium.k, rel=1e-14)


def test_no_drive_reduces_to_two_level():
    p = eit_medium(rabi=0.0)
    assert m.susceptibility(p, 0.0, 0.0, normalized=True) == pytest.approx(1j)


def test_autler_townes_peak_near_two_level_value(fig3_medium):
    chi = m.susceptibility(fig3_medium, GAMMA, GAMMA, normalized=True)
    assert abs(chi.imag - 1.0) < 2e-3


def test_raman_resonance_without_decay_is_transparent():
    p = eit_medium(gamma_R=0.0)
    assert m.susceptibility(p, 0.0, 0.0) == 0
    assert m.transmission(p, 0.0) == 1.0


def test_transmission_examples(fig3_medium):
    dark = eit_medium(rabi=0.0)
    assert m.transmission(dark, 0.0) == pytest.approx(math.exp(-100), rel=1e-12)
    assert m.transmission(fig3_medium, 0.0) == pytest.approx(math.exp(-100 / 1001), rel=1e-12)
    assert m.transmission(fig3_medium, 0.0) == pytest.approx(0.905, abs=5e-4)


def test_transmission_at_window_edge_is_one_over_e():
    # residual Raman absorption kept negligible; see transparency window tests
    p = eit_medium(gamma_R=1e-5 * GAMMA)
    w = m.transparency_width(p)
    assert m.transmission(p, w) == pytest.approx(math.exp(-1), rel=0.05)


def test_transparency_width_examples(fig3_medium):
    assert m.transparency_width(fig3_medium) == pytest.approx(0.1 * GAMMA, rel=1e-14)
    double = fig3_medium.with_(rabi_d=2 * GAMMA)
    assert m.transparency_width(double) == pytest.approx(4 * m.transparency_width(fig3_medium), rel=1e-14)
    with pytest.raises(ValueError):
        m.transparency_width(eit_medium(optical_depth=1.0))


def test_gaussian_window(fig3_medium):
    w = m.transparency_width(fig3_medium)
    assert m.transmission_gaussian(fig3_medium, 0.0) == 1.0
    assert m.transmission_gaussian(fig3_medium, w) == pytest.approx(math.exp(-1))
    assert m.transmission_gaussian(fig3_medium, 0.05 * GAMMA) == pytest.approx(math.exp(-0.25), rel=1e-12)
    assert math.exp(-0.25) == pytest.approx(0.7788, abs=1e-4)


@pytest.mark.parametrize("gamma_R", [0.0, 1e-5 * GAMMA, 1e-4 * GAMMA])
def test_gaussian_matches_exact_inside_window(gamma_R):
    p = eit_medium(gamma_R=gamma_R)
    w = m.transparency_width(p)
    d = np.linspace(-w, w, 401)
    exact = m.transmission(p, d)
    approx = m.transmission_gaussian(p, d)
    assert np.max(np.abs(exact / approx - 1)) < 0.05


def test_residual_raman_absorption_floor_at_1e3():
    # with gamma_R = 1e-3 gamma_ge the exact curve sits e^{-0.1} below the Gaussian at line centre
    p = eit_medium(gamma_R=1e-3 * GAMMA)
    assert m.transmission(p, 0.0) / m.transmission_gaussian(p, 0.0) == pytest.approx(math.exp(-100 / 1001))


def test_group_velocity_closed_forms():
    ratio = 1e6
    kappa0 = ratio * GAMMA**2 / (C * GAMMA)
    p = eit_medium(optical_depth=2 * kappa0 * 1e-2)
    vg = m.group_velocity(p)
    assert vg / C == pytest.approx(1 / (1 + ratio), rel=1e-12)
    assert vg == pytest.approx(C * 1e-6, rel=1e-6)
    assert m.group_velocity_approx(p) == pytest.approx(vg, rel=1e-3)
    fast = p.with_(rabi_d=1e12 * GAMMA)
    assert m.group_velocity(fast) == pytest.approx(C, rel=1e-9)


def _fd_group_velocity(p, step):
    # d/domega of (k/2) Re chi with Delta = delta_R moving together
    def kchi(d):
        return p.k / 2 * np.real(m.susceptibility(p, d, d))

    slope = (kchi(step) - kchi(-step)) / (2 * step)
    return C / (1 + C * slope)


@pytest.mark.parametrize("vg_over_c", [1e-6, 1e-4, 1e-2])
def test_group_velocity_matches_dispersion_slope(vg_over_c):
    x = 1 / vg_over_c - 1
    kappa0 = x * GAMMA**2 / (C * GAMMA)
    p = eit_medium(optical_depth=2 * kappa0 * 1e-2, gamma_R=1e-4 * GAMMA)
    fd = _fd_group_velocity(p, 1e-4 * GAMMA)
    assert abs(fd / m.group_velocity(p) - 1) < 5e-3


def test_linear_phase(fig3_medium):
    assert m.linear_phase_shift(fig3_medium, 0.0).approx == 0.0
    p = eit_medium(optical_depth=100.0, gamma_R=0.0)
    ps = m.linear_phase_shift(p, 0.05 * GAMMA)
    assert ps.approx == pytest.approx(2.5, rel=1e-12)
    assert ps.inside_window
    assert abs(ps.exact / ps.approx - 1) < 0.05
    neg = m.linear_phase_shift(p, -0.05 * GAMMA)
    assert neg.approx == -ps.approx
    assert neg.exact == pytest.approx(-ps.exact)


def test_linear_phase_warns_outside_window(fig3_medium):
    with pytest.warns(RuntimeWarning):
        ps = m.linear_phase_shift(fig3_medium, 0.5 * GAMMA)
    assert not ps.inside_window


def test_eit_validity(fig3_medium):
    rep = m.eit_validity(fig3_medium)
    assert rep["optical_depth"].passed
    dark = m.eit_validity(eit_medium(rabi=0.0))
    for name in ("raman_detuning", "raman_detuning_sq", "transparency"):
        assert not dark[name].passed
    vg = m.group_velocity(fig3_medium)
    rep = m.eit_validity(fig3_medium, pulse_duration=1.5 * fig3_medium.length / vg)
    assert not rep["fits_in_medium"].passed


def test_parameter_validation():
    with pytest.raises(ValueError):
        eit_medium(optical_depth=-1)
    with pytest.raises(ValueError):
        m.MediumParams(gamma_ge=1.0, Gamma_e=3.0, gamma_R=0, omega=1, rabi_d=1, kappa0=1, length=1)
    with pytest.raises(ValueError):
        eit_medium(area=1e-10, density=1e18, n_atoms=5.0)


def test_sigma0_consistency():
    d = 2.5e-29
    n = 1e17
    base = eit_medium()
    sigma0 = d**2 * base.omega / (2 * m.HBAR * C * m.EPS0 * base.gamma_ge)
    p = base.with_(kappa0=sigma0 * n, dipole_ge=d, density=n)
    assert p.sigma0 == pytest.approx(sigma0)
    with pytest.raises(ValueError):
        base.with_(kappa0=2 * sigma0 * n, dipole_ge=d, density=n)


def test_two_level_limit_over_grid():
    p = eit_medium(rabi=1e-9 * GAMMA)
    d = np.linspace(-5 * GAMMA, 5 * GAMMA, 1001)
    chi = m.susceptibility(p, d, d)
    ref = m.two_level_susceptibility(p, d)
    assert np.max(np.abs(chi / ref - 1)) < 1e-6


def test_kramers_kronig_parity(fig3_medium):
    d = np.linspace(0, 3 * GAMMA, 501)
    plus = m.susceptibility(fig3_medium, d, d)
    minus = m.susceptibility(fig3_medium, -d, -d)
    np.testing.assert_array_equal(plus.real, -minus.real)
    np.testing.assert_array_equal(plus.imag, minus.imag)


@pytest.mark.parametrize("rabi", [1.0, 1.5, 2.0])
def test_autler_townes_two_maxima(rabi):
    p = eit_medium(rabi=rabi * GAMMA)
    d = np.linspace(-3 * GAMMA, 3 * GAMMA, 2001)
    im = m.susceptibility(p, d, d, normalized=True).imag
    peaks = argrelmax(im)[0]
    assert len(peaks) == 2
    step = d[1] - d[0]
    assert np.all(np.abs(np.sort(d[peaks]) - np.array([-1, 1]) * rabi * GAMMA) <= step)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.1, 5.0),
    st.floats(0.0, 1e-2),
    st.floats(-5.0, 5.0),
    st.floats(-5.0, 5.0),
)
def test_passive_medium_absorbs(rabi, gamma_r, delta, delta_r):
    p = eit_medium(rabi=rabi * GAMMA, gamma_R=gamma_r * GAMMA)
    chi = m.susceptibility(p, delta * GAMMA, delta_r * GAMMA)
    assert chi.imag >= 0
    t = m.transmission(p, delta_r * GAMMA, delta * GAMMA)
    assert 0.0 <= t <= 1.0


def test_spectrum_bundle(fig3_medium):
    s = m.spectrum(fig3_medium, np.linspace(-GAMMA, GAMMA, 11))
    assert s.chi.shape == (11,)
    np.testing.assert_allclose(s.delta, s.delta_R)
