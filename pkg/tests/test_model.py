import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fringeprobe import model
from fringeprobe.config import ExperimentConfig
from fringeprobe.errors import ConfigError, DomainError


def test_fringe_spacing(cfg):
    # 632 nm / 2.97 mrad = 212.79 um
    assert model.fringe_spacing(cfg) == pytest.approx(212.79e-6, rel=1e-4)


def test_fringe_spacing_rejects_large_angle():
    with pytest.raises(ConfigError):
        ExperimentConfig(wavelength=500e-9, crossing_angle=0.5)


def test_fringe_spacing_halves_when_angle_doubles(cfg):
    c2 = cfg.replace(crossing_angle=2 * cfg.crossing_angle)
    assert model.fringe_spacing(c2) == pytest.approx(model.fringe_spacing(cfg) / 2, rel=1e-15)


def test_intensity_peak_and_dark_fringe(cfg):
    y0 = cfg.pattern_offset
    assert model.intersection_intensity(cfg, y0) == pytest.approx(1 + cfg.amplitude_asymmetry)
    half = math.pi / (2 * model.fringe_wavenumber(cfg))
    env = model.gaussian_envelope(cfg, y0 + half)
    assert model.intersection_intensity(cfg, y0 + half) == pytest.approx(env * 0.05, rel=1e-12)
    # the exact half period agrees with l/2 to O(alpha^2)
    assert half == pytest.approx(model.fringe_spacing(cfg) / 2, rel=1e-6)


def test_intensity_period_from_zero_scan(cfg):
    # zeros of the cos^2 factor located by sign changes of cos on a fine grid
    y = np.linspace(cfg.pattern_offset, cfg.pattern_offset + 1e-3, 200001)
    c = np.cos(model.fringe_wavenumber(cfg) * (y - cfg.pattern_offset))
    idx = np.where(np.sign(c[:-1]) != np.sign(c[1:]))[0]
    zeros = y[idx] - c[idx] * (y[idx + 1] - y[idx]) / (c[idx + 1] - c[idx])
    period = np.mean(np.diff(zeros))
    assert period == pytest.approx(model.fringe_spacing(cfg), rel=1e-5)


def test_intensity_lower_bound(cfg):
    y = np.linspace(-1e-3, 2e-3, 5001)
    I = model.intersection_intensity(cfg, y)
    env = model.gaussian_envelope(cfg, y)
    assert np.all(I >= env * cfg.amplitude_asymmetry * (1 - 1e-12))
    assert np.all(model.intersection_intensity(cfg.replace(amplitude_asymmetry=0.0), y) >= 0)


def test_visibility_of_braces_matches_definition(cfg):
    # without the envelope: I_max = 1 + a, I_min = a
    for a in (0.0, 0.05, 0.5):
        i_max, i_min = 1 + a, a
        assert (i_max - i_min) / (i_max + i_min) == pytest.approx(1 / (1 + 2 * a))


def test_slit_intensity_values(cfg):
    assert model.slit_intensity(cfg, 0.0) == 1.0
    theta = math.asin(cfg.wavelength / cfg.wire_thickness)
    assert model.slit_intensity(cfg, theta) == pytest.approx(0.0, abs=1e-25)
    with pytest.raises(DomainError):
        model.slit_intensity(cfg, math.pi / 2)


def test_sinc_squared_area_is_pi():
    # in argument units the slit pattern integrates to pi; scipy is the oracle
    from scipy.integrate import quad
    f = lambda u: np.sinc(u / np.pi) ** 2
    core = sum(quad(f, n * np.pi, (n + 1) * np.pi)[0] for n in range(-2000, 2000))
    assert core == pytest.approx(np.pi, abs=2 / (2000 * np.pi))


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(-1.5, 1.5))
def test_slit_intensity_even_and_bounded(theta):
    c = ExperimentConfig()
    v = model.slit_intensity(c, theta)
    assert 0.0 <= v <= 1.0
    assert v == model.slit_intensity(c, -theta)


def test_babinet_supports(cfg):
    w = cfg.pattern_offset + 30e-6
    outside = model.babinet_decompose(cfg, w, w + 20e-6)
    assert outside.e_slit == 0.0 and outside.e_wire == outside.e0
    inside = model.babinet_decompose(cfg, w, w + 5e-6)
    assert inside.e_wire == 0.0 and inside.e_slit == inside.e0
    assert inside.e0 ** 2 == pytest.approx(model.intersection_intensity(cfg, w + 5e-6), rel=1e-14)


def test_field_sign_flips_across_dark_fringe(cfg):
    half = math.pi / (2 * model.fringe_wavenumber(cfg))
    y0 = cfg.pattern_offset
    assert model.undisturbed_field(cfg, y0 + 0.9 * half) > 0
    assert model.undisturbed_field(cfg, y0 + 1.1 * half) < 0


@settings(max_examples=200, deadline=None)
@given(w=st.floats(0.0, 1.2e-3), y=st.floats(0.0, 1.2e-3))
def test_babinet_identity_exact(w, y):
    c = ExperimentConfig()
    s = model.babinet_decompose(c, w, y)
    assert s.e0 - s.e_wire - s.e_slit == 0.0
    assert s.e_wire + s.e_slit == s.e0


def test_momentum_density_dark_fringe_zero(cfg):
    c0 = cfg.replace(amplitude_asymmetry=0.0)
    half = math.pi / (2 * model.fringe_wavenumber(c0))
    g = model.field_momentum_density(c0, c0.pattern_offset + half)
    assert np.all(np.abs(g) < 1e-30)


def test_momentum_density_zero_locations(cfg):
    # numerical zeros (bisection on cos) versus analytic odd multiples of the half period
    c0 = cfg.replace(amplitude_asymmetry=0.0)
    q = model.fringe_wavenumber(c0)
    for m in range(-3, 4):
        analytic = c0.pattern_offset + (2 * m + 1) * math.pi / (2 * q)
        lo, hi = analytic - 1e-6, analytic + 1e-6
        f = lambda y: math.cos(q * (y - c0.pattern_offset))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.sign(f(mid)) == np.sign(f(lo)):
                lo = mid
            else:
                hi = mid
        assert abs(0.5 * (lo + hi) - analytic) < 1e-12
        g = model.field_momentum_density(c0, 0.5 * (lo + hi))[2]
        assert g < 1e-20
        half_l = (2 * m + 1) * model.fringe_spacing(c0) / 2
        assert analytic - c0.pattern_offset == pytest.approx(half_l, rel=1e-6)


def test_momentum_density_single_beam(cfg):
    y = np.linspace(0, 1e-3, 7)
    g = model.field_momentum_density(cfg, y, beam=1)
    k1, _ = model.beam_directions(cfg)
    np.testing.assert_allclose(g, np.tile(0.5 * k1, (7, 1)))
    assert np.allclose(np.linalg.norm(g, axis=1), 0.5)
    with pytest.raises(DomainError):
        model.field_momentum_density(cfg, y, beam=3)


def test_momentum_density_period_matches_intensity(cfg):
    c0 = cfg.replace(amplitude_asymmetry=0.0)
    y = np.linspace(c0.pattern_offset - 4e-4, c0.pattern_offset + 4e-4, 400001)
    gz = model.field_momentum_density(c0, y)[:, 2]
    inten = model.intersection_intensity(c0, y)

    def minima(v):
        i = np.where((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1
        return y[i]

    assert np.allclose(np.diff(minima(gz)), np.diff(minima(inten)), rtol=1e-3)


def test_momentum_density_fringe_average_conserves_z(cfg):
    # fringe-averaged density equals the summed single-beam densities (per cos(alpha/2))
    for a in (0.0, 0.05):
        c = cfg.replace(amplitude_asymmetry=a)
        period = math.pi / model.fringe_wavenumber(c)
        y = c.pattern_offset + np.linspace(0, period, 100001)
        gz = model.field_momentum_density(c, y)[:, 2]
        mean = np.trapezoid(gz, y) / period
        # beams with A1 A2 = 1 and (A1^2 + A2^2)/2 = 2a + 1
        s = math.sqrt(2 * (2 * a + 1) + 2)
        d = math.sqrt(max(2 * (2 * a + 1) - 2, 0.0))
        amp1, amp2 = (s + d) / 2, (s - d) / 2
        assert amp1 * amp2 == pytest.approx(1.0)
        singles = (model.field_momentum_density(c, 0.0, beam=1, amplitude=amp1)[2]
                   + model.field_momentum_density(c, 0.0, beam=2, amplitude=amp2)[2])
        assert mean == pytest.approx(singles / math.cos(c.crossing_angle / 2), rel=1e-8)


def test_particle_momenta(cfg):
    p1, p2 = model.particle_momenta(cfg)
    p = model.PLANCK / cfg.wavelength
    assert np.linalg.norm(p1) == pytest.approx(p, rel=1e-15)
    assert np.linalg.norm(p2) == pytest.approx(p, rel=1e-15)
    assert p1[1] + p2[1] == 0.0
    split = (p2[1] - p1[1]) / (model.HBAR * cfg.crossing_angle / cfg.wavelength)
    assert split == pytest.approx(2 * math.pi, rel=1e-6)
    assert round(split, 2) == 6.28
    angle = math.acos(p1 @ p2 / (p * p))
    assert angle == pytest.approx(cfg.crossing_angle, rel=1e-9)


def test_particle_momenta_independent_of_wire(cfg):
    a = model.particle_momenta(cfg)
    b = model.particle_momenta(cfg.replace(wire_thickness=5e-6))
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)


def test_momentum_profile_nonnegative(cfg):
    prof = model.momentum_profile(cfg, np.linspace(0, 1.2e-3, 301))
    assert np.all(prof.g_z >= 0)
    assert len(prof.to_dict()["g_z"]) == 301
