import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fringeprobe import analysis, experiment as ex, model
from fringeprobe.errors import DomainError, ScanFormatError
from fringeprobe.experiment import ScanMode, ScanSeries


def scipy_capture(cfg, half_angle):
    beta = math.pi * cfg.wire_thickness / cfg.wavelength
    f = lambda t: np.sinc(beta * np.sin(t) / np.pi) ** 2
    zeros = [math.asin(n * math.pi / beta) for n in range(1, int(beta / math.pi) + 1)]
    total = sum(quad(f, a, b, epsabs=0, epsrel=1e-12)[0]
                for a, b in zip([0.0] + zeros, zeros + [math.pi / 2]))
    return quad(f, 0, half_angle, epsabs=0, epsrel=1e-12)[0] / total


# -- capture fraction -------------------------------------------------------

def test_capture_fraction_reference(cfg):
    eta = ex.capture_fraction(cfg)
    assert eta == pytest.approx(0.101, abs=0.010)
    assert eta == pytest.approx(scipy_capture(cfg, math.atan(cfg.detector_aperture /
                                                             cfg.wire_to_detector)), rel=1e-8)


def test_capture_fraction_half_extent_convention(cfg):
    c = cfg.replace(aperture_convention="half")
    eta = ex.capture_fraction(c)
    assert eta == pytest.approx(scipy_capture(c, math.atan(2.5e-3 / 2.521)), rel=1e-8)
    assert eta == pytest.approx(0.0533, abs=1e-4)


def test_capture_fraction_limits(cfg):
    assert ex.capture_fraction(cfg, half_angle=math.pi / 2) == 1.0
    assert ex.capture_fraction(cfg, half_angle=0.0) == 0.0
    assert 0 < ex.capture_fraction(cfg) < 1
    with pytest.raises(DomainError):
        ex.capture_fraction(cfg, half_angle=-0.1)


def test_capture_fraction_monotone_in_acceptance(cfg):
    vals = [ex.capture_fraction(cfg, half_angle=h) for h in np.linspace(0.0, 0.05, 11)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


# -- flux accounting --------------------------------------------------------

def test_far_wire_blocks_nothing(cfg):
    far = cfg.pattern_offset + 8.5 * cfg.gaussian_radius
    assert ex.photons_blocked(cfg, far) < 1e-10 * ex.total_photons(cfg)
    assert ex.fractional_count(cfg, cfg.pattern_offset + 12 * cfg.gaussian_radius) == 1.0


def test_total_photons_is_budget(cfg):
    assert ex.total_photons(cfg) == cfg.photon_budget
    assert ex.total_photons(cfg.replace(photon_budget=123.0)) == 123.0


def test_partition_sums_to_total(cfg):
    lo, hi = ex.intersection_window(cfg)
    edges = np.linspace(lo, hi, 1001)
    parts = ex.strip_photons(cfg, edges[:-1], edges[1:], spec=ex.FLUX_QUAD)
    assert parts.sum() == pytest.approx(ex.total_photons(cfg), rel=1e-9)


def test_flux_matches_scipy(cfg):
    lo, hi = ex.intersection_window(cfg)
    f = lambda y: model.intersection_intensity(cfg, y)
    expected = quad(f, lo, hi, limit=500, epsabs=0, epsrel=1e-13)[0]
    assert ex.window_flux(cfg) == pytest.approx(expected, rel=1e-11)
    w = cfg.pattern_offset + 40e-6
    h = cfg.wire_thickness / 2
    strip = quad(f, w - h, w + h, epsabs=0, epsrel=1e-13)[0]
    assert ex.photons_blocked(cfg, w) == pytest.approx(cfg.photon_budget * strip / expected,
                                                       rel=1e-9)


def test_blocked_count_oscillates_with_fringe_period(cfg):
    # normalize out the Gaussian envelope, then locate zero crossings
    y = np.linspace(cfg.pattern_offset - 4e-4, cfg.pattern_offset + 4e-4, 4001)
    both = ex.photons_blocked(cfg, y)
    single = ex.photons_blocked(cfg, y, ScanMode.ONE_BEAM_BLOCKED)
    r = both / single
    r = r - r.mean()
    i = np.where(np.sign(r[:-1]) != np.sign(r[1:]))[0]
    zeros = y[i] - r[i] * (y[i + 1] - y[i]) / (r[i + 1] - r[i])
    period = 2 * np.mean(np.diff(zeros))
    assert period == pytest.approx(model.fringe_spacing(cfg), rel=5e-3)


def test_bright_dark_ratio_thin_wire(cfg):
    c = cfg.replace(wire_thickness=1e-6)
    half = math.pi / (2 * model.fringe_wavenumber(c))
    pts = np.array([c.pattern_offset, c.pattern_offset + half])
    both = ex.photons_blocked(c, pts) / ex.flux_scale(c)
    env = ex.photons_blocked(c, pts, ScanMode.ONE_BEAM_BLOCKED) / \
        ex.flux_scale(c, ScanMode.ONE_BEAM_BLOCKED)
    ratio = (both[0] / env[0]) / (both[1] / env[1])
    a = c.amplitude_asymmetry
    assert ratio == pytest.approx((a + 1) / a, rel=1e-3)


def test_photon_conservation(cfg):
    lo, hi = ex.intersection_window(cfg)
    h = cfg.wire_thickness / 2
    for w in np.linspace(lo + h, hi - h, 20):
        n0 = ex.total_photons(cfg)
        total = ex.photons_past_wire(cfg, w) + ex.photons_blocked(cfg, w)
        assert total == pytest.approx(n0, rel=1e-9)


def test_overlap_identity(cfg):
    for w in cfg.pattern_offset + np.array([-2e-4, -5e-5, 0.0, 3e-5, 1.7e-4]):
        assert ex.overlap_photons(cfg, w) == pytest.approx(ex.photons_blocked(cfg, w),
                                                           rel=1e-9)


def test_slit_and_wire_share_count(cfg):
    w = cfg.pattern_offset + 12e-6
    assert ex.photons_through_slit(cfg, w) == ex.photons_blocked(cfg, w)
    n = ex.detected_photons(cfg, w)
    eta = ex.capture_fraction(cfg)
    n_sw = ex.photons_blocked(cfg, w)
    assert n == pytest.approx(ex.total_photons(cfg) - (2 - eta) * n_sw, rel=1e-15)


def test_fraction_bounds(cfg):
    y = np.linspace(-0.5e-3, 1.6e-3, 801)
    f = ex.fractional_count(cfg, y)
    assert np.all((f > 0) & (f <= 1))


def test_fraction_independent_of_budget(cfg):
    y = ex.scan_positions(cfg, 60)
    f6 = ex.fractional_count(cfg.replace(photon_budget=1e6), y)
    f9 = ex.fractional_count(cfg.replace(photon_budget=1e9), y)
    np.testing.assert_allclose(f6, f9, rtol=1e-14, atol=0)


def _local_extrema(y, v, kind):
    if kind == "min":
        i = np.where((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:]))[0] + 1
    else:
        i = np.where((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:]))[0] + 1
    return y[i]


def test_fraction_extrema_follow_fringes(cfg):
    y = np.linspace(*ex.intersection_window(cfg), 20001)
    f = ex.fractional_count(cfg, y)
    inten = model.intersection_intensity(cfg, y)
    f_min, f_max = _local_extrema(y, f, "min"), _local_extrema(y, f, "max")
    i_max, i_min = _local_extrema(y, inten, "max"), _local_extrema(y, inten, "min")
    assert len(f_min) == len(i_max) and len(f_max) == len(i_min)
    # wire averaging moves extrema by at most a few percent of a fringe
    l = model.fringe_spacing(cfg)
    assert np.max(np.abs(f_min - i_max)) < 0.03 * l
    assert np.max(np.abs(f_max - i_min)) < 0.03 * l


def test_both_beams_curve_shape(cfg):
    y = np.linspace(*ex.intersection_window(cfg), 4001)
    f = ex.fractional_count(cfg, y)
    assert abs(y[np.argmin(f)] - cfg.pattern_offset) < 2e-6
    assert analysis.has_spectral_peak(y, f, 1 / model.fringe_spacing(cfg))


def test_single_beam_curve(cfg):
    y = np.linspace(*ex.intersection_window(cfg), 4001)
    f = ex.fractional_count_single_beam(cfg, y)
    mins = _local_extrema(y, f, "min")
    assert len(mins) == 1 and abs(mins[0] - cfg.pattern_offset) < 1e-6
    assert ex.fractional_count_single_beam(cfg, cfg.pattern_offset + 12 * cfg.gaussian_radius) == 1.0
    assert not analysis.has_spectral_peak(y, f, 1 / model.fringe_spacing(cfg))


# -- simulation -------------------------------------------------------------

def test_noise_free_limit(cfg):
    pos = ex.scan_positions(cfg, 50)
    scan = ex.simulate_scan(cfg, pos, 1e10, seed=0, noise_free=True)
    np.testing.assert_allclose(scan.f, ex.fractional_count(cfg, pos), atol=1e-5)
    noisy = ex.simulate_scan(cfg, pos, 1e10, seed=0)
    np.testing.assert_allclose(noisy.f, ex.fractional_count(cfg, pos), atol=1e-4)


def test_simulation_deterministic(cfg):
    pos = ex.scan_positions(cfg, 30)
    a = ex.simulate_scan(cfg, pos, 1e5, seed=7)
    b = ex.simulate_scan(cfg, pos, 1e5, seed=7)
    c = ex.simulate_scan(cfg, pos, 1e5, seed=8)
    assert a == b
    assert a.f != c.f
    assert a.meta["seed"] == "7" and a.meta["config_hash"] == cfg.config_hash()


def test_point_streams_are_order_independent(cfg):
    pos = ex.scan_positions(cfg, 12)
    scan = ex.simulate_scan(cfg, pos, 50.0, seed=3)
    means = 50.0 * ex.fractional_count(cfg, pos)
    for i in reversed(range(12)):
        assert ex.poisson_draw(means[i], ex.point_rng(3, i)) == scan.f[i] * 50.0


@pytest.mark.parametrize("photons", [20.0, 1e4])
def test_poisson_variance(cfg, photons):
    pos = np.linspace(-1e-3, 2e-3, 1000)
    scan = ex.simulate_scan(cfg, pos, photons, seed=11)
    f = ex.fractional_count(cfg, pos)
    dev = (np.array(scan.f) - f) * photons
    mean_count = np.mean(photons * f)
    assert np.var(dev, ddof=1) == pytest.approx(mean_count, rel=0.10)
    assert abs(np.mean(dev)) < 4 * math.sqrt(mean_count / 1000)


def test_poisson_draw_inversion_small_mean():
    rng = np.random.default_rng(0)
    draws = np.array([ex.poisson_draw(3.0, rng) for _ in range(20000)])
    assert draws.mean() == pytest.approx(3.0, rel=0.03)
    assert np.mean(draws == 0) == pytest.approx(math.exp(-3), rel=0.1)
    assert ex.poisson_draw(0.0, rng) == 0
    with pytest.raises(DomainError):
        ex.poisson_draw(-1.0, rng)


def test_simulate_preconditions(cfg):
    with pytest.raises(DomainError):
        ex.simulate_scan(cfg, [1e-4, 2e-4], 0.5, seed=0)
    with pytest.raises(DomainError):
        ex.simulate_scan(cfg, [], 10, seed=0)
    with pytest.raises(DomainError):
        ex.simulate_scan(cfg, [2e-4, 1e-4], 10, seed=0)


def test_scan_series_invariants():
    with pytest.raises(DomainError):
        ScanSeries(positions=[0.0, 0.0], f=[1, 1], f_err=[0, 0])
    with pytest.raises(DomainError):
        ScanSeries(positions=[0.0], f=[-0.1], f_err=[0])
    with pytest.raises(DomainError):
        ScanSeries(positions=[0.0], f=[0.5], f_err=[-1])
    s = ScanSeries(positions=[0.0, 1.0], f=[1.5, 0.9], f_err=[0.1, 0.1])
    assert s.outliers() == [0]


# -- CSV --------------------------------------------------------------------

def test_csv_round_trip(cfg, tmp_path):
    scan = ex.simulate_scan(cfg, ex.scan_positions(cfg, 50), 1e6, seed=42,
                            mode=ScanMode.ONE_BEAM_BLOCKED)
    text = ex.format_scan(scan)
    assert "position_mm,f,f_err" in text.splitlines()
    assert text.startswith("#")
    assert ex.parse_scan(text) == scan
    ex.write_scan(scan, tmp_path / "s.csv")
    assert ex.read_scan(tmp_path / "s.csv") == scan


finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=30, unique=True),
       st.floats(0, 2), st.floats(0, 1e-2))
def test_csv_round_trip_bit_exact(positions, f, err):
    positions = sorted(positions)
    n = len(positions)
    scan = ScanSeries(positions=positions, f=[f] * n, f_err=[err] * n,
                      meta={"seed": "1", "mode": "both_beams"})
    back = ex.parse_scan(ex.format_scan(scan))
    assert back == scan
    assert all(a.hex() == b.hex() for a, b in zip(back.positions, scan.positions))


@pytest.mark.parametrize("text", [
    "",
    "x,y,z\n1,2,3\n",
    "position_mm,f,f_err\n1,2\n",
    "position_mm,f,f_err\n1,abc,0.1\n",
    "# mode: sideways\nposition_mm,f,f_err\n1,0.5,0.1\n",
    "position_mm,f,f_err\n2,0.5,0.1\n1,0.5,0.1\n",
])
def test_csv_rejects_malformed(text):
    with pytest.raises(ScanFormatError):
        ex.parse_scan(text)
