import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from biphoton.core import PumpProfile, ScenarioConfig, amplitude_grid
from biphoton.distributions import (
    SampledCurve,
    coincidence_curve,
    coordinate_amplitude,
    coordinate_curve,
    coordinate_fft,
    coordinate_wavefunction,
    envelope_half_width,
    fwhm,
    grid_slices,
    peak_normalized,
    pm_roots,
    read_curve_csv,
    read_grid_csv,
    single_particle_analytic,
    single_particle_quadrature,
    single_particle_unnormalized,
    sinc2_curve,
    total_power,
    validity_check,
    write_curve_csv,
    write_grid_csv,
)
from biphoton.errors import NoPeakError, ResolutionError, TruncationError, ValidityError

LN2 = math.log(2)


def gaussian(x, w, x0=0.0):
    return np.exp(-4 * LN2 * (x - x0) ** 2 / w**2)


# --- FWHM ---------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(-2.0, 2.0))
def test_fwhm_of_gaussian(w, x0):
    x = np.linspace(-10, 10, 20001)
    rep = fwhm(peak_normalized(x, gaussian(x, w, x0)))
    assert rep.fwhm == pytest.approx(w, rel=1e-5)
    assert rep.peak_location == pytest.approx(x0, abs=1e-3)
    assert rep.n_peaks_detected == 1


def test_fwhm_linear_interpolation_exact_for_triangle():
    x = np.linspace(-1, 1, 11)
    y = 1 - np.abs(x)
    assert fwhm(peak_normalized(x, y)).fwhm == pytest.approx(1.0, abs=1e-12)


def test_fwhm_peak_policies():
    x = np.linspace(-10, 10, 4001)
    y = gaussian(x, 1.0, -4.0) + 0.8 * gaussian(x, 0.5, 1.0)
    curve = peak_normalized(x, y)
    near = fwhm(curve, "nearest_zero")
    top = fwhm(curve, "global_max")
    assert near.n_peaks_detected == 2
    assert near.peak_location == pytest.approx(1.0, abs=0.01)
    assert near.fwhm == pytest.approx(0.5, rel=1e-3)
    assert top.peak_location == pytest.approx(-4.0, abs=0.01)
    assert top.fwhm == pytest.approx(1.0, rel=1e-3)
    assert near.selected_peak_index == 1 and top.selected_peak_index == 0


def test_fwhm_truncation_and_no_peak():
    x = np.linspace(0, 1, 50)
    with pytest.raises(TruncationError):
        fwhm(peak_normalized(x, np.exp(-x)))
    with pytest.raises(NoPeakError):
        fwhm(SampledCurve(x, np.zeros_like(x), "unit_area"))
    with pytest.raises(NoPeakError):
        fwhm(SampledCurve([0, 1], [1, 0.5]))


def test_asymmetric_peak_width_is_crossing_distance():
    x = np.linspace(-5, 5, 10001)
    y = np.where(x < 0, gaussian(x, 1.0), gaussian(x, 3.0))
    rep = fwhm(peak_normalized(x, y))
    assert rep.fwhm == pytest.approx(2.0, rel=1e-4)
    assert rep.left == pytest.approx(-0.5, abs=1e-3) and rep.right == pytest.approx(1.5, abs=1e-3)


def test_curve_validation():
    with pytest.raises(ValueError):
        SampledCurve([0, 1, 1], [1, 1, 1])
    with pytest.raises(ValueError):
        SampledCurve([0, 1], [1, -1])
    with pytest.raises(ValueError):
        SampledCurve([0, 1], [0.5, 0.4])
    with pytest.raises(ValueError):
        SampledCurve([0, 1], [1, 0], label="a,b")


# --- momentum curves ------------------------------------------------------------


def test_sinc_widths_closed_form(perp, parallel):
    # sinc(u)^2 = 1/2 at u = 1.39156; oracle widths from the bracket alone
    u_half = 1.3915573782515103
    x = np.linspace(-0.06, 0.06, 24001)
    w_perp = fwhm(sinc2_curve(perp, x)).fwhm
    assert w_perp == pytest.approx(2 * math.sqrt(u_half / perp.sinc_scale), rel=1e-4)
    x = np.linspace(-0.002, 0.002, 8001)
    w_par = fwhm(sinc2_curve(parallel, x)).fwhm
    assert w_par == pytest.approx(2 * u_half / (4 * 0.1436 * parallel.sinc_scale), rel=1e-2)


def test_fig2_peak_count(parallel):
    x = np.linspace(-0.05, 0.7, 80001)
    counts = [fwhm(sinc2_curve(parallel.with_np_eff(v), x)).n_peaks_detected for v in (0.0, -0.1436)]
    assert counts == [1, 2]


def test_coincidence_perp_is_pump_limited(perp):
    x = np.linspace(-0.03, 0.03, 6001)
    w = fwhm(coincidence_curve(perp, x)).fwhm
    assert w / perp.alpha == pytest.approx(2.0, rel=0.05)


def test_pm_roots(parallel):
    small, big = pm_roots(parallel, 0.0)
    assert small == 0.0 and big == pytest.approx(4 * 0.1436)
    for t1 in (1e-4, 0.01, -0.05):
        a, b = pm_roots(parallel, t1)
        for r in (a, b):
            assert 4 * parallel.np_eff * r + (r - 2 * t1) ** 2 == pytest.approx(0.0, abs=1e-15)
        assert abs(a) < abs(b)


def test_small_root_is_stable_for_tiny_theta(parallel):
    a, _ = pm_roots(parallel, 1e-9)
    assert a == pytest.approx(1e-18 / 0.1436, rel=1e-6)


def test_validity_numbers(parallel):
    v = validity_check(parallel)
    assert v.lhs == pytest.approx(parallel.L * parallel.kp0 * 0.1436 / (2 * parallel.n_o))
    assert v.rhs == pytest.approx(2 / 4.114e-3)
    assert v.ok
    assert not validity_check(parallel.with_np_eff(0.0)).ok


def test_analytic_singles_requires_validity(perp):
    with pytest.raises(ValidityError):
        single_particle_analytic(perp, np.linspace(-0.01, 0.01, 11))


def test_analytic_singles_not_centred_at_zero(parallel):
    x = np.linspace(-0.08, 0.08, 2001)
    rep = fwhm(single_particle_analytic(parallel, x))
    assert abs(rep.peak_location) > 1e-3


def test_analytic_singles_alpha_scaling(parallel):
    # small-theta expansion: width ~ 2 sqrt(alpha |np'|) times a constant
    x = np.linspace(-0.2, 0.2, 8001)
    w1 = fwhm(single_particle_analytic(parallel, x)).fwhm
    w4 = fwhm(single_particle_analytic(parallel.with_alpha(4 * parallel.alpha), x)).fwhm
    assert w4 / w1 == pytest.approx(2.0, rel=0.1)


def test_quadrature_vs_analytic_parallel(parallel):
    x = np.linspace(-0.08, 0.08, 201)
    q = single_particle_quadrature(parallel, x)
    a = single_particle_analytic(parallel, x)
    assert np.max(np.abs(q.density - a.density)) < 0.03


def test_quadrature_reaches_pump_integral_when_sinc_is_flat():
    cfg = ScenarioConfig(L=1e-6, lambda_p=325.0, n_o=1.88, np_eff=0.0, pump=PumpProfile(4e-3))
    val, err = single_particle_unnormalized(cfg, 0.0)
    expected = cfg.alpha * math.sqrt(math.pi / LN2)
    assert val == pytest.approx(expected, rel=1e-6)


def test_quadrature_singles_symmetric_in_perp(perp):
    x = np.linspace(-0.03, 0.03, 31)
    d = single_particle_quadrature(perp, x).density
    assert np.allclose(d, d[::-1], rtol=1e-5, atol=1e-8)


# --- coordinate space -----------------------------------------------------------


def test_envelope_cutoff(parallel):
    T = envelope_half_width(parallel)
    env = math.exp(-LN2 * T**4 / (2 * parallel.alpha**2 * 0.1436**2))
    assert env == pytest.approx(1e-10, rel=1e-9)


def test_coordinate_origin_and_symmetry(parallel):
    assert coordinate_amplitude(parallel, 0.0, 0.0) == pytest.approx(1.0)
    xi = np.array([5.0, 30.0, 100.0])
    a = coordinate_amplitude(parallel, xi, -2 * xi)
    b = coordinate_amplitude(parallel, -2 * xi, xi)
    assert np.allclose(a, b, atol=1e-7)


def test_coordinate_requires_validity(perp):
    with pytest.raises(ValidityError):
        coordinate_amplitude(perp, 0.0, 0.0)


def test_coordinate_resolution_error(parallel):
    with pytest.raises(ResolutionError):
        coordinate_amplitude(parallel, 1e7, 1e7)


def test_coordinate_agrees_with_dense_quadrature(parallel):
    # brute-force trapezoid over the full envelope as oracle
    T = envelope_half_width(parallel)
    th = np.linspace(-T, T, 200001)
    env = np.exp(-LN2 * th**4 / (2 * parallel.alpha**2 * 0.1436**2))
    ref = trapezoid(env, th)
    for x1, x2 in [(40.0, 0.0), (300.0, 300.0), (25.0, -25.0)]:
        ph = -(x1 + x2) * th**2 / (2 * parallel.np_eff) + (x1 - x2) * th
        expected = trapezoid(env * np.exp(1j * ph), th) / ref
        assert coordinate_amplitude(parallel, x1, x2) == pytest.approx(expected, abs=1e-6)


def test_coordinate_widths_independent_of_length(parallel):
    ax = np.linspace(-400, 400, 801)
    a = fwhm(coordinate_curve(parallel, "coincidence", ax)).fwhm
    b = fwhm(coordinate_curve(parallel.with_length(3.0), "coincidence", ax)).fwhm
    assert a == b


def test_wavefunction_grid(parallel):
    ax = np.linspace(-50, 50, 11)
    g = coordinate_wavefunction(parallel, ax, ax)
    assert g.domain_tag == "coordinate"
    assert g.values[5, 5] == pytest.approx(1.0)


@pytest.fixture(scope="module")
def small_scenario():
    return ScenarioConfig(L=0.108, lambda_p=325.0, n_o=1.8797813, np_eff=-0.1436, pump=PumpProfile(0.05))


def test_fft_parseval_and_slices(small_scenario):
    th = np.linspace(-0.5, 0.7, 256, endpoint=False)
    grid = amplitude_grid(small_scenario, th)
    coord = coordinate_fft(grid, pad=4)
    d = coord.axis1[1] - coord.axis1[0]
    p_xi = np.sum(np.abs(coord.values) ** 2) * d * d
    p_th = np.sum(np.abs(grid.values) ** 2) * (th[1] - th[0]) ** 2
    assert p_xi == pytest.approx(p_th, rel=1e-10)
    slices = grid_slices(coord)
    assert set(slices) == {"coincidence", "sum", "difference"}
    w = fwhm(slices["coincidence"]).fwhm
    ref = fwhm(coordinate_curve(small_scenario, "coincidence", np.linspace(-100, 100, 2001))).fwhm
    assert w == pytest.approx(ref, rel=0.05)


def test_fft_needs_uniform_axis(small_scenario):
    th = np.concatenate([np.linspace(-0.1, 0, 10), [0.05, 0.2]])
    with pytest.raises(ValueError):
        coordinate_fft(amplitude_grid(small_scenario, th))


def test_total_power_uniform_grid(small_scenario):
    th = np.linspace(-0.5, 0.7, 64, endpoint=False)
    grid = amplitude_grid(small_scenario, th)
    assert total_power(grid) == pytest.approx(np.sum(np.abs(grid.values) ** 2) * (th[1] - th[0]) ** 2)


# --- CSV ------------------------------------------------------------------------


def test_curve_csv_roundtrip_is_exact(tmp_path, parallel):
    x = np.linspace(-0.002, 0.002, 101)
    c = coincidence_curve(parallel, x)
    p = write_curve_csv(c, tmp_path / "c.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "# coincidence, peak_one, rad"
    assert lines[1] == "axis,density"
    back = read_curve_csv(p)
    assert np.array_equal(back.axis, c.axis) and np.array_equal(back.density, c.density)
    assert (back.label, back.units) == ("coincidence", "rad")


def test_grid_csv_roundtrip(tmp_path, parallel):
    ax = np.linspace(-30, 30, 5)
    g = coordinate_wavefunction(parallel, ax, ax)
    back = read_grid_csv(write_grid_csv(g, tmp_path / "g.csv"))
    assert back.domain_tag == "coordinate"
    assert np.array_equal(back.values, g.values)
