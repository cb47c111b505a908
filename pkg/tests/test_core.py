import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biphoton.core import (
    AmplitudeGrid,
    PumpProfile,
    ScenarioConfig,
    amplitude,
    amplitude_grid,
    detuning_angles,
    detuning_exact,
    grid_axis,
    make_scenario,
    phase_bracket,
    pump_amplitude,
    pump_intensity,
    sinc,
)
from biphoton.errors import DomainError, EvanescentError

angles = st.floats(-0.2, 0.2, allow_nan=False)


def test_defaults(parallel):
    assert parallel.L == 1.5
    assert parallel.lambda_p == 325.0
    assert parallel.kp0 == pytest.approx(2 * math.pi / 325e-7)
    assert parallel.n_o == pytest.approx(1.87978, abs=1e-5)


def test_make_scenario_geometries():
    assert make_scenario(geometry="perp").np_eff == 0.0
    assert make_scenario(geometry="parallel").np_eff < -0.1
    with pytest.raises(DomainError):
        make_scenario(geometry="custom")
    with pytest.raises(DomainError):
        make_scenario(geometry="diagonal")


@pytest.mark.parametrize("kw", [{"L": 0}, {"lambda_p": -1}, {"n_o": 0.5}, {"np_eff": math.nan}])
def test_scenario_validation(kw):
    base = dict(L=1.0, lambda_p=325.0, n_o=1.8, np_eff=0.0, pump=PumpProfile(1e-3))
    with pytest.raises(DomainError):
        ScenarioConfig(**{**base, **kw})


def test_pump_validation():
    with pytest.raises(DomainError):
        PumpProfile(0.0)
    with pytest.raises(DomainError):
        PumpProfile(1e-3, shape="flat")


def test_sinc_branches():
    assert sinc(0.0) == 1.0
    assert sinc(1e-5) == pytest.approx(1 - 1e-10 / 6, rel=1e-15)
    u = np.array([1e-4, 0.5, 3.0, -2.0])
    assert np.allclose(sinc(u), np.sin(u) / u, rtol=1e-15)


def test_pump_fwhm_is_alpha():
    pump = PumpProfile(4.114e-3)
    assert pump_intensity(pump, pump.alpha / 2) == pytest.approx(0.5)
    assert pump_amplitude(pump, 0.3e-3) ** 2 == pytest.approx(pump_intensity(pump, 0.3e-3))


@settings(max_examples=200, deadline=None)
@given(angles, angles, st.floats(-0.3, 0.3))
def test_exchange_symmetry(t1, t2, npe):
    cfg = make_scenario(geometry="custom", np_eff=npe)
    assert amplitude(cfg, t1, t2) == amplitude(cfg, t2, t1)


@settings(max_examples=200, deadline=None)
@given(angles, angles)
def test_monken_reduction_exact(t1, t2):
    cfg = make_scenario(geometry="perp")
    expected = pump_amplitude(cfg.pump, (t1 + t2) / 2) * sinc(cfg.sinc_scale * (t1 - t2) ** 2)
    assert amplitude(cfg, t1, t2) == expected


def test_amplitude_at_origin(parallel):
    assert amplitude(parallel, 0.0, 0.0) == 1.0


def test_second_root_is_phase_matched(parallel):
    # 4 |np_eff| zeroes the bracket at theta2 = 0; the pump factor is negligible there
    assert detuning_angles(parallel, 4 * 0.1436, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert amplitude(parallel, 4 * 0.1436, 0.0) < 1e-100


def test_paraxial_detuning_matches_exact_form():
    # pump index n_o + np * (internal pump angle), internal angle = external / n_o
    n_o, lam = 1.88, 325e-7
    kp0 = 2 * math.pi / lam
    npe = -0.1436
    cfg = ScenarioConfig(L=1.0, lambda_p=325.0, n_o=n_o, np_eff=npe, pump=PumpProfile(1e-3))
    for t1, t2 in [(1e-3, 0.0), (2e-3, -1e-3), (5e-4, 5e-4)]:
        k = n_o * kp0 / 2
        q1, q2 = kp0 * t1 / 2, kp0 * t2 / 2
        tp = (t1 + t2) / 2
        kp = kp0 * (n_o + npe * tp / n_o)
        exact = detuning_exact(q1, q2, k, k, kp)
        approx = detuning_angles(cfg, t1, t2)
        assert exact == pytest.approx(approx, rel=1e-3)


def test_detuning_exact_evanescent():
    with pytest.raises(EvanescentError):
        detuning_exact(2.0, 0.0, 1.0, 1.0, 2.0)


def test_phase_bracket_formula():
    assert phase_bracket(-0.1, 0.01, 0.02) == pytest.approx(4 * -0.1 * 0.03 + 1e-4)


def test_grid_orientation(parallel):
    a1 = grid_axis(-0.01, 0.01, 5)
    a2 = grid_axis(-0.02, 0.02, 7)
    g = amplitude_grid(parallel, a1, a2)
    assert g.shape == (5, 7)
    assert g.values[1, 3] == amplitude(parallel, a1[1], a2[3])


def test_grid_validation():
    with pytest.raises(ValueError):
        AmplitudeGrid([0, 1], [0, 1], np.zeros((3, 2)))
    with pytest.raises(ValueError):
        AmplitudeGrid([1, 0], [0, 1], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        AmplitudeGrid([0, 1], [0, 1], np.zeros((2, 2)), domain_tag="time")
    with pytest.raises(DomainError):
        grid_axis(0, math.inf, 4)
    with pytest.raises(DomainError):
        grid_axis(1, 0, 4)
