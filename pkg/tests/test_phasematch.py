import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c

from conftest import NU_532, NU_890, T0, constant_source, dense_fwhm
from respdc.cavity import IDLER, SIGNAL, MirrorPair
from respdc.dispersion import Polarization, group_index, propagation_constant
from respdc.errors import DomainError
from respdc.phasematch import (SINC2_FWHM_CONSTANT, PhasematchPoint, cluster_spacing_estimate,
                               delta_beta, doubly_resonant_point, phase_mismatch,
                               phasematched_signal, pm_amplitude, pm_bandwidth_estimate,
                               reference_poling_period, sinc_amplitude, sinc2_fwhm_numeric,
                               solve_poling_period)
from respdc.presets import poled_source


def test_point_enforces_energy_conservation():
    p = PhasematchPoint(500e12, 300e12, T0)
    assert p.idler_frequency == 200e12
    assert not hasattr(PhasematchPoint, "__dataclass_fields__") or "idler_frequency" not in \
        PhasematchPoint.__dataclass_fields__
    with pytest.raises(DomainError):
        PhasematchPoint(300e12, 400e12, T0)


def test_poling_period_oracle(model, demo):
    # frozen oracle: 2 pi / (beta_p - beta_s - beta_i) from the dispersion module
    beta = (propagation_constant(model, Polarization.ORDINARY, NU_532, T0)
            - propagation_constant(model, Polarization.ORDINARY, NU_890, T0)
            - propagation_constant(model, Polarization.EXTRAORDINARY, NU_532 - NU_890, T0))
    period = solve_poling_period(demo, 532e-9, 890e-9, T0)
    assert period == pytest.approx(2 * math.pi / beta, rel=1e-12)
    assert period == pytest.approx(4.5434e-6, rel=1e-4)
    # the demonstrator's reference temperature is the setpoint, so no thermal rescaling
    assert demo.poling_period == pytest.approx(period, rel=1e-12)


def test_reference_poling_period_undoes_expansion(demo):
    at_t = demo.poling_period_at(T0 + 10)
    assert reference_poling_period(demo, at_t, T0 + 10) == pytest.approx(demo.poling_period, rel=1e-14)


def test_poling_round_trip(demo):
    nu = phasematched_signal(demo, NU_532, T0)
    assert abs(nu - NU_890) < 1e6


def test_phasematched_signal_near_890nm(demo):
    nu = phasematched_signal(demo, NU_532, T0)
    assert abs(c / nu - 890e-9) < 0.5e-9
    assert abs(delta_beta(demo, NU_532, nu, T0)) < 1e-3


def test_solved_point_has_zero_mismatch(demo):
    point = PhasematchPoint(NU_532, phasematched_signal(demo, NU_532, T0), T0)
    assert abs(phase_mismatch(demo, point)) < 1e-3
    assert pm_amplitude(demo, point) == pytest.approx(1.0, abs=1e-9)


def test_constant_index_mismatch_is_grating_only():
    spec = constant_source(n=2.1, period=5e-6)
    db = delta_beta(spec, 500e12, 300e12, T0)
    assert db == pytest.approx(-2 * math.pi / spec.poling_period_at(T0), rel=1e-9)


def test_mismatch_slope_sign_from_group_indices(demo, setpoint):
    nu_s = setpoint.signal_frequency
    h = 1e8
    slope = (delta_beta(demo, setpoint.pump_frequency, nu_s + h, T0)
             - delta_beta(demo, setpoint.pump_frequency, nu_s - h, T0)) / (2 * h)
    ng_s = group_index(demo.dispersion, SIGNAL, c / nu_s, T0)
    ng_i = group_index(demo.dispersion, IDLER, c / setpoint.idler_frequency, T0)
    expected = 2 * math.pi / c * (ng_i - ng_s)
    assert np.sign(slope) == np.sign(expected)
    assert slope == pytest.approx(expected, rel=1e-3)


def test_mismatch_monotone_across_window(demo):
    bw = 160e9
    nu = NU_890 + np.linspace(-3 * bw, 3 * bw, 2001)
    d = np.diff(delta_beta(demo, NU_532, nu, T0))
    assert np.all(d < 0) or np.all(d > 0)


def test_sinc_amplitude_values():
    assert sinc_amplitude(0.0, 0.01) == 1.0
    assert abs(sinc_amplitude(2 * math.pi / 0.01, 0.01)) < 1e-15


def test_pm_bandwidth_values(demo, setpoint):
    est = pm_bandwidth_estimate(demo, setpoint)
    assert est == pytest.approx(160.51e9, rel=2e-3)
    assert est == pytest.approx(166e9, rel=0.2)
    numeric = sinc2_fwhm_numeric(demo, setpoint)
    assert est == pytest.approx(numeric, rel=0.05)
    # independent dense scan
    nu = setpoint.signal_frequency + np.linspace(-3 * est, 3 * est, 300001)
    db = delta_beta(demo, setpoint.pump_frequency, nu, T0)
    y = np.sinc(db * demo.length_at(T0) / (2 * math.pi)) ** 2
    assert numeric == pytest.approx(dense_fwhm(nu, y), rel=1e-4)
    assert numeric == pytest.approx(166e9, rel=0.2)


def test_estimates_from_quoted_group_index_difference():
    # |dn_g| = 0.13 and L = 12.3 mm give the closed-form values
    spec = constant_source(length=12.3e-3)
    assert SINC2_FWHM_CONSTANT * c / (2 * math.pi * spec.length * 0.13) == pytest.approx(166e9, rel=0.01)
    assert c / (2 * spec.length * 0.13) == pytest.approx(94e9, rel=0.01)


def test_cluster_spacing_value(demo, setpoint):
    assert cluster_spacing_estimate(demo, setpoint) == pytest.approx(90.69e9, rel=2e-3)


def test_estimates_fail_at_group_velocity_matching():
    spec = constant_source(n=2.2, period=5e-6)
    point = PhasematchPoint(500e12, 300e12, T0)
    with pytest.raises(DomainError, match="group-velocity matching"):
        pm_bandwidth_estimate(spec, point)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 0.1), st.floats(800e-9, 960e-9), st.floats(20.0, 220.0))
def test_bandwidth_to_spacing_ratio(length, signal_wl, t):
    spec = poled_source(length, MirrorPair(0.99, 0.98), MirrorPair(0.99, 0.98),
                        pump_wavelength=532e-9, signal_wavelength=signal_wl, temperature=t)
    point = PhasematchPoint(c / 532e-9, c / signal_wl, t)
    ratio = pm_bandwidth_estimate(spec, point) / cluster_spacing_estimate(spec, point)
    assert ratio == pytest.approx(5.56 / math.pi, rel=1e-9)


def test_signal_tuning_slope_matches_implicit_function(demo):
    dt = 0.01
    a = phasematched_signal(demo, NU_532, T0 - dt)
    b = phasematched_signal(demo, NU_532, T0 + dt)
    numeric = (b - a) / (2 * dt)
    nu = phasematched_signal(demo, NU_532, T0)
    h = 1e8
    d_nu = (delta_beta(demo, NU_532, nu + h, T0) - delta_beta(demo, NU_532, nu - h, T0)) / (2 * h)
    d_t = (delta_beta(demo, NU_532, nu, T0 + dt) - delta_beta(demo, NU_532, nu, T0 - dt)) / (2 * dt)
    assert numeric == pytest.approx(-d_t / d_nu, rel=0.01)


def test_no_root_raises():
    spec = constant_source(n=2.2, period=5e-6)
    with pytest.raises(DomainError, match="no phase-matched"):
        phasematched_signal(spec, 500e12, T0)


def test_non_phasematchable_process():
    spec = constant_source(n=2.2, n_e=2.4, period=5e-6)
    with pytest.raises(DomainError, match="not quasi-phasematchable"):
        solve_poling_period(spec, 532e-9, 890e-9, T0)


def test_doubly_resonant_point_sits_on_both_combs(demo):
    from respdc.cavity import roundtrip_phase
    p = doubly_resonant_point(demo, NU_532, NU_890, T0)
    for pol, nu in ((SIGNAL, p.signal_frequency), (IDLER, p.idler_frequency)):
        phi = roundtrip_phase(demo, pol, nu, T0)
        assert abs(phi - 2 * math.pi * round(phi / (2 * math.pi))) < 1e-6
    assert abs(p.pump_frequency - NU_532 - 1.404e9) < 0.01e9


def test_no_multiplicity_warning_for_demonstrator(demo):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        phasematched_signal(demo, NU_532, T0)
