import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import c

from respdc.dispersion import (DispersionModel, Polarization, ThermalModel, group_index,
                               load_dispersion, propagation_constant, refractive_index,
                               sample_length)
from respdc.errors import DomainError

O, E = Polarization.ORDINARY, Polarization.EXTRAORDINARY

# Congruent LN coefficients typed in independently of the package data file.
_EL = {
    O: (4.9048, 0.11775, 0.21802, 0.027153, 2.2314e-8, -2.9671e-8, 2.1429e-8),
    E: (4.5820, 0.099169, 0.21090, 0.021940, 5.2716e-8, -4.9143e-8, 2.2971e-7),
}


def oracle_index(pol, wl_um, t):
    a1, a2, a3, a4, b1, b2, b3 = _EL[pol]
    f = (t - 24.5) * (t + 570.5)
    n2 = a1 + (a2 + b1 * f) / (wl_um ** 2 - (a3 + b2 * f) ** 2) + b3 * f - a4 * wl_um ** 2
    return math.sqrt(n2)


def oracle_group_index(pol, wl_um, t):
    """``n - lam dn/dlam`` with the analytic derivative of the Sellmeier form."""
    a1, a2, a3, a4, b1, b2, b3 = _EL[pol]
    f = (t - 24.5) * (t + 570.5)
    n = oracle_index(pol, wl_um, t)
    d = wl_um ** 2 - (a3 + b2 * f) ** 2
    dn2 = -2 * wl_um * (a2 + b1 * f) / d ** 2 - 2 * a4 * wl_um
    return n - wl_um * dn2 / (2 * n)


def test_ordinary_index_at_helium_neon_line(model):
    # frozen oracle: hand evaluation of the ordinary Sellmeier form at F = 0
    assert refractive_index(model, O, 632.8e-9, 24.5) == pytest.approx(2.28639, abs=1e-5)
    assert refractive_index(model, O, 632.8e-9, 24.5) == pytest.approx(2.286, abs=0.005)


@pytest.mark.parametrize("pol", [O, E])
@pytest.mark.parametrize("wl", [0.532, 0.89, 1.32, 1.55])
@pytest.mark.parametrize("t", [20.0, 148.14, 240.0])
def test_index_matches_independent_sellmeier(model, pol, wl, t):
    assert refractive_index(model, pol, wl * 1e-6, t) == pytest.approx(oracle_index(pol, wl, t), rel=1e-12)


@pytest.mark.parametrize("pol", [O, E])
@pytest.mark.parametrize("wl", [0.532, 0.89, 1.32])
def test_group_index_matches_analytic_derivative(model, pol, wl):
    ng = group_index(model, pol, wl * 1e-6, 148.14)
    assert ng == pytest.approx(oracle_group_index(pol, wl, 148.14), rel=1e-8)


def test_group_index_difference_of_demonstrator_pair(model):
    dng = abs(group_index(model, O, 890e-9, 148.14) - group_index(model, E, 1320e-9, 148.14))
    # frozen oracle from the analytic derivative
    assert dng == pytest.approx(abs(oracle_group_index(O, 0.89, 148.14) - oracle_group_index(E, 1.32, 148.14)),
                                rel=1e-6)
    assert dng == pytest.approx(0.134, abs=0.002)
    assert dng == pytest.approx(0.13, abs=0.03)


def test_group_index_step_halving_converges(model):
    a = group_index(model, O, 890e-9, 148.14, rel_step=1e-3)
    b = group_index(model, O, 890e-9, 148.14, rel_step=5e-4)
    truth = oracle_group_index(O, 0.89, 148.14)
    assert abs(b - truth) <= abs(a - truth) + 1e-12
    assert abs(b - truth) < 1e-9


def test_mode_offset_is_additive(model):
    shifted = model.with_mode_offsets(0.01, 0.01)
    for pol in (O, E):
        for wl in (0.6e-6, 1.0e-6, 1.5e-6):
            base = refractive_index(model, pol, wl, 100.0)
            assert refractive_index(shifted, pol, wl, 100.0) == base + 0.01


def test_index_continuous_at_millikelvin_scale(model):
    a = refractive_index(model, O, 890e-9, 148.14)
    b = refractive_index(model, O, 890e-9, 148.15)
    assert a != b
    assert abs(a - b) < 1e-5


def test_constant_model_has_no_dispersion():
    m = DispersionModel.constant(2.25)
    assert refractive_index(m, O, 1e-6, 100.0) == pytest.approx(2.25, abs=1e-15)
    assert group_index(m, E, 1e-6, 100.0) == pytest.approx(2.25, abs=1e-12)


def test_propagation_constant_closed_form():
    m = DispersionModel.constant(2.0)
    assert propagation_constant(m, O, c / 1e-6, 50.0) == pytest.approx(4 * math.pi * 1e6, rel=1e-14)


def test_propagation_constant_composes_index_oracle(model):
    beta = propagation_constant(model, O, c / 890e-9, 148.14)
    assert beta == pytest.approx(2 * math.pi * oracle_index(O, 0.89, 148.14) / 890e-9, rel=1e-12)


def test_propagation_constant_monotone_in_frequency(model):
    nu = np.linspace(200e12, 400e12, 401)
    for pol in (O, E):
        assert np.all(np.diff(propagation_constant(model, pol, nu, 148.14)) > 0)


def test_negative_uniaxial_and_normal_dispersion(model):
    wl = np.linspace(0.6e-6, 1.6e-6, 51)
    for t in (25.0, 148.14):
        assert np.all(refractive_index(model, E, wl, t) < refractive_index(model, O, wl, t))
        for pol in (O, E):
            assert np.all(group_index(model, pol, wl, t) > refractive_index(model, pol, wl, t))


def test_refractive_index_is_deterministic(model):
    a = refractive_index(model, E, 1.32e-6, 148.14)
    assert all(refractive_index(model, E, 1.32e-6, 148.14) == a for _ in range(5))


@pytest.mark.parametrize("wl,t,word", [(0.3e-6, 100.0, "wavelength"), (3.5e-6, 100.0, "wavelength"),
                                       (1e-6, -5.0, "temperature"), (1e-6, 260.0, "temperature")])
def test_out_of_range_is_rejected(model, wl, t, word):
    with pytest.raises(DomainError, match=word):
        refractive_index(model, O, wl, t)


def test_sample_length_examples():
    th = ThermalModel(1.5e-5, 148.14)
    assert sample_length(th, 1e-2, 148.14 + 0.01) - 1e-2 == pytest.approx(1.5e-9, rel=1e-6)
    assert sample_length(th, 12.3e-3, 148.14) == 12.3e-3
    assert sample_length(th, 12.3e-3, 149.14) - 12.3e-3 == pytest.approx(184.5e-9, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 250.0), st.floats(0.0, 250.0), st.floats(1e-3, 0.1))
def test_sample_length_is_affine(t1, t2, length):
    th = ThermalModel(1.5e-5, 148.14)
    lhs = sample_length(th, length, t1) + sample_length(th, length, t2)
    rhs = 2 * sample_length(th, length, 0.5 * (t1 + t2))
    assert lhs == pytest.approx(rhs, rel=1e-15, abs=0)


def test_data_file_lookup_via_environment(tmp_path, monkeypatch, model):
    text = (load_dispersion.__module__ and
            __import__("importlib.resources", fromlist=["files"]).files("respdc.data")
            .joinpath("cln_edwards_lawrence.toml").read_text())
    (tmp_path / "cln_edwards_lawrence.toml").write_text(text.replace("A1 = 4.9048", "A1 = 4.9148"))
    monkeypatch.setenv("RESPDC_DATA_DIR", str(tmp_path))
    alt = load_dispersion()
    assert refractive_index(alt, O, 1e-6, 50.0) > refractive_index(model, O, 1e-6, 50.0)
    monkeypatch.delenv("RESPDC_DATA_DIR")
    assert load_dispersion() == model


def test_incomplete_table_is_rejected(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[ordinary]\nA1 = 1.0\n[extraordinary]\nA1 = 1.0\n")
    with pytest.raises(DomainError):
        load_dispersion(p)
