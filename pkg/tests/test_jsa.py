import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import T0
from respdc.cavity import IDLER, SIGNAL, MirrorPair, free_spectral_range, resonance_linewidth
from respdc.errors import DomainError, ResolutionError
from respdc.jsa import (PumpLineshape, PumpSpec, SchmidtMode, apply_cluster_filter, build_jsa,
                        default_windows,
                        evaluate_purity, herald_marginal, mode_excitation_probability,
                        purity_report, purity_vs_pump_bandwidth, schmidt_number,
                        schmidt_number_matrix)
from respdc.phasematch import delta_beta
from respdc.presets import demonstrator_setpoint, geometry_case


def gram_schmidt_number(matrix):
    """Oracle: K from the eigenvalues of G = J J^T, no SVD involved."""
    j = np.abs(np.asarray(matrix, dtype=float))
    ev = np.linalg.eigvalsh(j @ j.T)
    ev = np.clip(ev, 0, None)
    p = ev / ev.sum()
    return 1.0 / np.sum(p ** 2)


@pytest.fixture(scope="module")
def demo_pump(setpoint):
    return PumpSpec(setpoint.pump_frequency, 100e6)


@pytest.fixture(scope="module")
def demo_js(demo, setpoint, demo_pump):
    return build_jsa(demo, demo_pump, T0, signal_hint=setpoint.signal_frequency)


@pytest.fixture(scope="module")
def demo_filtered(demo, demo_js):
    return apply_cluster_filter(demo_js, demo)


# ---------------------------------------------------------------- Schmidt

def test_separable_matrix_has_unit_schmidt_number():
    x = np.linspace(-3, 3, 40)
    m = np.exp(-x[:, None] ** 2) * np.exp(-(x[None, :] - 0.5) ** 2 / 2)
    assert schmidt_number_matrix(m) == pytest.approx(1.0, abs=1e-6)


def test_antidiagonal_two_by_two():
    assert schmidt_number_matrix([[0, 1], [1, 0]]) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2 ** 31 - 1))
def test_svd_matches_gram_oracle(n, m, seed):
    mat = np.random.default_rng(seed).normal(size=(n, m))
    assert schmidt_number_matrix(mat) == pytest.approx(gram_schmidt_number(mat), abs=1e-9)


def test_schmidt_number_is_at_least_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert schmidt_number_matrix(rng.random((8, 11))) >= 1.0 - 1e-12


# ---------------------------------------------------------------- JSA build

def test_bare_waveguide_factorizes(demo, setpoint):
    bare = demo.replace(mirrors_signal=MirrorPair(0, 0), mirrors_idler=MirrorPair(0, 0),
                        loss_signal=0.0, loss_idler=0.0)
    pump = PumpSpec(setpoint.pump_frequency, 20e9)
    nu_s, nu_i = setpoint.signal_frequency, setpoint.idler_frequency
    js = build_jsa(bare, pump, T0, (nu_s - 50e9, nu_s + 50e9), (nu_i - 50e9, nu_i + 50e9),
                   resolution=0.5e9)
    rows = np.broadcast_to(np.arange(js.shape[0])[:, None], js.band.shape)[js.valid]
    cols = js.idler_indices()[js.valid]
    fs, fi = js.signal_grid[rows], js.idler_grid[cols]
    total = fs + fi
    db = delta_beta(bare, total, fs, T0)
    expected = pump.amplitude(total - pump.central_frequency) * np.abs(
        np.sinc(db * bare.length_at(T0) / (2 * math.pi)))
    assert np.max(np.abs(np.abs(js.band[js.valid]) - expected)) < 1e-12


def test_resolution_guard(demo, demo_pump, setpoint):
    lw = resonance_linewidth(demo, SIGNAL, setpoint.signal_frequency, T0)
    with pytest.raises(ResolutionError, match="points are required"):
        build_jsa(demo, demo_pump, T0, resolution=lw / 4, signal_hint=setpoint.signal_frequency)
    with pytest.raises(ResolutionError):
        build_jsa(demo, demo_pump, T0, points_per_linewidth=4)


def test_excited_peaks_lie_on_pump_band(demo_js, demo_pump):
    inten = demo_js.intensity(masked=False)
    strong = inten > 1e-3 * inten.max()
    # local maxima along the stored band of each row
    peak = strong & (inten >= np.roll(inten, 1, axis=1)) & (inten >= np.roll(inten, -1, axis=1))
    r, k = np.nonzero(peak)
    freq_sum = demo_js.signal_grid[r] + demo_js.idler_grid[demo_js.idler_indices()[r, k]]
    assert len(r) > 0
    assert np.all(np.abs(freq_sum - demo_pump.central_frequency) < demo_pump.bandwidth_fwhm)


def test_relabeling_symmetry(demo, setpoint):
    pump = PumpSpec(setpoint.pump_frequency, 100e6)
    fsr = free_spectral_range(demo, SIGNAL, setpoint.signal_frequency, T0)
    nu_s, nu_i = setpoint.signal_frequency, setpoint.idler_frequency
    ws = (nu_s - 0.6 * fsr, nu_s + 0.6 * fsr)
    wi = (nu_i - 0.6 * fsr, nu_i + 0.6 * fsr)
    a = build_jsa(demo, pump, T0, ws, wi)
    b = build_jsa(demo, pump, T0, wi, ws, swap_roles=True)
    da, db_ = np.abs(a.dense()), np.abs(b.dense().T)
    both = a.dense("mask") & b.dense("mask").T
    assert both.sum() > 0.9 * min(a.valid.sum(), b.valid.sum())
    assert np.max(np.abs(da - db_)[both]) <= 1e-12 * da.max()


# ---------------------------------------------------------------- filtering

def _kept_fraction(spec, pump, hint):
    # herald window wide enough to hold both side clusters
    ws, wi = default_windows(spec, pump, T0, idler_halfwidth=1.5, signal_hint=hint)
    js = build_jsa(spec, pump, T0, ws, wi)
    filtered = apply_cluster_filter(js, spec)
    return filtered.intensity(masked=True).sum() / js.intensity(masked=False).sum(), filtered


def test_default_filter_keeps_central_cluster(demo, setpoint):
    cw = PumpSpec(setpoint.pump_frequency, 0.0, PumpLineshape.MONOCHROMATIC)
    kept, filtered = _kept_fraction(demo, cw, setpoint.signal_frequency)
    assert kept == pytest.approx(0.90, abs=0.05)
    assert filtered.filter_width == pytest.approx(90.69e9, rel=2e-3)
    assert abs(filtered.filter_center - setpoint.idler_frequency) < 0.01e9


def test_broadband_pump_feeds_side_clusters(demo, setpoint, demo_pump):
    kept, _ = _kept_fraction(demo, demo_pump, setpoint.signal_frequency)
    assert kept == pytest.approx(0.801, abs=0.005)


def test_whole_window_filter_changes_nothing(demo, demo_js):
    grid = demo_js.idler_grid
    full = apply_cluster_filter(demo_js, demo, filter_fwhm=grid[-1] - grid[0],
                                center=0.5 * (grid[0] + grid[-1]))
    assert np.array_equal(full.filter_mask, demo_js.valid)
    a, b = purity_report(full), purity_report(demo_js)
    assert abs(a.mode_excitation - b.mode_excitation) < 1e-12
    assert abs(a.schmidt_number - b.schmidt_number) < 1e-12


def test_filter_wider_than_window_is_rejected(demo, demo_js):
    with pytest.raises(DomainError, match="exceeds"):
        apply_cluster_filter(demo_js, demo, filter_fwhm=1e13)


def test_narrow_filter_isolates_dominant_mode(demo, demo_filtered):
    rep = purity_report(demo_filtered)
    lw_i = resonance_linewidth(demo, IDLER, rep.dominant_mode[1], T0)
    tight = apply_cluster_filter(demo_filtered, demo, filter_fwhm=2 * lw_i, center=rep.dominant_mode[1])
    assert mode_excitation_probability(tight) > 0.99


def test_filter_monotonicity(demo, demo_js, demo_filtered):
    grid = demo_js.idler_grid
    m_full = mode_excitation_probability(apply_cluster_filter(
        demo_js, demo, filter_fwhm=grid[-1] - grid[0], center=0.5 * (grid[0] + grid[-1])))
    assert m_full <= mode_excitation_probability(demo_filtered)


def test_empty_mask_is_rejected(demo, demo_js):
    empty = apply_cluster_filter(demo_js, demo, filter_fwhm=1e3, center=demo_js.idler_grid[0] - 1e9)
    with pytest.raises(DomainError):
        mode_excitation_probability(empty)


def test_herald_marginal_conserves_weight(demo_js):
    assert herald_marginal(demo_js).sum() == pytest.approx(demo_js.intensity(masked=False).sum(), rel=1e-12)
    assert herald_marginal(demo_js, axis=0).sum() == pytest.approx(herald_marginal(demo_js).sum(), rel=1e-12)


# ---------------------------------------------------------------- purity

def test_single_resonance_window(demo, setpoint):
    pump = PumpSpec(setpoint.pump_frequency, 100e6)
    fsr = free_spectral_range(demo, SIGNAL, setpoint.signal_frequency, T0)
    nu_s, nu_i = setpoint.signal_frequency, setpoint.idler_frequency
    js = build_jsa(demo, pump, T0, (nu_s - 0.3 * fsr, nu_s + 0.3 * fsr), (nu_i - 0.3 * fsr, nu_i + 0.3 * fsr))
    assert mode_excitation_probability(js) == pytest.approx(1.0, abs=1e-12)


def test_demonstrator_purity_frozen(demo_filtered):
    rep = purity_report(demo_filtered)
    assert rep.mode_excitation == pytest.approx(0.937, abs=0.002)
    assert rep.schmidt_number == pytest.approx(1.057, abs=0.002)
    assert rep.total_purity == pytest.approx(rep.mode_excitation / rep.schmidt_number, rel=1e-12)
    assert rep.spectral_purity == pytest.approx(1 / rep.schmidt_number, rel=1e-12)


def test_full_filtered_schmidt_matches_dense_decomposition(demo, setpoint):
    pump = PumpSpec(setpoint.pump_frequency, 100e6)
    fsr = free_spectral_range(demo, SIGNAL, setpoint.signal_frequency, T0)
    nu_s, nu_i = setpoint.signal_frequency, setpoint.idler_frequency
    js = build_jsa(demo, pump, T0, (nu_s - 1.2 * fsr, nu_s + 1.2 * fsr), (nu_i - 1.2 * fsr, nu_i + 1.2 * fsr))
    dense = np.where(js.dense("mask"), np.abs(js.dense()), 0.0)
    assert schmidt_number(js, SchmidtMode.FULL_FILTERED) == pytest.approx(gram_schmidt_number(dense), rel=1e-9)
    assert schmidt_number(js, SchmidtMode.DOMINANT_MODE_ONLY) >= 1.0


def test_dominant_schmidt_matches_report(demo_filtered):
    assert schmidt_number(demo_filtered) == purity_report(demo_filtered).schmidt_number


@pytest.fixture(scope="module")
def cases():
    out = {}
    for name in ("case1", "case2", "case3"):
        spec = geometry_case(name)
        point = demonstrator_setpoint(spec)
        out[name] = evaluate_purity(spec, PumpSpec(point.pump_frequency, 100e6), T0,
                                    signal_hint=point.signal_frequency)
    return out


def test_mode_excitation_trend(cases):
    assert cases["case1"].mode_excitation > cases["case2"].mode_excitation
    assert cases["case1"].mode_excitation > cases["case3"].mode_excitation


def test_geometry_purities_frozen(cases):
    assert cases["case1"].total_purity == pytest.approx(0.812, abs=0.005)
    assert cases["case2"].total_purity == pytest.approx(0.398, abs=0.005)
    assert cases["case3"].total_purity == pytest.approx(0.391, abs=0.005)


def test_mode_excitation_grid_refinement():
    spec = geometry_case("case1")
    point = demonstrator_setpoint(spec)
    pump = PumpSpec(point.pump_frequency, 100e6)
    coarse = evaluate_purity(spec, pump, T0, signal_hint=point.signal_frequency)
    fine = evaluate_purity(spec, pump, T0, signal_hint=point.signal_frequency, points_per_linewidth=16)
    assert abs(coarse.mode_excitation - fine.mode_excitation) < 0.01


def test_schmidt_number_limits(demo, setpoint):
    lw = resonance_linewidth(demo, SIGNAL, setpoint.signal_frequency, T0)
    broad = evaluate_purity(demo, PumpSpec(setpoint.pump_frequency, 10 * lw), T0,
                            signal_hint=setpoint.signal_frequency)
    narrow = evaluate_purity(demo, PumpSpec(setpoint.pump_frequency, 0.1 * lw), T0,
                             signal_hint=setpoint.signal_frequency)
    assert broad.schmidt_number < 1.15
    assert narrow.schmidt_number >= 1.8


def test_monochromatic_limit_is_continuous(demo, setpoint):
    lw = resonance_linewidth(demo, SIGNAL, setpoint.signal_frequency, T0)
    h = lw / 8
    nu_p, nu_i = setpoint.pump_frequency, setpoint.idler_frequency
    n = 4000
    wi = (nu_i - n * h, nu_i + n * h)
    ws = (nu_p - wi[1], nu_p - wi[0])
    mono = build_jsa(demo, PumpSpec(nu_p, 0.0, PumpLineshape.MONOCHROMATIC), T0, ws, wi, resolution=h)
    gauss = build_jsa(demo, PumpSpec(nu_p, h / 50), T0, ws, wi, resolution=h)
    k_mono = purity_report(mono).schmidt_number
    k_gauss = purity_report(gauss).schmidt_number
    assert k_gauss == pytest.approx(k_mono, rel=0.05)


def test_monochromatic_band_is_one_cell_per_row(demo, setpoint):
    js = build_jsa(demo, PumpSpec(setpoint.pump_frequency, 0.0, PumpLineshape.MONOCHROMATIC), T0,
                   signal_hint=setpoint.signal_frequency)
    assert js.band.shape[1] == 1
    s = js.signal_grid + js.idler_grid[js.idler_indices()[:, 0]]
    assert np.allclose(s, setpoint.pump_frequency, rtol=0, atol=1e-3)


def test_purity_curve(demo, setpoint):
    lw = resonance_linewidth(demo, SIGNAL, setpoint.signal_frequency, T0)
    curves = purity_vs_pump_bandwidth({"demo": (demo, setpoint.pump_frequency)}, T0,
                                      [4 * lw, 0.5 * lw, lw, 2 * lw])
    cv = curves[0]
    assert np.all(np.diff(cv.sigmas) > 0)
    assert cv.linewidth == pytest.approx(lw, rel=1e-5)
    assert np.all(np.diff(cv.schmidt) < 0)
    assert cv.crossover() in cv.sigmas
    assert cv.sigmas[0] <= cv.crossover_interpolated() <= cv.crossover()
    with pytest.raises(DomainError):
        purity_vs_pump_bandwidth({"demo": (demo, setpoint.pump_frequency)}, T0, [-1.0])


def test_gaussian_pump_needs_bandwidth():
    with pytest.raises(DomainError):
        PumpSpec(5e14, 0.0)
    assert PumpSpec(5e14, 1e8).amplitude(0.5e8) == pytest.approx(0.5 ** 0.5, rel=1e-12)
