"""Joint spectral amplitude of the doubly resonant source and its purity figures.

The amplitude is non-negligible only in a band around the energy-conserving
anti-diagonal, so it is stored row by row: row ``a`` of the signal grid holds
``W`` consecutive idler cells starting at idler index ``band_start[a]``. The
full ``N_s x N_i`` matrix is available through :meth:`JointSpectrum.dense` for
small grids.

Axis 0 always holds the photon coupled to the memory and axis 1 the herald.
With ``swap_roles`` the extraordinary photon sits on axis 0.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .cavity import (IDLER, SIGNAL, ResonanceComb, SourceSpec, airy_amplitude, find_resonances,
                     finesse, free_spectral_range, resonance_linewidth)
from .dispersion import Polarization, propagation_constant
from .errors import DomainError, ResolutionError
from .phasematch import (PUMP, PhasematchPoint, cluster_spacing_estimate, grating_vector,
                         phasematched_signal)
from .spectrum import SignalSpectrum, detect_clusters

POINTS_PER_LINEWIDTH = 8
#: Half-width of the stored pump band in units of the pump FWHM. The pump
#: intensity there is below 3e-8 of its peak.
BAND_HALFWIDTH_FWHM = 2.5
DEFAULT_IDLER_HALFWIDTH = 0.6  # in cluster spacings
_CHUNK_CELLS = 2_000_000


class PumpLineshape(enum.Enum):
    MONOCHROMATIC = "monochromatic"
    GAUSSIAN = "gaussian"


class SchmidtMode(enum.Enum):
    DOMINANT_MODE_ONLY = "dominant"
    FULL_FILTERED = "full"


@dataclass(frozen=True)
class PumpSpec:
    """Pump envelope. ``bandwidth_fwhm`` is the intensity FWHM in Hz."""

    central_frequency: float
    bandwidth_fwhm: float = 0.0
    lineshape: PumpLineshape = PumpLineshape.GAUSSIAN

    def __post_init__(self):
        if not self.central_frequency > 0:
            raise DomainError("pump frequency must be positive")
        if self.lineshape is PumpLineshape.GAUSSIAN and not self.bandwidth_fwhm > 0:
            raise DomainError("a Gaussian pump needs a positive bandwidth")

    @property
    def monochromatic(self) -> bool:
        return self.lineshape is PumpLineshape.MONOCHROMATIC

    def amplitude(self, detuning):
        """Spectral amplitude ``exp(-2 ln2 d^2 / sigma^2)``; unity for a monochromatic pump."""
        d = np.asarray(detuning, dtype=float)
        if self.monochromatic:
            return np.ones_like(d)
        return np.exp(-2 * math.log(2) * d * d / self.bandwidth_fwhm ** 2)


@dataclass(frozen=True)
class PurityReport:
    mode_excitation: float
    schmidt_number: float
    spectral_purity: float
    total_purity: float
    dominant_mode: tuple[float, float]

    @classmethod
    def from_parts(cls, m: float, k: float, dominant_mode) -> "PurityReport":
        s = 1.0 / k
        return cls(m, k, s, m * s, tuple(float(v) for v in dominant_mode))


@dataclass(frozen=True)
class JointSpectrum:
    """Banded joint spectral amplitude plus the herald filter mask."""

    signal_grid: np.ndarray
    idler_grid: np.ndarray
    band: np.ndarray
    band_start: np.ndarray
    valid: np.ndarray
    filter_mask: np.ndarray
    signal_comb: ResonanceComb
    idler_comb: ResonanceComb
    spec: SourceSpec
    pump: PumpSpec
    temperature: float
    swapped: bool = False
    filter_center: float | None = None
    filter_width: float | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.signal_grid), len(self.idler_grid)

    def idler_indices(self) -> np.ndarray:
        return self.band_start[:, None] + np.arange(self.band.shape[1])[None, :]

    def intensity(self, masked: bool = True) -> np.ndarray:
        sel = self.filter_mask if masked else self.valid
        return np.where(sel, np.abs(self.band) ** 2, 0.0)

    def dense(self, what: str = "amplitude") -> np.ndarray:
        """Full ``N_s x N_i`` matrix of the amplitude, the mask or the intensity."""
        n_s, n_i = self.shape
        rows = np.broadcast_to(np.arange(n_s)[:, None], self.band.shape)[self.valid]
        cols = self.idler_indices()[self.valid]
        if what == "amplitude":
            out = np.zeros((n_s, n_i), dtype=complex)
            out[rows, cols] = self.band[self.valid]
        elif what == "mask":
            out = np.zeros((n_s, n_i), dtype=bool)
            out[rows, cols] = self.filter_mask[self.valid]
        elif what == "intensity":
            out = np.zeros((n_s, n_i))
            out[rows, cols] = np.abs(self.band[self.valid]) ** 2
        else:
            raise ValueError(f"unknown matrix {what!r}")
        return out


def _axis_polarizations(swap_roles: bool) -> tuple[Polarization, Polarization]:
    return (IDLER, SIGNAL) if swap_roles else (SIGNAL, IDLER)


def _linewidth_or_inf(spec, pol, nu, temperature):
    if finesse(spec, pol, temperature) == 0:
        return math.inf
    return resonance_linewidth(spec, pol, nu, temperature)


def default_windows(spec: SourceSpec, pump: PumpSpec, temperature: float, swap_roles: bool = False,
                    idler_halfwidth: float = DEFAULT_IDLER_HALFWIDTH, signal_hint: float | None = None):
    """Windows centred on the phase-matched pair.

    The herald (axis 1) window spans ``+- idler_halfwidth`` cluster spacings;
    the axis 0 window is its energy-conserving mirror image widened by the
    stored pump band.
    """
    nu_p = pump.central_frequency
    nu_s = phasematched_signal(spec, nu_p, temperature, hint=signal_hint)
    dnc = cluster_spacing_estimate(spec, PhasematchPoint(nu_p, nu_s, temperature))
    centers = (nu_p - nu_s, nu_s) if swap_roles else (nu_s, nu_p - nu_s)
    half1 = idler_halfwidth * dnc
    w1 = (centers[1] - half1, centers[1] + half1)
    margin = 0.0 if pump.monochromatic else BAND_HALFWIDTH_FWHM * pump.bandwidth_fwhm
    w0 = (nu_p - w1[1] - margin, nu_p - w1[0] + margin)
    return w0, w1


def _steps(spec, pump, temperature, windows, pols, resolution, per_linewidth):
    lws = [_linewidth_or_inf(spec, pol, 0.5 * sum(w), temperature) for pol, w in zip(pols, windows)]
    fallback = []
    for w, lw in zip(windows, lws):
        if math.isfinite(lw):
            fallback.append(lw / per_linewidth)
        elif not pump.monochromatic:
            fallback.append(pump.bandwidth_fwhm / per_linewidth)
        else:
            fallback.append((w[1] - w[0]) / 2048)
    if resolution is None:
        steps = fallback
    else:
        steps = list(resolution) if np.ndim(resolution) else [float(resolution)] * 2
        for axis, (h, lw, w) in enumerate(zip(steps, lws, windows)):
            if math.isfinite(lw) and h > lw / POINTS_PER_LINEWIDTH * (1 + 1e-12):
                need = int(math.ceil(POINTS_PER_LINEWIDTH * (w[1] - w[0]) / lw)) + 1
                raise ResolutionError(f"axis {axis} step {h / 1e6:.4g} MHz exceeds linewidth/"
                                      f"{POINTS_PER_LINEWIDTH}; at least {need} points are required")
    if pump.monochromatic:
        steps = [min(steps)] * 2
    return steps


def build_jsa(spec: SourceSpec, pump: PumpSpec, temperature: float, signal_window=None,
              idler_window=None, resolution=None, swap_roles: bool = False,
              points_per_linewidth: int = POINTS_PER_LINEWIDTH,
              signal_hint: float | None = None) -> JointSpectrum:
    """Sample ``f_p(nu_s + nu_i) sinc(delta_beta L / 2) A_s(nu_s) A_i(nu_i)``.

    ``resolution`` is the grid step in Hz (scalar or one per axis); by default
    each axis gets ``points_per_linewidth`` samples per cavity linewidth.
    A monochromatic pump keeps only the exact anti-diagonal, one cell per row.
    """
    if points_per_linewidth < POINTS_PER_LINEWIDTH:
        raise ResolutionError(f"at least {POINTS_PER_LINEWIDTH} points per linewidth are required")
    pols = _axis_polarizations(swap_roles)
    nu_p = pump.central_frequency
    if signal_window is None or idler_window is None:
        w0, w1 = default_windows(spec, pump, temperature, swap_roles, signal_hint=signal_hint)
        signal_window = w0 if signal_window is None else signal_window
        idler_window = w1 if idler_window is None else idler_window
    windows = [tuple(float(v) for v in signal_window), tuple(float(v) for v in idler_window)]
    for w in windows:
        if not 0 < w[0] < w[1]:
            raise DomainError("JSA windows must be positive and increasing")
    h0, h1 = _steps(spec, pump, temperature, windows, pols, resolution, points_per_linewidth)

    lo1, hi1 = windows[1]
    n1 = int(math.floor((hi1 - lo1) / h1 + 1e-9)) + 1
    grid1 = lo1 + h1 * np.arange(n1)
    if pump.monochromatic:
        grid0 = nu_p - grid1[::-1]
        keep = (grid0 >= windows[0][0]) & (grid0 <= windows[0][1])
        rows = np.flatnonzero(keep)
        if len(rows) == 0:
            raise DomainError("signal window does not overlap the energy-conserving line")
        grid0 = grid0[rows]
        start = (n1 - 1 - rows).astype(np.int64)
        width = 1
    else:
        lo0, hi0 = windows[0]
        n0 = int(math.floor((hi0 - lo0) / h0 + 1e-9)) + 1
        grid0 = lo0 + h0 * np.arange(n0)
        half = int(math.ceil(BAND_HALFWIDTH_FWHM * pump.bandwidth_fwhm / h1))
        start = np.rint((nu_p - grid0 - lo1) / h1).astype(np.int64) - half
        width = 2 * half + 1

    cols = start[:, None] + np.arange(width)[None, :]
    valid = (cols >= 0) & (cols < n1)
    if not valid.any():
        raise DomainError("JSA windows do not overlap the pump band")

    length = spec.length_at(temperature)
    k_grating = grating_vector(spec, temperature)
    amp0 = airy_amplitude(spec, pols[0], grid0, temperature)
    amp1 = airy_amplitude(spec, pols[1], grid1, temperature)
    beta0 = propagation_constant(spec.dispersion, pols[0], grid0, temperature)
    beta1 = propagation_constant(spec.dispersion, pols[1], grid1, temperature)

    band = np.zeros(cols.shape, dtype=complex)
    rows_per_chunk = max(1, _CHUNK_CELLS // width)
    for r0 in range(0, len(grid0), rows_per_chunk):
        sl = slice(r0, r0 + rows_per_chunk)
        ok = valid[sl]
        cc = np.clip(cols[sl], 0, n1 - 1)
        total = grid0[sl, None] + grid1[cc]
        if pump.monochromatic:
            total = np.full(total.shape, nu_p)
        beta_p = propagation_constant(spec.dispersion, PUMP, total, temperature)
        db = beta_p - beta0[sl, None] - beta1[cc] - k_grating
        value = (pump.amplitude(total - nu_p) * np.sinc(db * length / (2 * np.pi))
                 * amp0[sl, None] * amp1[cc])
        band[sl] = np.where(ok, value, 0.0)

    comb0 = _comb_covering(spec, pols[0], grid0, temperature)
    comb1 = _comb_covering(spec, pols[1], grid1, temperature)
    return JointSpectrum(signal_grid=grid0, idler_grid=grid1, band=band, band_start=start,
                         valid=valid, filter_mask=valid.copy(), signal_comb=comb0, idler_comb=comb1,
                         spec=spec, pump=pump, temperature=float(temperature), swapped=swap_roles)


def _comb_covering(spec, pol, grid, temperature) -> ResonanceComb:
    mid = 0.5 * (grid[0] + grid[-1])
    fsr = free_spectral_range(spec, pol, mid, temperature)
    return find_resonances(spec, pol, (grid[0] - fsr, grid[-1] + fsr), temperature)


def herald_marginal(js: JointSpectrum, masked: bool = False, axis: int = 1) -> np.ndarray:
    """Marginal intensity on one axis, summed over the other."""
    inten = js.intensity(masked=masked)
    if axis == 0:
        return inten.sum(axis=1)
    cols = js.idler_indices()[js.valid]
    return np.bincount(cols, inten[js.valid], minlength=len(js.idler_grid))


def _physical_point(js: JointSpectrum, axis0_frequency: float) -> PhasematchPoint:
    nu_p = js.pump.central_frequency
    nu_s = nu_p - axis0_frequency if js.swapped else axis0_frequency
    return PhasematchPoint(nu_p, nu_s, js.temperature)


def apply_cluster_filter(js: JointSpectrum, spec: SourceSpec | None = None,
                         filter_fwhm: float | None = None, axis: int = 1,
                         center: float | None = None) -> JointSpectrum:
    """Top-hat filter on one photon, centred on the central cluster of its marginal.

    The width defaults to the cluster spacing estimate. Only the mask is
    changed; the amplitude is left untouched.
    """
    spec = js.spec if spec is None else spec
    grid = js.idler_grid if axis == 1 else js.signal_grid
    marginal = herald_marginal(js, axis=axis)
    if not marginal.max() > 0:
        raise DomainError("JSA vanishes on the whole grid")
    k = int(np.argmax(js.intensity(masked=False).max(axis=1)))
    point = _physical_point(js, float(js.signal_grid[k]))
    spacing = cluster_spacing_estimate(spec, point)
    width = spacing if filter_fwhm is None else float(filter_fwhm)
    if width > grid[-1] - grid[0]:
        raise DomainError(f"filter width {width / 1e9:.4g} GHz exceeds the "
                          f"{(grid[-1] - grid[0]) / 1e9:.4g} GHz window")
    if center is None:
        pseudo = SignalSpectrum(grid, marginal / marginal.max(), js.pump.central_frequency,
                                js.temperature)
        report = detect_clusters(pseudo, spec, cluster_spacing=spacing, strict=False)
        center = report.clusters[report.central_cluster_index].peak_frequency
    if axis == 1:
        pass_band = np.abs(js.idler_grid[np.clip(js.idler_indices(), 0, len(grid) - 1)] - center) <= width / 2
    else:
        pass_band = np.broadcast_to((np.abs(js.signal_grid - center) <= width / 2)[:, None], js.band.shape)
    return replace(js, filter_mask=js.valid & pass_band, filter_center=float(center),
                   filter_width=float(width))


def _pair_labels(js: JointSpectrum):
    """Resonance-pair label of every band cell (nearest comb line on each axis)."""
    i0 = js.signal_comb.nearest(js.signal_grid)
    cols = np.clip(js.idler_indices(), 0, len(js.idler_grid) - 1)
    i1 = js.idler_comb.nearest(js.idler_grid)[cols]
    return i0[:, None] * len(js.idler_comb) + i1


def _dominant(js: JointSpectrum):
    inten = js.intensity(masked=True)
    total = inten.sum()
    if not total > 0:
        raise DomainError("filter mask is empty or carries no weight")
    labels = _pair_labels(js)
    sel = js.filter_mask
    uniq, inv = np.unique(labels[sel], return_inverse=True)
    weights = np.bincount(inv, inten[sel])
    j = int(np.argmax(weights))
    region = sel & (labels == uniq[j])
    n1 = len(js.idler_comb)
    mode = (js.signal_comb.centers[uniq[j] // n1], js.idler_comb.centers[uniq[j] % n1])
    return weights[j] / total, region, mode


def mode_excitation_probability(js: JointSpectrum) -> float:
    """Share of the filtered weight held by the heaviest resonance pair."""
    return float(_dominant(js)[0])


def schmidt_number_matrix(matrix) -> float:
    """``K = 1 / sum(lambda^4)`` from the singular values of ``|matrix|``, normalized so ``sum(lambda^2) = 1``."""
    m = np.abs(np.asarray(matrix))
    if m.ndim != 2 or min(m.shape) < 1:
        raise DomainError("matrix must be two-dimensional and non-empty")
    sv = np.linalg.svd(m, compute_uv=False)
    p = sv ** 2 / np.sum(sv ** 2)
    return float(1.0 / np.sum(p ** 2))


def _region_matrix(js: JointSpectrum, region: np.ndarray) -> np.ndarray:
    rows = np.flatnonzero(region.any(axis=1))
    cols = js.idler_indices()
    c_lo, c_hi = cols[region].min(), cols[region].max()
    out = np.zeros((len(rows), c_hi - c_lo + 1))
    rr, kk = np.nonzero(region[rows])
    out[rr, cols[rows][rr, kk] - c_lo] = np.abs(js.band[rows][rr, kk])
    return out


def schmidt_number(js: JointSpectrum, mode: SchmidtMode = SchmidtMode.DOMINANT_MODE_ONLY) -> float:
    """Schmidt number of ``|amplitude|`` on the dominant resonance pair or the whole filtered region.

    The full-region variant uses ``K = ||J||_F^4 / ||J J^T||_F^2``, which is
    the same quantity evaluated without a dense decomposition.
    """
    if mode is SchmidtMode.DOMINANT_MODE_ONLY:
        _, region, _ = _dominant(js)
        matrix = _region_matrix(js, region)
        if min(matrix.shape) < 4:
            raise ResolutionError("insufficient resolution for decomposition")
        return schmidt_number_matrix(matrix)
    region = js.filter_mask
    if not region.any():
        raise DomainError("filter mask is empty")
    rows = np.broadcast_to(np.arange(len(js.signal_grid))[:, None], region.shape)[region]
    cols = js.idler_indices()[region]
    j = sp.csr_matrix((np.abs(js.band[region]), (rows, cols)), shape=js.shape)
    if min(np.unique(rows).size, np.unique(cols).size) < 4:
        raise ResolutionError("insufficient resolution for decomposition")
    gram = j @ j.T
    frob2 = float(j.multiply(j).sum())
    return float(frob2 ** 2 / gram.multiply(gram).sum())


def purity_report(js: JointSpectrum) -> PurityReport:
    m, region, mode = _dominant(js)
    matrix = _region_matrix(js, region)
    if min(matrix.shape) < 4:
        raise ResolutionError("insufficient resolution for decomposition")
    return PurityReport.from_parts(float(m), schmidt_number_matrix(matrix), mode)


def evaluate_purity(spec: SourceSpec, pump: PumpSpec, temperature: float, *,
                    filter_fwhm: float | None = None, swap_roles: bool = False,
                    signal_hint: float | None = None, **grid) -> PurityReport:
    """Build the JSA with default windows, apply the herald filter and report purity."""
    js = build_jsa(spec, pump, temperature, swap_roles=swap_roles, signal_hint=signal_hint, **grid)
    return purity_report(apply_cluster_filter(js, spec, filter_fwhm))


@dataclass(frozen=True)
class PurityCurve:
    """Schmidt number versus pump bandwidth for one geometry."""

    name: str
    linewidth: float
    sigmas: np.ndarray
    schmidt: np.ndarray
    mode_excitation: np.ndarray

    @property
    def spectral_purity(self) -> np.ndarray:
        return 1.0 / self.schmidt

    def crossover(self, threshold: float = 0.9) -> float:
        """Smallest scanned bandwidth with ``S >= threshold`` (``nan`` if none)."""
        hit = np.flatnonzero(self.spectral_purity >= threshold)
        return float(self.sigmas[hit[0]]) if len(hit) else math.nan

    def crossover_interpolated(self, threshold: float = 0.9) -> float:
        """Bandwidth where ``S`` first crosses ``threshold``, log-linear between samples."""
        s = self.spectral_purity
        hit = np.flatnonzero(s >= threshold)
        if not len(hit):
            return math.nan
        k = hit[0]
        if k == 0:
            return float(self.sigmas[0])
        x0, x1 = np.log(self.sigmas[k - 1]), np.log(self.sigmas[k])
        t = (threshold - s[k - 1]) / (s[k] - s[k - 1])
        return float(np.exp(x0 + t * (x1 - x0)))


def purity_vs_pump_bandwidth(cases: Mapping[str, tuple[SourceSpec, float]], temperature: float,
                             sigma_list, swap_roles: bool = False) -> list[PurityCurve]:
    """K(sigma_p) per geometry. ``cases`` maps a name to ``(spec, pump_frequency)``."""
    sigmas = np.asarray(sorted(float(s) for s in sigma_list))
    if np.any(sigmas <= 0):
        raise DomainError("pump bandwidths must be positive")
    curves = []
    for name, (spec, nu_p) in cases.items():
        pol = IDLER if swap_roles else SIGNAL
        nu_s = phasematched_signal(spec, nu_p, temperature)
        lw = resonance_linewidth(spec, pol, nu_p - nu_s if swap_roles else nu_s, temperature)
        ks, ms = [], []
        for sigma in sigmas:
            r = evaluate_purity(spec, PumpSpec(nu_p, sigma), temperature, swap_roles=swap_roles)
            ks.append(r.schmidt_number)
            ms.append(r.mode_excitation)
        curves.append(PurityCurve(name, lw, sigmas, np.array(ks), np.array(ms)))
    return curves
