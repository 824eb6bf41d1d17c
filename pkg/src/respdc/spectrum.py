"""CW-pumped signal spectrum, cluster detection and mode-hop analysis."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from .cavity import (IDLER, SIGNAL, SourceSpec, airy_amplitude, finesse, free_spectral_range,
                     resonance_linewidth)
from .errors import DomainError, ResolutionError
from .phasematch import (PhasematchPoint, cluster_spacing_estimate, delta_beta, phasematched_signal,
                         sinc_amplitude)

#: Minimum number of grid points per signal linewidth.
POINTS_PER_LINEWIDTH = 8
PEAK_THRESHOLD = 1e-3


@dataclass(frozen=True)
class SignalSpectrum:
    """Relative spectral density of the signal photon, normalized to unit maximum."""

    frequencies: np.ndarray
    values: np.ndarray
    pump_frequency: float
    temperature: float

    @property
    def step(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def peak_frequency(self) -> float:
        """Position of the global maximum, refined by a parabola through three samples."""
        k = int(np.argmax(self.values))
        if 0 < k < len(self.values) - 1:
            y0, y1, y2 = self.values[k - 1:k + 2]
            denom = y0 - 2 * y1 + y2
            if denom < 0:
                return float(self.frequencies[k] + 0.5 * (y0 - y2) / denom * self.step)
        return float(self.frequencies[k])


@dataclass(frozen=True)
class Cluster:
    center: float
    peak_frequency: float
    integrated_weight: float
    peak_count: int


@dataclass(frozen=True)
class ClusterReport:
    clusters: list[Cluster]
    central_cluster_index: int
    central_fraction: float
    spacing_measured: float
    spacing_estimate: float


class StabilityParameter(enum.Enum):
    PUMP_FREQUENCY = "pump_frequency"
    TEMPERATURE = "temperature"


@dataclass(frozen=True)
class StabilityWindow:
    """Distance from the setpoint to the nearest mode hop.

    ``halfwidth`` is in Hz for the pump and in K for the temperature.
    ``hop_up`` and ``hop_down`` are the unsigned distances to the first hop on
    each side.
    """

    parameter: StabilityParameter
    halfwidth: float
    setpoint: float
    hop_up: float
    hop_down: float


@dataclass(frozen=True)
class TuningMap:
    """Dominant signal peak versus a scanned parameter."""

    parameter: StabilityParameter
    abscissa: np.ndarray
    peak_frequencies: np.ndarray
    hop_indices: list[int]
    fsr: float
    drift_slope: float = math.nan
    net_slope: float = math.nan
    spectra: list[SignalSpectrum] = field(default_factory=list, repr=False)


def required_points(spec: SourceSpec, window, temperature, per_linewidth: int = POINTS_PER_LINEWIDTH) -> int:
    """Smallest grid size that resolves the signal linewidth across ``window``."""
    lo, hi = window
    if finesse(spec, SIGNAL, temperature) == 0:
        return 2
    lw = resonance_linewidth(spec, SIGNAL, 0.5 * (lo + hi), temperature)
    return int(math.ceil(per_linewidth * (hi - lo) / lw)) + 1


def spectral_density(spec: SourceSpec, pump_frequency, signal_frequency, temperature):
    """Unnormalized ``sinc^2 |A_s|^2 |A_i|^2`` on arbitrary signal frequencies."""
    nu = np.asarray(signal_frequency, dtype=float)
    db = delta_beta(spec, pump_frequency, nu, temperature)
    env = sinc_amplitude(db, spec.length_at(temperature)) ** 2
    a_s = airy_amplitude(spec, SIGNAL, nu, temperature)
    a_i = airy_amplitude(spec, IDLER, pump_frequency - nu, temperature)
    return env * np.abs(a_s) ** 2 * np.abs(a_i) ** 2


def signal_spectrum(spec: SourceSpec, pump_frequency: float, temperature: float, window,
                    points: int | None = None) -> SignalSpectrum:
    """Signal spectrum under a monochromatic pump on a uniform grid over ``window``.

    ``points`` defaults to the minimum allowed by the resolution guard.
    """
    lo, hi = (float(v) for v in window)
    if not 0 < lo < hi:
        raise DomainError("spectrum window must be positive and increasing")
    need = required_points(spec, (lo, hi), temperature)
    if points is None:
        points = need
    elif points < need:
        raise ResolutionError(f"{points} points do not resolve the signal linewidth; "
                              f"at least {need} are required for this window")
    nu = np.linspace(lo, hi, int(points))
    s = spectral_density(spec, pump_frequency, nu, temperature)
    peak = s.max()
    if not peak > 0:
        raise DomainError("spectrum vanishes on the whole window")
    return SignalSpectrum(nu, s / peak, float(pump_frequency), float(temperature))


def _spacing_for(s: SignalSpectrum, spec: SourceSpec) -> float:
    point = PhasematchPoint(s.pump_frequency, s.peak_frequency(), s.temperature)
    return cluster_spacing_estimate(spec, point)


def detect_clusters(s: SignalSpectrum, spec: SourceSpec, cluster_spacing: float | None = None,
                    strict: bool = True) -> ClusterReport:
    """Group spectral peaks into clusters.

    Peaks above ``1e-3`` of the maximum belong to the same cluster when they
    are closer than half the cluster spacing. Each grid point is attributed to
    the cluster owning the nearest peak, and cluster weights are trapezoid
    integrals normalized to one.

    With ``strict`` the window must span at least three cluster spacings.
    """
    spacing = _spacing_for(s, spec) if cluster_spacing is None else float(cluster_spacing)
    span = s.frequencies[-1] - s.frequencies[0]
    if strict and span < 3 * spacing * (1 - 1e-9):
        raise DomainError(f"window of {span / 1e9:.4g} GHz is narrower than three cluster "
                          f"spacings ({3 * spacing / 1e9:.4g} GHz)")
    idx, _ = find_peaks(np.concatenate(([0.0], s.values, [0.0])), height=PEAK_THRESHOLD)
    idx = idx - 1
    peaks = s.frequencies[idx]
    breaks = np.flatnonzero(np.diff(peaks) > spacing / 2)
    groups = np.split(np.arange(len(idx)), breaks + 1)

    # boundaries halfway between the outermost peaks of neighbouring clusters
    edges = [0.5 * (peaks[g[-1]] + peaks[h[0]]) for g, h in zip(groups[:-1], groups[1:])]
    owner = np.searchsorted(np.asarray(edges), s.frequencies)
    weights = np.zeros(len(groups))
    centers = np.zeros(len(groups))
    for k in range(len(groups)):
        sel = owner == k
        x, y = s.frequencies[sel], s.values[sel]
        weights[k] = trapezoid(y, x) if len(x) > 1 else 0.0
        centers[k] = np.sum(x * y) / np.sum(y)
    weights = weights / weights.sum()

    clusters = []
    for k, g in enumerate(groups):
        top = idx[g][np.argmax(s.values[idx[g]])]
        clusters.append(Cluster(center=float(centers[k]), peak_frequency=float(s.frequencies[top]),
                                integrated_weight=float(weights[k]), peak_count=len(g)))
    central = int(np.argmax(weights))
    tops = np.array([cl.peak_frequency for cl in clusters])
    measured = float(np.mean(np.diff(tops))) if len(tops) > 1 else math.nan
    return ClusterReport(clusters, central, float(weights[central]), measured, spacing)


def default_window(spec: SourceSpec, point: PhasematchPoint, spacings: float = 1.5):
    """Signal window of ``+- spacings`` cluster spacings around the point's signal."""
    half = spacings * cluster_spacing_estimate(spec, point)
    return (point.signal_frequency - half, point.signal_frequency + half)


def _hops(peaks: np.ndarray, fsr: float) -> list[int]:
    jumps = np.abs(np.diff(peaks)) >= fsr / 2
    return [int(k) + 1 for k in np.flatnonzero(jumps)]


def _segment_slope(x, y, hops):
    """Mean of the least-squares slopes fitted within each hop-free segment."""
    bounds = [0] + list(hops) + [len(x)]
    slopes, counts = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a >= 2:
            slopes.append(np.polyfit(x[a:b], y[a:b], 1)[0])
            counts.append(b - a)
    return float(np.average(slopes, weights=counts)) if slopes else math.nan


def pump_detuning_map(spec: SourceSpec, temperature: float, pump_detunings, window,
                      points: int | None = None, pump_frequency: float | None = None,
                      keep_spectra: bool = False) -> TuningMap:
    """Dominant signal peak as the pump is detuned from ``pump_frequency``.

    Mode hops are the scan steps where the dominant peak jumps by at least
    half a signal FSR.
    """
    det = np.asarray(pump_detunings, dtype=float)
    if np.any(np.diff(det) <= 0):
        raise DomainError("pump detunings must be strictly increasing")
    if pump_frequency is None:
        raise DomainError("pump_frequency is required")
    spectra = [signal_spectrum(spec, pump_frequency + d, temperature, window, points) for d in det]
    peaks = np.array([s.peak_frequency() for s in spectra])
    fsr = free_spectral_range(spec, SIGNAL, 0.5 * sum(window), temperature)
    hops = _hops(peaks, fsr)
    return TuningMap(StabilityParameter.PUMP_FREQUENCY, det, peaks, hops, fsr,
                     drift_slope=_segment_slope(det, peaks, hops),
                     net_slope=float(np.polyfit(det, peaks, 1)[0]) if len(det) > 1 else math.nan,
                     spectra=spectra if keep_spectra else [])


def temperature_map(spec: SourceSpec, pump_frequency: float, temperatures, window,
                    points: int | None = None, keep_spectra: bool = False) -> TuningMap:
    """Dominant signal peak versus sample temperature at fixed pump frequency.

    ``drift_slope`` (Hz/K) is the within-segment drift between hops and
    ``net_slope`` the straight-line fit across the whole scan, hops included.
    """
    temps = np.asarray(temperatures, dtype=float)
    if np.any(np.diff(temps) <= 0):
        raise DomainError("temperatures must be strictly increasing")
    spectra = [signal_spectrum(spec, pump_frequency, t, window, points) for t in temps]
    peaks = np.array([s.peak_frequency() for s in spectra])
    fsr = free_spectral_range(spec, SIGNAL, 0.5 * sum(window), float(temps[0]))
    hops = _hops(peaks, fsr)
    return TuningMap(StabilityParameter.TEMPERATURE, temps, peaks, hops, fsr,
                     drift_slope=_segment_slope(temps, peaks, hops),
                     net_slope=float(np.polyfit(temps, peaks, 1)[0]) if len(temps) > 1 else math.nan,
                     spectra=spectra if keep_spectra else [])


def _first_hop(peak_at, reference, fsr, step, limit, tol):
    """Distance to the first hop along ``+offset``, coarse stepping then bisection."""
    inside = 0.0
    x = step
    while x <= limit:
        if abs(peak_at(x) - reference) >= fsr / 2:
            outside = x
            break
        inside = x
        x += step
    else:
        return math.inf
    while outside - inside > tol:
        mid = 0.5 * (inside + outside)
        if abs(peak_at(mid) - reference) >= fsr / 2:
            outside = mid
        else:
            inside = mid
    return 0.5 * (inside + outside)


def stability_windows(spec: SourceSpec, pump_frequency: float, temperature: float,
                      window=None, points: int | None = None, pump_step: float | None = None,
                      pump_limit: float | None = None, temperature_step: float = 0.5e-3,
                      temperature_limit: float = 0.2, pump_tol: float = 0.1e6,
                      temperature_tol: float = 1e-5) -> tuple[StabilityWindow, StabilityWindow]:
    """Mode-hop-free windows in pump frequency and temperature around a setpoint.

    The setpoint's dominant peak is tracked while the parameter is stepped
    outwards; the first step whose dominant peak has moved by at least FSR/2 is
    refined by bisection. ``halfwidth`` is the smaller of the two one-sided
    distances. A setpoint whose dominant peak already changes within one
    bisection tolerance sits on a hop boundary and is rejected.
    """
    if window is None:
        nu_pm = phasematched_signal(spec, pump_frequency, temperature)
        point = PhasematchPoint(pump_frequency, nu_pm, temperature)
        window = default_window(spec, point, 0.5)
    s0 = signal_spectrum(spec, pump_frequency, temperature, window, points)
    reference = s0.peak_frequency()
    fsr = free_spectral_range(spec, SIGNAL, reference, temperature)
    lw = resonance_linewidth(spec, SIGNAL, reference, temperature)
    pump_step = lw / 4 if pump_step is None else pump_step
    pump_limit = fsr if pump_limit is None else pump_limit

    def peak_pump(d):
        return signal_spectrum(spec, pump_frequency + d, temperature, window, points).peak_frequency()

    def peak_temp(dt):
        return signal_spectrum(spec, pump_frequency, temperature + dt, window, points).peak_frequency()

    out = []
    for param, peak_at, step, limit, tol, setpoint in (
            (StabilityParameter.PUMP_FREQUENCY, peak_pump, pump_step, pump_limit, pump_tol, pump_frequency),
            (StabilityParameter.TEMPERATURE, peak_temp, temperature_step, temperature_limit,
             temperature_tol, temperature)):
        up = _first_hop(peak_at, reference, fsr, step, limit, tol)
        down = _first_hop(lambda x: peak_at(-x), reference, fsr, step, limit, tol)
        half = min(up, down)
        if not half > tol:
            raise DomainError(f"setpoint already hopped: the dominant peak changes within "
                              f"{tol:.3g} of the {param.value} setpoint")
        out.append(StabilityWindow(param, half, setpoint, up, down))
    return out[0], out[1]
