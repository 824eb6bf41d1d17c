"""Resonant enhancement bookkeeping and brightness relative to a single-pass source.

Absolute pair rates need the nonlinear interaction constant, which is outside
this model; every quantity here is a ratio.

The relative spectral brightness compares the emission into the dominant
resonance pair, per unit signal linewidth, with the single-pass emission per
unit phase-matching bandwidth. Inside the cavity the field escaping through
mirror 2 has the FSR-averaged transmission ``eta_j`` and the peak value
``P_j = eta_j (1 + rho_j) / (1 - rho_j)``. The dominant pair then carries

    R_mode / R_0 = P_s P_i * (pi/2) g_s g_i / (g_s + g_i) / (2 dnu_c)

of the single-pass rate, where ``g_j`` are the linewidths and ``2 dnu_c`` is
the integral of ``sinc^2`` over signal frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .cavity import IDLER, SIGNAL, SourceSpec, finesse, resonance_linewidth, round_trip_amplitude
from .dispersion import group_index
from .errors import DomainError
from .phasematch import PhasematchPoint, cluster_spacing_estimate, pm_bandwidth_estimate
from scipy.constants import c


@dataclass(frozen=True)
class BrightnessReport:
    clustering_factor: float
    finesse_signal: float
    finesse_idler: float
    escape_probability: float
    enhancement_proportional: float
    relative_spectral_brightness: float
    mode_rate_ratio: float
    pm_bandwidth: float
    linewidth_signal: float
    degenerate: bool = False


def clustering_factor(spec: SourceSpec, point: PhasematchPoint) -> float:
    """``N0 = 2 n_g,s L dnu_c / c``, the number of signal modes per cluster spacing."""
    ng_s = group_index(spec.dispersion, SIGNAL, c / point.signal_frequency, point.temperature)
    length = spec.length_at(point.temperature)
    return 2 * ng_s * length * cluster_spacing_estimate(spec, point) / c


def _escape(spec: SourceSpec, pol, temperature) -> float:
    m = spec.mirrors(pol)
    loss = math.exp(-2 * spec.attenuation(pol) * spec.length_at(temperature))
    return (1 - m.R2) / (1 - m.R1 * m.R2 * loss)


def escape_probability(spec: SourceSpec, temperature: float) -> float:
    """Probability that both photons leave through their output mirrors."""
    return _escape(spec, SIGNAL, temperature) * _escape(spec, IDLER, temperature)


def _peak_transmission(spec, pol, temperature) -> float:
    rho = round_trip_amplitude(spec, pol, temperature)
    return _escape(spec, pol, temperature) * (1 + rho) / (1 - rho)


def mode_rate_ratio(spec: SourceSpec, point: PhasematchPoint, temperature: float) -> float:
    """Pair rate into the dominant resonance pair relative to the single-pass rate."""
    g_s = resonance_linewidth(spec, SIGNAL, point.signal_frequency, temperature)
    g_i = resonance_linewidth(spec, IDLER, point.idler_frequency, temperature)
    overlap = 0.5 * math.pi * g_s * g_i / (g_s + g_i)
    single_pass = 2 * cluster_spacing_estimate(spec, point)
    return (_peak_transmission(spec, SIGNAL, temperature) * _peak_transmission(spec, IDLER, temperature)
            * overlap / single_pass)


def enhancement_factor(spec: SourceSpec, point: PhasematchPoint, temperature: float) -> BrightnessReport:
    """Assemble ``N0 F_s F_i eta_pp`` and the relative spectral brightness.

    Without any cavity (zero finesse on either photon) the report is flagged
    ``degenerate`` and the enhancement and brightness are zero.
    """
    n0 = clustering_factor(spec, point)
    f_s = finesse(spec, SIGNAL, temperature)
    f_i = finesse(spec, IDLER, temperature)
    eta = escape_probability(spec, temperature)
    bw = pm_bandwidth_estimate(spec, point)
    if f_s == 0 or f_i == 0:
        return BrightnessReport(n0, f_s, f_i, eta, 0.0, 0.0, 0.0, bw, math.inf, degenerate=True)
    lw = resonance_linewidth(spec, SIGNAL, point.signal_frequency, temperature)
    ratio = mode_rate_ratio(spec, point, temperature)
    return BrightnessReport(
        clustering_factor=n0,
        finesse_signal=f_s,
        finesse_idler=f_i,
        escape_probability=eta,
        enhancement_proportional=n0 * f_s * f_i * eta,
        relative_spectral_brightness=ratio * bw / lw,
        mode_rate_ratio=ratio,
        pm_bandwidth=bw,
        linewidth_signal=lw,
    )


def spectral_brightness_estimate(spec: SourceSpec, point: PhasematchPoint, temperature: float,
                                 reference_brightness: float) -> float:
    """Spectral brightness of the resonant source given the single-pass value."""
    if not reference_brightness > 0:
        raise DomainError("reference brightness must be positive")
    report = enhancement_factor(spec, point, temperature)
    return reference_brightness * report.relative_spectral_brightness
