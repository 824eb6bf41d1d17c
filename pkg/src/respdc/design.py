"""Design maps over (length, output reflectivity) and the quantum-memory design search."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .brightness import BrightnessReport, enhancement_factor, escape_probability
from .cavity import IDLER, SIGNAL, MirrorPair, SourceSpec, resonance_linewidth
from .dispersion import DispersionModel
from .errors import DomainError, RespdcError
from .jsa import (PumpSpec, PurityReport, apply_cluster_filter, build_jsa,
                  mode_excitation_probability, purity_report)
from .phasematch import PhasematchPoint, doubly_resonant_point, phasematched_signal
from .presets import DEMONSTRATOR_TEMPERATURE, poled_source
from .spectrum import StabilityWindow, default_window, stability_windows

DEFAULT_SIGMA_FACTORS = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
DEFAULT_DESIGN_REFLECTIVITIES = (0.7, 0.8, 0.85, 0.9, 0.94, 0.96, 0.98, 0.99)
LENGTH_BOUNDS = (0.5e-3, 150e-3)


@dataclass(frozen=True)
class ParameterMap:
    """Matrix ``values[i, j]`` over ``lengths[i]`` and ``reflectivities[j]``."""

    quantity: str
    unit: str
    lengths: np.ndarray
    reflectivities: np.ndarray
    values: np.ndarray
    linewidths: np.ndarray | None = None


def _with_signal_geometry(base: SourceSpec, length: float, r2: float) -> SourceSpec:
    return base.replace(length=length, mirrors_signal=MirrorPair(base.mirrors_signal.R1, r2))


def _nominal_signal(base: SourceSpec, temperature: float, pump_frequency: float | None,
                    signal_frequency: float | None):
    nu_p = c / 532e-9 if pump_frequency is None else pump_frequency
    nu_s = phasematched_signal(base, nu_p, temperature) if signal_frequency is None else signal_frequency
    return nu_p, nu_s


def bandwidth_map(base: SourceSpec, lengths, reflectivities, temperature: float | None = None,
                  signal_frequency: float | None = None, pump_frequency: float | None = None) -> ParameterMap:
    """Signal linewidth with the length and the signal output reflectivity varied."""
    t = base.reference_temperature if temperature is None else temperature
    _, nu_s = _nominal_signal(base, t, pump_frequency, signal_frequency)
    lengths = np.asarray(lengths, dtype=float)
    refl = np.asarray(reflectivities, dtype=float)
    values = np.empty((len(lengths), len(refl)))
    for i, length in enumerate(lengths):
        for j, r in enumerate(refl):
            values[i, j] = resonance_linewidth(_with_signal_geometry(base, length, r), SIGNAL, nu_s, t)
    return ParameterMap("signal_linewidth", "Hz", lengths, refl, values)


def _mode_excitation_cell(args):
    base, length, r2, t, nu_p, nu_s, sigma, lineshape, cluster_filter = args
    spec = _with_signal_geometry(base, length, r2)
    point = doubly_resonant_point(spec, nu_p, nu_s, t)
    pump = PumpSpec(point.pump_frequency, sigma, lineshape)
    js = build_jsa(spec, pump, t, signal_hint=point.signal_frequency)
    if cluster_filter:
        js = apply_cluster_filter(js, spec)
    return mode_excitation_probability(js)


def _run_cells(fn, cells, workers):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(cells) <= 1:
        return [fn(a) for a in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(fn, cells))


def purity_map(base: SourceSpec, lengths, reflectivities, pump: PumpSpec,
               temperature: float | None = None, signal_frequency: float | None = None,
               cluster_filter: bool = True, workers: int | None = 1) -> ParameterMap:
    """Mode-excitation probability over (length, signal R2).

    Each cell runs at its own doubly resonant point next to the nominal signal
    frequency, with the nominal pump ``pump.central_frequency``. Without
    ``cluster_filter`` the whole herald window is kept.
    """
    t = base.reference_temperature if temperature is None else temperature
    nu_p, nu_s = _nominal_signal(base, t, pump.central_frequency, signal_frequency)
    lengths = np.asarray(lengths, dtype=float)
    refl = np.asarray(reflectivities, dtype=float)
    cells = [(base, float(length), float(r), t, nu_p, nu_s, pump.bandwidth_fwhm, pump.lineshape,
              cluster_filter) for length in lengths for r in refl]
    values = np.array(_run_cells(_mode_excitation_cell, cells, workers)).reshape(len(lengths), len(refl))
    lw = bandwidth_map(base, lengths, refl, t, nu_s).values
    return ParameterMap("mode_excitation", "1", lengths, refl, values, linewidths=lw)


def high_purity_linewidth(pmap: ParameterMap, threshold: float = 0.95) -> float:
    """Largest linewidth among cells of the connected ``M > threshold`` region.

    The region is the connected component (4-neighbourhood) holding the map's
    maximum.
    """
    from scipy.ndimage import label
    good = pmap.values > threshold
    if not good.any():
        return math.nan
    labels, _ = label(good)
    best = labels[np.unravel_index(np.argmax(np.where(good, pmap.values, -1)), good.shape)]
    return float(pmap.linewidths[labels == best].max())


@dataclass(frozen=True)
class MemoryTarget:
    """Memory transition to be matched by one photon of the pair."""

    signal_wavelength: float
    desired_bandwidth: float
    minimum_total_purity: float
    pump_wavelength: float = 532e-9
    name: str = ""

    def __post_init__(self):
        if not 1e6 <= self.desired_bandwidth <= 5e9:
            raise DomainError("desired bandwidth must lie between 1 MHz and 5 GHz")
        if not 0 <= self.minimum_total_purity <= 1:
            raise DomainError("minimum purity must lie in [0, 1]")
        if not self.signal_wavelength > self.pump_wavelength:
            raise DomainError("memory wavelength must exceed the pump wavelength")

    @property
    def memory_is_idler(self) -> bool:
        """True when the memory photon is the lower-frequency (extraordinary) photon."""
        return c / self.signal_wavelength < 0.5 * c / self.pump_wavelength

    @property
    def partner_wavelength(self) -> float:
        return 1.0 / (1.0 / self.pump_wavelength - 1.0 / self.signal_wavelength)


@dataclass(frozen=True)
class DesignPrediction:
    purity: PurityReport
    linewidth: float
    stability_pump: StabilityWindow | None
    stability_temperature: StabilityWindow | None
    brightness: BrightnessReport


@dataclass(frozen=True)
class DesignResult:
    source: SourceSpec
    pump: PumpSpec
    poling_period: float
    idler_wavelength: float
    predicted: DesignPrediction
    feasible: bool
    binding_constraint: str | None
    roles_swapped: bool
    temperature: float
    metadata: dict = field(default_factory=dict)


def design_source(target: MemoryTarget, length: float, reflectivity: float,
                  temperature: float = DEMONSTRATOR_TEMPERATURE,
                  dispersion: DispersionModel | None = None,
                  idler_reflectivity: float | None = None) -> SourceSpec:
    """Source for ``target`` with ``R1 = 0.99`` and ``R2 = reflectivity`` on the memory photon.

    The herald photon gets the same mirrors unless ``idler_reflectivity`` is given.
    """
    r_herald = reflectivity if idler_reflectivity is None else idler_reflectivity
    memory, herald = MirrorPair(0.99, reflectivity), MirrorPair(0.99, r_herald)
    if target.memory_is_idler:
        mirrors_signal, mirrors_idler = herald, memory
        signal_wl = target.partner_wavelength
    else:
        mirrors_signal, mirrors_idler = memory, herald
        signal_wl = target.signal_wavelength
    return poled_source(length, mirrors_signal, mirrors_idler, pump_wavelength=target.pump_wavelength,
                        signal_wavelength=signal_wl, temperature=temperature, dispersion=dispersion)


def _memory_linewidth(spec: SourceSpec, target: MemoryTarget, point: PhasematchPoint) -> float:
    if target.memory_is_idler:
        return resonance_linewidth(spec, IDLER, point.idler_frequency, point.temperature)
    return resonance_linewidth(spec, SIGNAL, point.signal_frequency, point.temperature)


def _operating_point(spec: SourceSpec, target: MemoryTarget, temperature: float) -> PhasematchPoint:
    nu_p = c / target.pump_wavelength
    nu_memory = c / target.signal_wavelength
    nu_s = nu_p - nu_memory if target.memory_is_idler else nu_memory
    return doubly_resonant_point(spec, nu_p, nu_s, temperature)


def _purity(spec, target, point, sigma):
    pump = PumpSpec(point.pump_frequency, sigma)
    js = build_jsa(spec, pump, point.temperature, swap_roles=target.memory_is_idler,
                   signal_hint=point.signal_frequency)
    return purity_report(apply_cluster_filter(js, spec))


def evaluate_configuration(target: MemoryTarget, length: float, reflectivity: float, sigma: float,
                           temperature: float = DEMONSTRATOR_TEMPERATURE,
                           dispersion: DispersionModel | None = None,
                           idler_reflectivity: float | None = None,
                           with_stability: bool = True, source: SourceSpec | None = None) -> DesignResult:
    """Full prediction for one (length, R2, sigma_p) configuration."""
    spec = design_source(target, length, reflectivity, temperature, dispersion,
                         idler_reflectivity) if source is None else source
    point = _operating_point(spec, target, temperature)
    report = _purity(spec, target, point, sigma)
    lw = _memory_linewidth(spec, target, point)
    stab_p = stab_t = None
    if with_stability:
        window = default_window(spec, point, 0.5)
        stab_p, stab_t = stability_windows(spec, point.pump_frequency, temperature, window=window)
    bright = enhancement_factor(spec, point, temperature)
    ok_bw = abs(lw / target.desired_bandwidth - 1) <= 0.2
    ok_p = report.total_purity >= target.minimum_total_purity
    binding = None
    if not ok_bw:
        binding = "bandwidth"
    elif not ok_p:
        split = math.sqrt(target.minimum_total_purity)
        binding = "mode_excitation" if report.mode_excitation < split else "spectral_purity"
    partner = c / (point.signal_frequency if target.memory_is_idler else point.idler_frequency)
    return DesignResult(
        source=spec,
        pump=PumpSpec(point.pump_frequency, sigma),
        poling_period=spec.poling_period,
        idler_wavelength=partner,
        predicted=DesignPrediction(report, lw, stab_p, stab_t, bright),
        feasible=ok_bw and ok_p,
        binding_constraint=binding,
        roles_swapped=target.memory_is_idler,
        temperature=temperature,
        metadata={"idler_mirrors": "equal to signal mirrors" if idler_reflectivity is None
                  else f"R2 = {idler_reflectivity}", "herald_filter": "top-hat, width = cluster spacing",
                  "length": length, "reflectivity": reflectivity, "sigma": sigma},
    )


def _length_for_bandwidth(target, r, temperature, dispersion):
    """Length at which the memory linewidth equals the target, or ``None``."""
    def mismatch(log_length):
        spec = design_source(target, math.exp(log_length), r, temperature, dispersion)
        point = _operating_point(spec, target, temperature)
        return math.log(_memory_linewidth(spec, target, point) / target.desired_bandwidth)

    a, b = (math.log(v) for v in LENGTH_BOUNDS)
    fa, fb = mismatch(a), mismatch(b)
    if fa * fb > 0:
        return None
    return math.exp(brentq(mismatch, a, b, xtol=1e-6))


def _search_candidate(args):
    target, r, temperature, dispersion, sigma_factors = args
    length = _length_for_bandwidth(target, r, temperature, dispersion)
    if length is None:
        return None
    spec = design_source(target, length, r, temperature, dispersion)
    point = _operating_point(spec, target, temperature)
    split = math.sqrt(target.minimum_total_purity)
    trials = []
    for f in sigma_factors:
        sigma = f * target.desired_bandwidth
        try:
            rep = _purity(spec, target, point, sigma)
        except RespdcError:
            continue
        trials.append((sigma, rep))
        if rep.spectral_purity >= split:
            break
    if not trials:
        return None
    sigma, rep = next(((s, p) for s, p in trials if p.spectral_purity >= split),
                      max(trials, key=lambda sp: sp[1].total_purity))
    return dict(length=length, reflectivity=r, sigma=sigma, report=rep,
                eta=escape_probability(spec, temperature))


def design_for_memory(target: MemoryTarget, temperature: float = DEMONSTRATOR_TEMPERATURE,
                      reflectivities=DEFAULT_DESIGN_REFLECTIVITIES,
                      sigma_factors=DEFAULT_SIGMA_FACTORS,
                      dispersion: DispersionModel | None = None, workers: int | None = 1,
                      with_stability: bool = True) -> DesignResult:
    """Search (L, R2, sigma_p) for a memory target.

    For every reflectivity on the grid the length is solved so that the memory
    photon's linewidth equals the target. The pump bandwidth is then the
    smallest multiple of the target bandwidth for which ``S >= sqrt(P_min)``.
    Among the candidates the largest M wins, ties broken by escape probability.
    If no candidate reaches ``P_min`` the best one is returned marked
    infeasible, with the binding constraint named.
    """
    cells = [(target, float(r), temperature, dispersion, tuple(sigma_factors)) for r in reflectivities]
    found = [res for res in _run_cells(_search_candidate, cells, workers) if res is not None]
    if not found:
        spec = design_source(target, LENGTH_BOUNDS[1], max(reflectivities), temperature, dispersion)
        point = _operating_point(spec, target, temperature)
        raise DomainError(f"bandwidth {target.desired_bandwidth / 1e6:.4g} MHz unreachable: the "
                          f"narrowest line is {_memory_linewidth(spec, target, point) / 1e6:.4g} MHz")
    feasible = [f for f in found if f["report"].total_purity >= target.minimum_total_purity]
    if feasible:
        best = max(feasible, key=lambda f: (round(f["report"].mode_excitation, 12), f["eta"]))
    else:
        best = max(found, key=lambda f: (f["report"].total_purity, f["eta"]))
    result = evaluate_configuration(target, best["length"], best["reflectivity"], best["sigma"],
                                    temperature, dispersion, with_stability=with_stability)
    meta = dict(result.metadata)
    meta["candidates"] = [
        {"length": f["length"], "reflectivity": f["reflectivity"], "sigma": f["sigma"],
         "mode_excitation": f["report"].mode_excitation, "total_purity": f["report"].total_purity}
        for f in found]
    return replace(result, metadata=meta)
