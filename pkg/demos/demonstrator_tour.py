"""Walk through the 12.3 mm demonstrator: cavity, clusters, purity and brightness.

Run with ``python3 demos/demonstrator_tour.py``.
"""
from respdc.brightness import enhancement_factor
from respdc.cavity import IDLER, SIGNAL, finesse, free_spectral_range, resonance_linewidth
from respdc.jsa import PumpSpec, evaluate_purity
from respdc.phasematch import cluster_spacing_estimate, pm_bandwidth_estimate
from respdc.presets import DEMONSTRATOR_TEMPERATURE as T0, demonstrator, demonstrator_setpoint
from respdc.spectrum import default_window, detect_clusters, signal_spectrum, stability_windows


def main():
    spec = demonstrator()
    point = demonstrator_setpoint(spec)
    nu_s, nu_i = point.signal_frequency, point.idler_frequency
    print(f"poling period      {spec.poling_period * 1e6:.4f} um")
    print(f"doubly resonant at pump {point.pump_frequency / 1e12:.6f} THz, "
          f"signal {nu_s / 1e12:.6f} THz, idler {nu_i / 1e12:.6f} THz")

    for label, pol, nu in (("signal", SIGNAL, nu_s), ("idler", IDLER, nu_i)):
        print(f"{label:6s} FSR {free_spectral_range(spec, pol, nu, T0) / 1e9:.3f} GHz, "
              f"finesse {finesse(spec, pol, T0):.1f}, "
              f"linewidth {resonance_linewidth(spec, pol, nu, T0) / 1e6:.2f} MHz")

    print(f"phase-matching bandwidth {pm_bandwidth_estimate(spec, point) / 1e9:.1f} GHz, "
          f"cluster spacing {cluster_spacing_estimate(spec, point) / 1e9:.2f} GHz")

    s = signal_spectrum(spec, point.pump_frequency, T0, default_window(spec, point, 1.5))
    report = detect_clusters(s, spec)
    print(f"{len(report.clusters)} clusters, central one holds {report.central_fraction:.1%} of the rate")

    for sigma in (30e6, 100e6, 300e6):
        r = evaluate_purity(spec, PumpSpec(point.pump_frequency, sigma), T0, signal_hint=nu_s)
        print(f"pump {sigma / 1e6:5.0f} MHz: M = {r.mode_excitation:.3f}, K = {r.schmidt_number:.3f}, "
              f"P = {r.total_purity:.3f}")

    b = enhancement_factor(spec, point, T0)
    print(f"escape probability {b.escape_probability:.3f}, "
          f"relative spectral brightness {b.relative_spectral_brightness:.0f}")

    pump_w, temp_w = stability_windows(spec, point.pump_frequency, T0, default_window(spec, point, 0.5))
    print(f"mode-hop-free range: pump +-{pump_w.halfwidth / 1e6:.0f} MHz, "
          f"temperature +-{temp_w.halfwidth * 1e3:.1f} mK")


if __name__ == "__main__":
    main()
