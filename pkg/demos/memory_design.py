"""Sources for three quantum memories: Cs at 852 nm, Tm at 795 nm and Er at 1536 nm.

For Er the telecom photon couples to the memory, so the roles of signal and
idler are exchanged. Each configuration is evaluated as given; a restricted
search for Cs shows how the optimizer reports its choice.
"""
from respdc.design import MemoryTarget, design_for_memory, evaluate_configuration

CASES = [
    (MemoryTarget(852e-9, 500e6, 0.9, name="Cs"), 2.5e-3, 0.90, 1000e6),
    (MemoryTarget(795e-9, 80e6, 0.9, name="Tm"), 10e-3, 0.94, 250e6),
    (MemoryTarget(1536e-9, 50e6, 0.7, name="Er"), 80e-3, 0.98, 60e6),
]


def describe(result):
    pr = result.predicted.purity
    return (f"L = {result.source.length * 1e3:.2f} mm, R2 = {result.metadata['reflectivity']:.3f}, "
            f"pump {result.pump.bandwidth_fwhm / 1e6:.0f} MHz, partner {result.idler_wavelength * 1e9:.1f} nm, "
            f"linewidth {result.predicted.linewidth / 1e6:.1f} MHz, M = {pr.mode_excitation:.3f}, "
            f"K = {pr.schmidt_number:.3f}, P = {pr.total_purity:.3f}, feasible = {result.feasible}"
            + ("" if result.feasible else f" (limited by {result.binding_constraint})"))


def main():
    for target, length, r, sigma in CASES:
        result = evaluate_configuration(target, length, r, sigma, with_stability=False)
        print(f"{target.name}: {describe(result)}")
    search = design_for_memory(CASES[0][0], reflectivities=(0.85, 0.90, 0.95), with_stability=False)
    print(f"Cs search: {describe(search)}")


if __name__ == "__main__":
    main()
