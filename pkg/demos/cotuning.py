"""Shift the signal by +-2.3 GHz while keeping both photons resonant.

Temperature and pump frequency are moved together; the first-order
prediction from the co-tuning slopes is compared with the Newton solution.
"""
import numpy as np

from respdc.presets import demonstrator, demonstrator_setpoint
from respdc.tuning import fine_tune_schedule


def main():
    spec = demonstrator()
    point = demonstrator_setpoint(spec)
    sched = fine_tune_schedule(spec, point, None, np.linspace(-2.3e9, 2.3e9, 11))
    k = sched.coefficients
    print(f"dT/dnu_s = {k.dT_dnu_s_per_ghz:.4f} C/GHz, dnu_p/dnu_s = {k.dnu_p_dnu_s:.4f}")
    print(f"{'offset GHz':>10s} {'dT mK':>9s} {'dnu_p GHz':>10s} {'1st-order err MHz':>18s}")
    for e in sched.entries:
        err = (e.pump_frequency - e.first_order_pump_frequency) / 1e6
        print(f"{e.signal_offset / 1e9:10.2f} {(e.temperature - point.temperature) * 1e3:9.1f} "
              f"{(e.pump_frequency - point.pump_frequency) / 1e9:10.3f} {err:18.3f}")


if __name__ == "__main__":
    main()
