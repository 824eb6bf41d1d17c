"""Shared fixtures: the 12.3 mm demonstrator and dispersion-free toy sources."""
from pathlib import Path

import numpy as np
import pytest
from scipy.constants import c

from respdc.cavity import MirrorPair, SourceSpec
from respdc.dispersion import DispersionModel, ThermalModel, load_dispersion
from respdc.presets import DEMONSTRATOR_TEMPERATURE, demonstrator, demonstrator_setpoint

T0 = DEMONSTRATOR_TEMPERATURE


@pytest.fixture(scope="session")
def model():
    return load_dispersion()


@pytest.fixture(scope="session")
def demo(model):
    return demonstrator(model)


@pytest.fixture(scope="session")
def setpoint(demo):
    return demonstrator_setpoint(demo)


def constant_source(n=2.0, length=7.5e-3, r1=0.0, r2=0.0, ri1=None, ri2=None,
                    loss_s=0.0, loss_i=0.0, n_e=None, period=1e-3):
    """Source with a dispersion-free index, useful for closed-form checks."""
    ri1 = r1 if ri1 is None else ri1
    ri2 = r2 if ri2 is None else ri2
    return SourceSpec(length=length, poling_period=period, mirrors_signal=MirrorPair(r1, r2),
                      mirrors_idler=MirrorPair(ri1, ri2),
                      dispersion=DispersionModel.constant(n, n_e), loss_signal=loss_s,
                      loss_idler=loss_i, reference_temperature=T0,
                      thermal=ThermalModel(1.5e-5, T0))


def dense_fwhm(x, y):
    """Independent half-maximum crossing finder used as a test oracle."""
    y = np.asarray(y) / np.max(y)
    above = np.flatnonzero(y >= 0.5)
    i, j = above[0], above[-1]
    left = x[i - 1] + (0.5 - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
    right = x[j] + (0.5 - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
    return right - left


NU_890 = c / 890e-9
NU_532 = c / 532e-9


CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# Small grids so that every subcommand finishes in seconds.
FAST_CLI_ARGS = {
    "spectrum": ["--config", str(CONFIGS / "demonstrator.toml")],
    "clusters": ["--config", str(CONFIGS / "demonstrator.toml")],
    "jsa": ["--config", str(CONFIGS / "demonstrator.toml"), "--set", "jsa.export_points=101"],
    "purity": ["--config", str(CONFIGS / "demonstrator.toml")],
    "bandwidth-map": ["--config", str(CONFIGS / "demonstrator.toml")],
    "purity-map": ["--config", str(CONFIGS / "demonstrator.toml"), "--set", "map.lengths_mm=[10.0, 20.0]",
                   "--set", "map.reflectivities=[0.9, 0.95]", "--threads", "1"],
    "purity-vs-pump": ["--config", str(CONFIGS / "demonstrator.toml"),
                       "--set", "purity_vs_pump.sigmas_mhz=[50.0, 200.0]"],
    "brightness": ["--config", str(CONFIGS / "demonstrator.toml")],
    "stability": ["--config", str(CONFIGS / "demonstrator.toml")],
    "fine-tune": ["--config", str(CONFIGS / "demonstrator.toml"), "--set", "tune.points=11"],
    "design": ["--config", str(CONFIGS / "design_cs_quoted.toml")],
}

# verdict lines of the acceptance suite, repeated in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
