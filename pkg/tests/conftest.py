import math

import numpy as np
import pytest

from aese.drives import EnvelopeSpec, ShelvingSchedule
from aese.models import CA40, GateConfig, GateDrive, HilbertSpec, ModeSpec

TWO_PI = 2 * math.pi


def rf_config(gradient=300.0, f_str=1.0e6, f_com=3.0e6, f_drive=1.1e6, t_g=100e-6, fock=0, calibration=1 / math.sqrt(2)):
    modes = (ModeSpec("com", TWO_PI * f_com, (1, 1)), ModeSpec("str", TWO_PI * f_str, (1, -1)))
    drive = GateDrive(gradient, TWO_PI * f_drive, EnvelopeSpec("sin2_full", t_g))
    return GateConfig(CA40, modes, drive, hilbert=HilbertSpec((fock,)), calibration=calibration)


def dc_single_mode(gradient=50.0, f_mode=1.0e6, t_g=60e-6, tau=15e-6, fock=0):
    mode = ModeSpec("str", TWO_PI * f_mode, (1, -1))
    drive = GateDrive(gradient, 0.0, EnvelopeSpec("sin2_ramp_hold", t_g, tau))
    return GateConfig(CA40, (mode,), drive, hilbert=HilbertSpec((fock,)))


def shelving_config(kind="rabi", f_mode=250e3, tau=10e-6, t_g=170e-6, delta0_hz=None, fock=0):
    mode = ModeSpec("str", TWO_PI * f_mode, (1, -1))
    sh = ShelvingSchedule(kind, tau, t_g, TWO_PI * delta0_hz if delta0_hz else None)
    drive = GateDrive(50.0, 0.0, EnvelopeSpec("constant", t_g))
    return GateConfig(CA40, (mode,), drive, sh, HilbertSpec((fock,)), calibration=1 / math.sqrt(2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
