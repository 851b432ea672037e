import numpy as np
import pytest

from beatmaps.lineshape import SimulationGrids, five_mode_model, simulate_cube
from beatmaps.spectra import TimeTrace
from beatmaps.units import C_CM_PER_FS

# the standard analysis record: 80-1000 fs at 20 fs
T_ANALYSIS = 80.0 + 20.0 * np.arange(47)


def tone(nu_cm, t=T_ANALYSIS, phase=0.0, amp=1.0):
    return amp * np.cos(2 * np.pi * C_CM_PER_FS * nu_cm * np.asarray(t) + phase)


def tone_trace(*nus, t=T_ANALYSIS, phases=None):
    phases = phases or [0.0] * len(nus)
    return TimeTrace(t, sum(tone(nu, t, ph) for nu, ph in zip(nus, phases)))


@pytest.fixture(scope="session")
def model_cube():
    """Five-mode model cube on the default grids (0-1000 fs), simulated once."""
    cube, warnings = simulate_cube(five_mode_model(), SimulationGrids(), label="model model")
    return cube


@pytest.fixture(scope="session")
def model_cube_dir(model_cube, tmp_path_factory):
    from beatmaps.spectra import save_archive

    path = tmp_path_factory.mktemp("model") / "cube"
    save_archive(model_cube, path)
    return path


# --- acceptance summary --------------------------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _ACCEPTANCE[props["criterion"]] = ("PASS" if report.passed else "FAIL", props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
