import sys
from pathlib import Path

import numpy as np
import pytest

from cracksim.rng import make_rng

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mask_pair(rng, size=16, density=None):
    d1 = rng.uniform(0.02, 0.4) if density is None else density
    d2 = rng.uniform(0.02, 0.4) if density is None else density
    return rng.random((size, size)) < d1, rng.random((size, size)) < d2


def noise_with_line(seed, size=128, line_value=0.1, low=0.4, high=0.9):
    """Uniform noise with a 1-px horizontal dark line; returns the image (line on row size//2)."""
    img = make_rng(seed).uniform(low, high, (size, size))
    img[size // 2, :] = line_value
    return img


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion number and label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        n, name = marker.args
        detail = getattr(item, "acceptance_detail", "")
        _ACCEPTANCE[n] = (name, report.outcome.upper(), detail, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        name, outcome, detail, duration = _ACCEPTANCE[n]
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"[{status}] {n}. {name} ({duration:.1f}s) {detail}".rstrip())
