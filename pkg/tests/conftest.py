import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

sys.path.insert(0, str(Path(__file__).parent))

from dctrecover import GrayImage  # noqa: E402


def smooth_image(rng, size, sigma=2.0, noise=3.0, lo=20, hi=220):
    """Random smooth image with mild noise, values well inside [0, 255]."""
    f = gaussian_filter(rng.normal(size=(size, size)), sigma)
    f = (f - f.min()) / (np.ptp(f) or 1.0) * (hi - lo) + lo
    f = f + rng.normal(0, noise, f.shape)
    return np.clip(np.round(f), 0, 255).astype(np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def smooth16(rng):
    return GrayImage.from_array(smooth_image(rng, 16))


@pytest.fixture
def smooth32(rng):
    return GrayImage.from_array(smooth_image(rng, 32))


# acceptance verdicts, filled in by test_acceptance.py
ACCEPTANCE = {}
CRITERIA = range(1, 11)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in CRITERIA:
        ok, detail = ACCEPTANCE.get(n, (False, "not run or errored before a verdict"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
