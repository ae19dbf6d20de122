import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modcalc.lattice import SampledField, UniformGrid

settings.register_profile(
    "modcalc",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("modcalc")


@pytest.fixture(scope="session")
def grid():
    return UniformGrid.box(12.0, 256)


@pytest.fixture(scope="session")
def gaussian(grid):
    return SampledField.from_function(grid, lambda x: np.pi**-0.25 * np.exp(-(x**2) / 2))


def rel_l2(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def band_limited(seed, grid, frac=0.25, packets=3):
    """Sum of Gaussian packets: centres within the middle third, frequencies below frac * Nyquist."""
    rng = np.random.default_rng(seed)
    x = grid.axes()[0]
    L = -grid.offsets[0]
    nyq = math.pi / grid.steps[0]
    vals = np.zeros_like(x, dtype=complex)
    for _ in range(packets):
        x0 = rng.uniform(-L / 3, L / 3)
        k0 = rng.uniform(-frac, frac) * nyq
        c = rng.normal() + 1j * rng.normal()
        vals += c * np.exp(-((x - x0) ** 2) / 2 + 1j * k0 * x)
    return SampledField(grid, vals)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
