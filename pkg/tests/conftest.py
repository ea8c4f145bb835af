import math

import numpy as np
import pytest

from wrjump.kernels import GridSpec, KernelSpec
from wrjump.model import ModelParams

GAUSS_UNIT = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian_model(a_mass=1.0, phi_mass=1.0, a_sigma=1.0, phi_sigma=1.0, d=1) -> ModelParams:
    a = KernelSpec.with_mass("gaussian", a_mass, a_sigma, d)
    phi = KernelSpec.with_mass("gaussian", phi_mass, phi_sigma, d)
    return ModelParams(d, a, a, phi, phi)


def smooth_density(grid, rng, modes=3, floor=0.1):
    """Random positive trigonometric profile on a 1D grid."""
    x = grid.coordinates()[0]
    L = grid.box_length[0]
    out = []
    for _ in range(2):
        f = np.full(grid.shape, 1.0)
        for k in range(1, modes + 1):
            amp, ph = rng.uniform(-0.3, 0.3), rng.uniform(0, 2 * math.pi)
            f += amp / k * np.cos(2 * math.pi * k * x / L + ph)
        out.append(np.maximum(f, floor) * rng.uniform(0.5, 1.5))
    return out


@pytest.fixture
def model():
    return gaussian_model()


@pytest.fixture
def grid():
    return GridSpec(1, 20.0, 128)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
