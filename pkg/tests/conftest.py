import numpy as np
import pytest

from mkdvlab import GridSpec, RealField, SpectralField, dft


@pytest.fixture
def grid():
    """Small integer-frequency grid: L = 2*pi*8, xi lattice = k/8."""
    return GridSpec(16.0 * np.pi, 128)


@pytest.fixture
def ref_grid():
    """Reference grid for solver-flavored tests."""
    return GridSpec(64.0 * np.pi, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_real_field(grid, rng, decay=0.5):
    """Random smooth-ish real field with geometrically decaying spectrum."""
    c = np.zeros(grid.n, dtype=complex)
    kmax = grid.n // 2 - 1
    for k in range(1, kmax + 1):
        z = (rng.standard_normal() + 1j * rng.standard_normal()) * decay**k
        c[k] = z
        c[-k] = np.conj(z)
    c[0] = rng.standard_normal()
    return SpectralField(grid, c)


@pytest.fixture
def random_field(grid, rng):
    return random_real_field(grid, rng)
