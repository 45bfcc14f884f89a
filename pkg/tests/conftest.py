import numpy as np
import pytest

from gevreyns import Grid, SpectralField
from gevreyns.ensembles import random_field


@pytest.fixture(scope="session")
def grid64():
    return Grid(2, 64)


@pytest.fixture(scope="session")
def grid32():
    return Grid(2, 32)


@pytest.fixture(scope="session")
def grid3d():
    return Grid(3, 32)


def rng_field(grid, seed, **kw):
    return random_field(grid, np.random.default_rng(seed), **kw)


def place_modes(grid, entries, components=1):
    """Exact coefficient construction: entries maps integer mode -> complex
    value per component; the Hermitian partner is filled automatically."""
    coeffs = np.zeros((components,) + grid.shape, dtype=np.complex128)
    for k, vals in entries.items():
        vals = np.atleast_1d(np.asarray(vals, dtype=np.complex128))
        idx = grid.mode_index(k)
        neg = grid.mode_index(tuple(-ki for ki in k))
        for c in range(components):
            coeffs[(c,) + idx] += vals[c]
            coeffs[(c,) + neg] += np.conj(vals[c])
    return SpectralField(grid, coeffs)
