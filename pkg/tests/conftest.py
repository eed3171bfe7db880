import numpy as np
import pytest

from hseuler.grid import Grid, ScalarField


@pytest.fixture
def grid16():
    return Grid(16, 16, 16)


@pytest.fixture
def grid32():
    return Grid(32, 32, 32)


def random_field(grid, seed, kmax=None, z_even=False):
    """Band-limited random real field; z_even restricts to cosine modes in z."""
    rng = np.random.default_rng(seed)
    shape = grid.shape
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kx, ky, kz = grid.wavenumbers()
    kmax = kmax if kmax is not None else min(shape) // 3
    keep = (np.abs(kx) <= kmax) & (np.abs(ky) <= kmax) & (np.abs(kz) <= kmax)
    spec = np.where(keep, spec, 0.0)
    if z_even:
        idx = (-np.arange(grid.nz)) % grid.nz
        spec = 0.5 * (spec + spec[:, :, idx])
    vals = np.fft.ifftn(spec).real
    vals *= 1.0 / max(np.max(np.abs(vals)), 1e-30)
    return ScalarField(grid, vals, "even" if z_even else "none")


def sine_field(grid, axis=0, freq=1, parity="none"):
    x, y, z = grid.mesh()
    coord = (x, y, z)[axis]
    vals = np.sin(2 * np.pi * freq * coord) + np.zeros(grid.shape)
    return ScalarField(grid, vals, parity)
