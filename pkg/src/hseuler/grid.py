"""Uniform periodic grids on the unit torus and their spectral calculus.

Conventions fixed here and relied on everywhere else:

* the domain is the flat unit torus, one period of length 1 per axis,
  sampled at x_i = i/n with spacing h = 1/n exactly;
* arrays are C-ordered with shape (nx, ny, nz), z fastest in memory;
* Fourier coefficients use the unitary-mean normalization
  ``coeffs(k) = mean(f * exp(-2*pi*i*k.x))`` so Parseval reads
  ``mean(f**2) == sum(|coeffs|**2)`` and cos(2*pi*x) has two coefficients
  of magnitude 1/2 at k = (+-1, 0, 0);
* odd-order spectral derivatives zero the Nyquist mode of their axis.

Vertical symmetry: hydrostatic velocity fields are even in z for the
horizontal components and odd in z for the vertical one; the channel of
height 1/2 embeds into the torus through ``extend_symmetric``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _fft
from .errors import ConstraintError, GridMismatchError, InvalidGridError, ParameterError

PARITIES = ("even", "odd", "none")


@dataclass(frozen=True)
class Grid:
    """Sample counts per axis of a uniform periodic grid on the unit torus."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for n in (self.nx, self.ny, self.nz):
            if n < 8 or n % 2 != 0:
                raise InvalidGridError(f"grid dims must be even and >= 8, got {self.shape}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (1.0 / self.nx, 1.0 / self.ny, 1.0 / self.nz)

    @property
    def max_spacing(self) -> float:
        return 1.0 / min(self.shape)

    def axes(self):
        """Coordinate arrays (1-D) along each axis."""
        return tuple(np.arange(n) / n for n in self.shape)

    def mesh(self):
        """Broadcastable coordinate arrays X, Y, Z."""
        x, y, z = self.axes()
        return x[:, None, None], y[None, :, None], z[None, None, :]

    def wavenumbers(self):
        """Integer wavenumbers as broadcastable arrays (full fftn layout)."""
        kx = np.fft.fftfreq(self.nx, 1.0 / self.nx)[:, None, None]
        ky = np.fft.fftfreq(self.ny, 1.0 / self.ny)[None, :, None]
        kz = np.fft.fftfreq(self.nz, 1.0 / self.nz)[None, None, :]
        return kx, ky, kz


@lru_cache(maxsize=32)
def _dealias_mask(grid: Grid) -> np.ndarray:
    kx, ky, kz = grid.wavenumbers()
    mask = (
        (np.abs(kx) <= grid.nx / 3)
        & (np.abs(ky) <= grid.ny / 3)
        & (np.abs(kz) <= grid.nz / 3)
    )
    mask.setflags(write=False)
    return mask


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"fields on {f.grid.shape} vs {g.shape}")
    return g


@dataclass(frozen=True)
class ScalarField:
    """Real samples of a periodic scalar on a Grid, with z-parity metadata."""

    grid: Grid
    values: np.ndarray
    z_parity: str = "none"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.shape != self.grid.shape:
            raise InvalidGridError(f"values shape {v.shape} != grid {self.grid.shape}")
        if self.z_parity not in PARITIES:
            raise ParameterError(f"z_parity must be one of {PARITIES}")
        if not np.isfinite(v).all():
            raise ConstraintError("field contains NaN/Inf")
        if self.z_parity == "odd":
            scale = np.max(np.abs(v))
            if scale > 0 and np.max(np.abs(v[:, :, 0])) > 1e-12 * scale:
                raise ConstraintError("odd-parity field must vanish on the z=0 plane")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class VectorField:
    """Hydrostatic velocity sample (u, v horizontal; w vertical diagnostic)."""

    u: ScalarField
    v: ScalarField
    w: ScalarField

    def __post_init__(self):
        _check_same_grid(self.u, self.v, self.w)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def components(self):
        return (self.u, self.v, self.w)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients indexed by integer wavevectors.

    Layout follows numpy's fftn ordering; coefficients are mean-normalized
    (see module docstring).  Real-representable fields satisfy
    coeffs(-k) == conj(coeffs(k)).
    """

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        object.__setattr__(self, "coeffs", c)
        if c.shape != self.grid.shape:
            raise InvalidGridError(f"coeffs shape {c.shape} != grid {self.grid.shape}")


def fft3(f: ScalarField) -> SpectralField:
    """Forward transform to mean-normalized Fourier coefficients."""
    n_total = np.prod(f.grid.shape)
    return SpectralField(f.grid, _fft.fftn(f.values) / n_total)


def ifft3(F: SpectralField, z_parity: str = "none") -> ScalarField:
    """Inverse transform; raises if the coefficients are not Hermitian."""
    vals = _fft.ifftn(F.coeffs) * np.prod(F.grid.shape)
    scale = np.max(np.abs(vals))
    if scale > 0 and np.max(np.abs(vals.imag)) > 1e-8 * scale:
        raise ConstraintError("spectrum is not Hermitian: inverse transform is not real")
    return ScalarField(F.grid, vals.real, z_parity)


def spectral_derivative(F: SpectralField, axis: str, order: int = 1) -> SpectralField:
    """Multiply by (2*pi*i*k_axis)**order; Nyquist zeroed for odd orders."""
    if axis not in ("x", "y", "z"):
        raise ParameterError(f"axis must be x, y or z, got {axis!r}")
    if order < 1:
        raise ParameterError("derivative order must be a positive integer")
    ax = "xyz".index(axis)
    n = F.grid.shape[ax]
    k = np.fft.fftfreq(n, 1.0 / n)
    if order % 2 == 1:
        k = k.copy()
        k[n // 2] = 0.0
    shape = [1, 1, 1]
    shape[ax] = n
    mult = (2j * np.pi * k.reshape(shape)) ** order
    return SpectralField(F.grid, F.coeffs * mult)


def dealias(F: SpectralField) -> SpectralField:
    """2/3-rule truncation: zero every mode with |k_a| > n_a/3 on any axis."""
    return SpectralField(F.grid, F.coeffs * _dealias_mask(F.grid))


def extend_symmetric(half_values: np.ndarray, parity: str, grid: Grid) -> ScalarField:
    """Extend half-channel samples z in [0, 1/2] to the full torus by parity.

    ``half_values`` holds nz/2 + 1 planes sampling z = 0, h, ..., 1/2
    inclusive.  The even extension mirrors about both boundary planes; the
    odd extension requires (and enforces) zero boundary planes, which is
    the no-normal-flow condition at z in {0, 1/2}.
    """
    if parity not in ("even", "odd"):
        raise ParameterError("parity must be 'even' or 'odd'")
    half = np.asarray(half_values, dtype=np.float64)
    nzh = grid.nz // 2 + 1
    if half.shape != (grid.nx, grid.ny, nzh):
        raise InvalidGridError(
            f"half-channel block must have shape {(grid.nx, grid.ny, nzh)}, got {half.shape}"
        )
    out = np.empty(grid.shape)
    out[:, :, :nzh] = half
    scale = np.max(np.abs(half))
    if parity == "even":
        out[:, :, nzh:] = half[:, :, grid.nz // 2 - 1 : 0 : -1]
    else:
        for j in (0, grid.nz // 2):
            if scale > 0 and np.max(np.abs(half[:, :, j])) > 1e-12 * scale:
                raise ConstraintError(
                    f"odd extension needs a zero plane at z={j / grid.nz}"
                )
        out[:, :, 0] = 0.0
        out[:, :, grid.nz // 2] = 0.0
        out[:, :, nzh:] = -half[:, :, grid.nz // 2 - 1 : 0 : -1]
    return ScalarField(grid, out, parity)


def vertical_antiderivative(f: ScalarField) -> tuple[ScalarField, np.ndarray]:
    """Periodic antiderivative in z, normalized so F(x, y, 0) = 0.

    A nonzero vertical mean has no periodic antiderivative, so the mean is
    removed first and returned alongside F as a 2-D array (the
    compatibility defect used by reconstruct_w).  The z-Nyquist plane is
    zeroed, matching the odd-derivative convention.
    """
    nz = f.grid.nz
    spec = np.fft.rfft(f.values, axis=2)
    zmean = spec[:, :, 0].real / nz
    kz = np.arange(nz // 2 + 1, dtype=float)
    kz[0] = 1.0  # placeholder; the mean plane is zeroed below
    spec = spec / (2j * np.pi * kz)
    spec[:, :, 0] = 0.0
    spec[:, :, nz // 2] = 0.0
    vals = np.fft.irfft(spec, n=nz, axis=2)
    vals -= vals[:, :, :1]
    parity = {"even": "odd", "odd": "even"}.get(f.z_parity, "none")
    return ScalarField(f.grid, vals, parity), zmean


def lp_norm(values: np.ndarray, p: float) -> float:
    """L^p norm on the unit torus (mean-based; p = inf gives the max norm)."""
    if p == np.inf:
        return float(np.max(np.abs(values)))
    if p < 1:
        raise ParameterError("p must be >= 1")
    if p == 2:
        return float(np.sqrt(np.mean(values * values)))
    return float(np.mean(np.abs(values) ** p) ** (1.0 / p))


def l2_norm(f: ScalarField) -> float:
    return lp_norm(f.values, 2)
