"""Surface pressure: the z-independent solve fixing the horizontal flow.

The pressure obeys the horizontal Poisson problem

    Lap_H p = -(grad_H (x) grad_H) : int_0^1 (u_H (x) u_H) dz,

with dp/dz = 0 and zero horizontal mean fixing the solution uniquely.
The quadratic source is formed pointwise and dealiased before the solve,
consistent with the solver's aliasing policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fft
from .grid import Grid, ScalarField, _check_same_grid


@dataclass(frozen=True)
class PressureField:
    """A z-independent, zero-mean pressure sample."""

    field: ScalarField

    def __post_init__(self):
        v = self.field.values
        scale = max(np.max(np.abs(v)), 1.0)
        if np.max(np.abs(v - v[:, :, :1])) > 1e-12 * scale:
            raise ValueError("pressure must be z-independent")
        if abs(np.mean(v)) > 1e-12 * scale:
            raise ValueError("pressure must have zero horizontal mean")

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def plane(self) -> np.ndarray:
        """The (nx, ny) sample of p."""
        return self.field.values[:, :, 0]


def _dealias_pointwise_product(a: np.ndarray, b: np.ndarray, grid: Grid) -> np.ndarray:
    spec = _fft.rfftn(a * b)
    kx, ky, kz = _fft.rfft_wavenumbers(grid.shape)
    mask = (np.abs(kx) <= grid.nx / 3) & (np.abs(ky) <= grid.ny / 3) & (kz <= grid.nz / 3)
    return _fft.irfftn(spec * mask, grid.shape)


def solve_pressure(u: ScalarField, v: ScalarField) -> PressureField:
    """Spectral inversion of the horizontal Poisson problem."""
    grid = _check_same_grid(u, v)
    s_xx = np.mean(_dealias_pointwise_product(u.values, u.values, grid), axis=2)
    s_xy = np.mean(_dealias_pointwise_product(u.values, v.values, grid), axis=2)
    s_yy = np.mean(_dealias_pointwise_product(v.values, v.values, grid), axis=2)

    kx = np.fft.fftfreq(grid.nx, 1.0 / grid.nx)[:, None]
    ky = np.arange(grid.ny // 2 + 1, dtype=float)[None, :]
    fxx = np.fft.rfft2(s_xx)
    fxy = np.fft.rfft2(s_xy)
    fyy = np.fft.rfft2(s_yy)
    # (grad (x) grad) : S  =  dxx Sxx + 2 dxy Sxy + dyy Syy
    rhs = -((2j * np.pi * kx) ** 2 * fxx
            + 2 * (2j * np.pi * kx) * (2j * np.pi * ky) * fxy
            + (2j * np.pi * ky) ** 2 * fyy)
    k2 = (2 * np.pi) ** 2 * (kx**2 + ky**2)
    k2[0, 0] = np.inf  # zero-mean gauge
    p_hat = -rhs / k2
    p2d = np.fft.irfft2(p_hat, s=(grid.nx, grid.ny))
    values = np.broadcast_to(p2d[:, :, None], grid.shape).copy()
    return PressureField(ScalarField(grid, values, "even"))


def pressure_residual(p: PressureField, u: ScalarField, v: ScalarField) -> float:
    """L2 residual of the Poisson equation the solve is supposed to satisfy."""
    grid = p.grid
    s_xx = np.mean(_dealias_pointwise_product(u.values, u.values, grid), axis=2)
    s_xy = np.mean(_dealias_pointwise_product(u.values, v.values, grid), axis=2)
    s_yy = np.mean(_dealias_pointwise_product(v.values, v.values, grid), axis=2)
    kx = np.fft.fftfreq(grid.nx, 1.0 / grid.nx)[:, None]
    ky = np.arange(grid.ny // 2 + 1, dtype=float)[None, :]
    ddxx = lambda f: np.fft.irfft2((2j * np.pi * kx) ** 2 * np.fft.rfft2(f), s=f.shape)
    ddyy = lambda f: np.fft.irfft2((2j * np.pi * ky) ** 2 * np.fft.rfft2(f), s=f.shape)
    ddxy = lambda f: np.fft.irfft2(
        (2j * np.pi * kx) * (2j * np.pi * ky) * np.fft.rfft2(f), s=f.shape
    )
    source = ddxx(s_xx) + 2 * ddxy(s_xy) + ddyy(s_yy)
    lap_p = ddxx(p.plane()) + ddyy(p.plane())
    return float(np.sqrt(np.mean((lap_p + source) ** 2)))
