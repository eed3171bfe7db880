"""Thin wrappers around scipy.fft used by every module.

All transforms run with a process-wide worker count (default: all cores)
so CLI ``--threads`` can bound parallelism.  scipy's pocketfft is
deterministic for a fixed input regardless of the worker count.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.fft as _sfft

_workers = os.cpu_count() or 1


def set_workers(n: int) -> None:
    global _workers
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _workers = n


def get_workers() -> int:
    return _workers


def fftn(a):
    return _sfft.fftn(a, workers=_workers)


def ifftn(a):
    return _sfft.ifftn(a, workers=_workers)


def rfftn(a):
    return _sfft.rfftn(a, workers=_workers)


def irfftn(a, shape):
    return _sfft.irfftn(a, s=shape, workers=_workers)


def rfft_wavenumbers(shape):
    """Integer wavenumber grids (broadcastable 1-D arrays) for rfftn layout.

    Returns (kx, ky, kz) shaped (nx,1,1), (1,ny,1), (1,1,nz//2+1); entries
    are the integer frequencies on the unit torus.
    """
    nx, ny, nz = shape
    kx = np.fft.fftfreq(nx, d=1.0 / nx).reshape(nx, 1, 1)
    ky = np.fft.fftfreq(ny, d=1.0 / ny).reshape(1, ny, 1)
    kz = np.arange(nz // 2 + 1, dtype=float).reshape(1, 1, nz // 2 + 1)
    return kx, ky, kz


def _copy_resolved(dst, src, shape_dst, shape_src):
    """Copy the modes strictly below the coarser Nyquist between rfft layouts.

    Nyquist planes are dropped on both sides: their coefficients are not
    portable between grid sizes.  Exact for fields with empty Nyquist
    planes (everything dealiased to |k_a| <= n_a/3 qualifies).
    """
    hx = min(shape_dst[0], shape_src[0]) // 2
    hy = min(shape_dst[1], shape_src[1]) // 2
    hz = min(shape_dst[2], shape_src[2]) // 2
    dx, sx = shape_dst[0], shape_src[0]
    dy, sy = shape_dst[1], shape_src[1]
    for d_sl, s_sl in (
        (slice(0, hx), slice(0, hx)),
        (slice(dx - hx + 1, dx), slice(sx - hx + 1, sx)),
    ):
        for d_tl, s_tl in (
            (slice(0, hy), slice(0, hy)),
            (slice(dy - hy + 1, dy), slice(sy - hy + 1, sy)),
        ):
            dst[d_sl, d_tl, :hz] = src[s_sl, s_tl, :hz]
    return dst


def pad_rfft_spectrum(spec, shape, pad_shape):
    """Zero-pad an rfftn spectrum of ``shape`` onto ``pad_shape`` bins.

    Coefficients keep their integer wavenumbers, so irfftn(s=pad_shape)
    evaluates the same trigonometric polynomial on the finer grid (the
    necessary nx*ny*nz rescaling is applied here).
    """
    px, py, pz = pad_shape
    out = np.zeros((px, py, pz // 2 + 1), dtype=complex)
    _copy_resolved(out, spec, pad_shape, shape)
    return out * (px * py * pz / (shape[0] * shape[1] * shape[2]))


def truncate_rfft_spectrum(spec, pad_shape, shape):
    """Inverse of pad_rfft_spectrum: keep only modes resolved by ``shape``."""
    nx, ny, nz = shape
    out = np.zeros((nx, ny, nz // 2 + 1), dtype=complex)
    _copy_resolved(out, spec, shape, pad_shape)
    return out * (nx * ny * nz / (pad_shape[0] * pad_shape[1] * pad_shape[2]))
