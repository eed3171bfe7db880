"""Dyadic frequency decomposition and Bony product splitting.

The radial annulus profile lives on [3/4 * 2^j, 8/3 * 2^j]; it is built
from a smooth cutoff chi (identically 1 inside radius 3/4, identically 0
outside 4/3) as rho(r) = chi(r/2) - chi(r), so the dyadic sum telescopes
and the low-frequency block is exactly the complement of the rest.  With
j_max chosen so the outermost cutoff covers every resolved wavevector,
the partition of unity is exact on the grid to machine precision.

Block products in the Bony split are formed on a 3/2-padded grid; summed
and truncated back, the three parts reconstruct the dealias-padded
product exactly (the classical 3/2 rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _fft
from .errors import InvalidGridError, ParameterError
from .grid import Grid, ScalarField, SpectralField, _check_same_grid, lp_norm


def _smoothstep(t):
    """C-infinity 0 -> 1 transition, exactly 0 for t <= 0 and 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    lo = t <= 0.0
    hi = t >= 1.0
    ts = np.clip(t, 1e-12, 1 - 1e-12)
    g0 = np.exp(-1.0 / ts)
    g1 = np.exp(-1.0 / (1.0 - ts))
    out = g0 / (g0 + g1)
    out = np.where(lo, 0.0, out)
    out = np.where(hi, 1.0, out)
    return out


def lowpass_cutoff(r):
    """chi: 1 on |k| <= 3/4, 0 on |k| >= 4/3, smooth monotone between."""
    return _smoothstep((4.0 / 3.0 - np.asarray(r, float)) / (4.0 / 3.0 - 3.0 / 4.0))


def annulus_profile(r):
    """rho supported exactly in the annulus (3/4, 8/3)."""
    r = np.asarray(r, dtype=float)
    return lowpass_cutoff(r / 2.0) - lowpass_cutoff(r)


def block_profile(j: int, r):
    """rho_j: the annulus profile at scale 2^j; j = -1 is the low-pass chi."""
    if j == -1:
        return lowpass_cutoff(r)
    return annulus_profile(np.asarray(r, float) / 2.0**j)


def j_max(grid: Grid) -> int:
    """Largest block index needed so the dyadic sum is 1 on every mode."""
    if min(grid.shape) < 16:
        raise InvalidGridError("need grid dims >= 16 for a dyadic decomposition")
    kmax = math.sqrt(sum((n / 2.0) ** 2 for n in grid.shape))
    return max(2, math.ceil(math.log2(kmax / 0.75)) - 1)


@lru_cache(maxsize=8)
def _radial_wavenumber(shape):
    kx, ky, kz = _fft.rfft_wavenumbers(shape)
    r = np.sqrt(kx**2 + ky**2 + kz**2)
    r.setflags(write=False)
    return r


@lru_cache(maxsize=8)
def _horizontal_radial_wavenumber(shape):
    kx, ky, _ = _fft.rfft_wavenumbers(shape)
    r = (np.sqrt(kx**2 + ky**2) + np.zeros((1, 1, 1)))
    r.setflags(write=False)
    return r


@dataclass
class LPDecomposition:
    """Dyadic blocks of a field, kept as rfft-layout spectra.

    ``spectra[i]`` is block j = j_values[i]; SpectralField views and real
    samples are materialized on demand.
    """

    grid: Grid
    j_values: tuple
    spectra: list = field(repr=False)

    def block_values(self, j: int) -> np.ndarray:
        return _fft.irfftn(self.spectra[self.j_values.index(j)], self.grid.shape)

    def block_spectral(self, j: int) -> SpectralField:
        vals = self.block_values(j)
        n_total = np.prod(self.grid.shape)
        return SpectralField(self.grid, _fft.fftn(vals) / n_total)

    @property
    def blocks(self) -> list:
        return [self.block_spectral(j) for j in self.j_values]

    def reconstruct(self) -> ScalarField:
        total = np.sum(self.spectra, axis=0)
        return ScalarField(self.grid, _fft.irfftn(total, self.grid.shape))

    def block_norm(self, j: int, p: float) -> float:
        return lp_norm(self.block_values(j), p)


def lp_blocks(f: ScalarField) -> LPDecomposition:
    """Dyadic blocks; their sum reproduces f to machine precision."""
    grid = f.grid
    J = j_max(grid)
    r = _radial_wavenumber(grid.shape)
    spec = _fft.rfftn(f.values)
    spectra = [spec * block_profile(j, r) for j in range(-1, J + 1)]
    return LPDecomposition(grid, tuple(range(-1, J + 1)), spectra)


def partition_residual(grid: Grid) -> float:
    """Max |1 - sum_j rho_j(k)| over resolved wavevectors."""
    r = _radial_wavenumber(grid.shape)
    total = sum(block_profile(j, r) for j in range(-1, j_max(grid) + 1))
    return float(np.max(np.abs(total - 1.0)))


def lp_besov_norm(f: ScalarField, s: float, p: float, q: float = np.inf,
                  blocks: LPDecomposition | None = None) -> float:
    """Littlewood-Paley Besov norm: ell^q over j of 2^{js} ||block_j||_p.

    Valid for any real s (this is the route to negative indices).
    """
    blocks = blocks or lp_blocks(f)
    terms = [2.0 ** (j * s) * blocks.block_norm(j, p) for j in blocks.j_values]
    if q == np.inf:
        return float(max(terms))
    return float(np.sum(np.asarray(terms) ** q) ** (1.0 / q))


def bony(f: ScalarField, g: ScalarField):
    """Bony split (T_f g, T_g f, R): low-high, high-low and resonant parts.

    All block products are formed on the 3/2-padded grid; the three parts
    sum to the dealias-padded product of f and g exactly.
    """
    grid = _check_same_grid(f, g)
    J = j_max(grid)
    pshape = tuple(n + n // 2 for n in grid.shape)
    r = _radial_wavenumber(grid.shape)

    def padded_blocks(x):
        spec = _fft.rfftn(x.values)
        out = []
        for j in range(-1, J + 1):
            bspec = _fft.pad_rfft_spectrum(spec * block_profile(j, r), grid.shape, pshape)
            out.append(_fft.irfftn(bspec, pshape))
        return out

    fb = padded_blocks(f)
    gb = padded_blocks(g)

    # running low-pass sums S_j = sum_{i <= j} block_i (index offset: j=-1 first)
    def lowpass(blocks):
        out = [blocks[0]]
        for b in blocks[1:]:
            out.append(out[-1] + b)
        return out

    Sf = lowpass(fb)
    Sg = lowpass(gb)

    t_fg = np.zeros(pshape)
    t_gf = np.zeros(pshape)
    reso = np.zeros(pshape)
    for idx, j in enumerate(range(-1, J + 1)):
        if j - 2 >= -1:
            t_fg += Sf[idx - 2] * gb[idx]
            t_gf += Sg[idx - 2] * fb[idx]
        near = np.zeros(pshape)
        for di in (-1, 0, 1):
            if 0 <= idx + di <= J + 1:
                near += fb[idx + di]
        reso += near * gb[idx]

    def back(x):
        spec = _fft.truncate_rfft_spectrum(_fft.rfftn(x), pshape, grid.shape)
        return ScalarField(grid, _fft.irfftn(spec, grid.shape))

    return back(t_fg), back(t_gf), back(reso)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    """Exact product truncated to the common grid (3/2-padded evaluation)."""
    grid = _check_same_grid(f, g)
    pshape = tuple(n + n // 2 for n in grid.shape)
    fp = _fft.irfftn(_fft.pad_rfft_spectrum(_fft.rfftn(f.values), grid.shape, pshape), pshape)
    gp = _fft.irfftn(_fft.pad_rfft_spectrum(_fft.rfftn(g.values), grid.shape, pshape), pshape)
    spec = _fft.truncate_rfft_spectrum(_fft.rfftn(fp * gp), pshape, grid.shape)
    return ScalarField(grid, _fft.irfftn(spec, grid.shape))


# ---------------------------------------------------------------------------
# product-estimate probes


def synth_power_law_field(grid: Grid, exponent: float, seed: int) -> ScalarField:
    """Random-phase field with Besov regularity ~ ``exponent`` (unit max)."""
    rng = np.random.default_rng(seed)
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    kx, ky, kz = grid.wavenumbers()
    kk = np.sqrt(kx**2 + ky**2 + kz**2)
    kmin, kmax = 1.0, min(grid.shape) / 3.0
    amp = np.where((kk >= kmin) & (kk <= kmax), np.maximum(kk, 1.0) ** -(exponent + 1.5), 0.0)
    vals = np.fft.ifftn(spec * amp).real
    vals /= max(np.max(np.abs(vals)), 1e-300)
    return ScalarField(grid, vals)


_ESTIMATES = ("B2a", "B2b", "B3", "B4a", "B4b", "B4c")


@dataclass(frozen=True)
class ProbeResult:
    estimate: str
    params: dict
    n_fields: int
    max_ratio: float
    mean_ratio: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "params": self.params,
            "n_fields": self.n_fields,
            "max_ratio": self.max_ratio,
            "mean_ratio": self.mean_ratio,
        }


def product_estimate_probe(
    grid: Grid,
    estimate: str,
    alpha: float = 0.5,
    beta: float = 0.5,
    theta: float = 0.25,
    p_triple=(3.0, 6.0, 6.0),
    n_fields: int = 100,
    seed: int = 0,
    field_exponent: float | None = None,
) -> ProbeResult:
    """Worst-case LHS/RHS ratio of a paraproduct estimate over an ensemble.

    Hypothesis arithmetic is validated first (Hoelder-conjugate indices and
    the sign conditions of the cited estimate); the ratio itself is a
    one-sided sanity number, finite and refinement-stable, never a claim
    about the sharp constant.
    """
    if estimate not in _ESTIMATES:
        raise ParameterError(f"unknown estimate id {estimate!r}")
    p, p1, p2 = p_triple
    if abs(1.0 / p1 + 1.0 / p2 - 1.0 / p) > 1e-9:
        raise ParameterError("need 1/p1 + 1/p2 = 1/p")
    if estimate == "B2b" and alpha >= 0:
        raise ParameterError("B2b requires alpha < 0")
    if estimate == "B3" and alpha + beta <= 0:
        raise ParameterError("resonance estimate requires alpha + beta > 0")
    if estimate == "B4a" and not (alpha < beta and alpha + beta > 0):
        raise ParameterError("B4a requires alpha < beta and alpha + beta > 0")
    if estimate in ("B4b", "B4c") and alpha <= 0:
        raise ParameterError(f"{estimate} requires alpha > 0")
    if estimate == "B4c" and theta <= 0:
        raise ParameterError("B4c requires theta > 0")

    gen = field_exponent if field_exponent is not None else max(alpha + theta, beta, 0.3)
    ratios = []
    for i in range(n_fields):
        ff = synth_power_law_field(grid, gen, seed=seed * 100003 + 2 * i)
        gfld = synth_power_law_field(grid, gen, seed=seed * 100003 + 2 * i + 1)
        fblocks = lp_blocks(ff)
        gblocks = lp_blocks(gfld)
        t_fg, t_gf, reso = bony(ff, gfld)
        if estimate == "B2a":
            lhs = lp_besov_norm(t_fg, beta, p)
            rhs = lp_norm(ff.values, p1) * lp_besov_norm(gfld, beta, p2, blocks=gblocks)
        elif estimate == "B2b":
            lhs = lp_besov_norm(t_fg, alpha + beta, p)
            rhs = lp_besov_norm(ff, alpha, p1, blocks=fblocks) * lp_besov_norm(
                gfld, beta, p2, blocks=gblocks
            )
        elif estimate == "B3":
            lhs = lp_besov_norm(reso, alpha + beta, p)
            rhs = lp_besov_norm(ff, alpha, p1, blocks=fblocks) * lp_besov_norm(
                gfld, beta, p2, blocks=gblocks
            )
        elif estimate in ("B4a", "B4b"):
            prod = dealiased_product(ff, gfld)
            lhs = lp_besov_norm(prod, alpha, p)
            rhs = lp_besov_norm(ff, alpha, p1, blocks=fblocks) * lp_besov_norm(
                gfld, beta if estimate == "B4a" else alpha, p2, blocks=gblocks
            )
        else:  # B4c: ||f^2||_{B^alpha} <= ||f||_{B^theta} ||f||_{B^{alpha+theta}}
            prod = dealiased_product(ff, ff)
            lhs = lp_besov_norm(prod, alpha, p)
            rhs = lp_besov_norm(ff, theta, p1, blocks=fblocks) * lp_besov_norm(
                ff, alpha + theta, p2, blocks=fblocks
            )
        if rhs > 0:
            ratios.append(lhs / rhs)
    ratios = np.asarray(ratios)
    return ProbeResult(
        estimate=estimate,
        params={"alpha": alpha, "beta": beta, "theta": theta, "p": p, "p1": p1, "p2": p2},
        n_fields=n_fields,
        max_ratio=float(np.max(ratios)),
        mean_ratio=float(np.mean(ratios)),
    )
