"""Regularity measurement: structure functions, Besov and log-Holder
seminorms, anisotropic norms, negative-index norms, and exponent fits.

All difference-quotient quantities are evaluated on a fixed offset
lattice: 24 log-spaced magnitudes from twice the grid spacing up to 1/4,
times 13 directions (3 axes, 6 face diagonals, 4 body diagonals, padded
to unit length).  Magnitudes are snapped to the nearest grid-aligned step
of their direction so every increment is an exact circular shift; this
keeps sup-type estimators free of interpolation ringing at the price of
magnitudes sitting within half a step of their log-spaced targets.

L^p means over x may be evaluated on a strided sublattice on large grids
(>= 192 per axis); sup-norm (p = inf) estimators always scan every point.

Exponent fits are log-log least squares over a chosen range of
separations; "inertial" restricts to the middle half (in log r) to avoid
grid-scale and box-scale contamination.  The integral-form (q < infinity)
Besov seminorm of the difference-quotient definition is not implemented:
no conservation criterion uses it.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import Grid, ScalarField
from .mollify import fit_loglog
from .paraproduct import LPDecomposition, block_profile, j_max, lp_blocks

_AXES = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
_FACE = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]
_BODY = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]

DIRECTION_CLASSES = {
    "isotropic": _AXES + _FACE + _BODY,
    "horizontal": [(1, 0, 0), (0, 1, 0), (1, 1, 0), (1, -1, 0)],
    "vertical": [(0, 0, 1)],
}


def offset_lattice(grid: Grid, directions="isotropic", n_mag: int = 24,
                   r_max: float = 0.25):
    """Grid-aligned offsets per direction: list of (pattern, steps, seps).

    ``pattern`` is the integer direction (entries in -1/0/1); ``steps``
    are integer multiples of its elementary grid step and ``seps`` the
    corresponding |xi| values, snapped from the 24 log-spaced targets.
    """
    if isinstance(directions, str):
        dirs = DIRECTION_CLASSES[directions]
    else:
        dirs = list(directions)
    r_min = 2.0 * grid.max_spacing
    targets = np.geomspace(r_min, r_max, n_mag)
    out = []
    for d in dirs:
        step_vec = np.array([d[0] / grid.nx, d[1] / grid.ny, d[2] / grid.nz])
        step_len = float(np.linalg.norm(step_vec))
        m_min = max(1, int(np.ceil(r_min / step_len - 1e-9)))
        steps = np.unique(np.clip(np.round(targets / step_len).astype(int), m_min, None))
        steps = steps[steps * step_len <= r_max * (1 + 1e-12)]
        out.append((tuple(int(c) for c in d), steps, steps * step_len))
    return out


def _stride_for(grid: Grid) -> int:
    return 2 if min(grid.shape) >= 192 else 1


def _increment_norms(values: np.ndarray, d, steps, p: float, order: int,
                     stride: int = 1) -> np.ndarray:
    """||Delta^order_(m * step) f||_p for every m in steps (circular shifts)."""
    out = np.empty(len(steps))
    if stride == 1:
        for i, m in enumerate(steps):
            sh = tuple(-int(m) * c for c in d)
            delta = np.roll(values, sh, axis=(0, 1, 2)) - values
            for _ in range(order - 1):
                delta = np.roll(delta, sh, axis=(0, 1, 2)) - delta
            out[i] = _lp(delta, p)
    else:
        nx, ny, nz = values.shape
        bx = np.arange(0, nx, stride)
        by = np.arange(0, ny, stride)
        bz = np.arange(0, nz, stride)
        for i, m in enumerate(steps):
            sh = np.asarray(d) * int(m)
            sample = values[np.ix_(bx, by, bz)]
            terms = [sample]
            for k in range(1, order + 1):
                idx = np.ix_((bx + k * sh[0]) % nx, (by + k * sh[1]) % ny,
                             (bz + k * sh[2]) % nz)
                terms.append(values[idx])
            if order == 1:
                delta = terms[1] - terms[0]
            else:
                delta = terms[2] - 2 * terms[1] + terms[0]
            out[i] = _lp(delta, p)
    return out


def _lp(a: np.ndarray, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(a)))
    return float(np.mean(np.abs(a) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class StructureFunction:
    """Increment L^p norms over the offset lattice, split by direction."""

    p: float
    order: int
    direction_class: str
    directions: tuple       # unit vectors
    separations: tuple      # one array of |xi| per direction
    values: tuple           # one array of norms per direction

    def pairs(self):
        """All (separation, value) points across directions."""
        seps = np.concatenate(self.separations)
        vals = np.concatenate(self.values)
        order = np.argsort(seps)
        return seps[order], vals[order]

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf)
        w.writerow(["direction", "separation", "value"])
        for d, seps, vals in zip(self.directions, self.separations, self.values):
            name = ",".join(f"{c:+.4f}" for c in d)
            for r, v in zip(seps, vals):
                w.writerow([name, f"{r:.10g}", f"{v:.10g}"])
        return buf.getvalue()


def structure_function(f: ScalarField, p: float = 3, directions="isotropic",
                       order: int = 1, n_mag: int = 24) -> StructureFunction:
    if order not in (1, 2):
        raise ParameterError("difference order must be 1 or 2")
    lattice = offset_lattice(f.grid, directions, n_mag=n_mag)
    stride = _stride_for(f.grid) if p != np.inf else 1
    dirs, seps, vals = [], [], []
    for pattern, steps, sep in lattice:
        norms = _increment_norms(f.values, pattern, steps, p, order, stride)
        unit = np.asarray(pattern, float) / np.linalg.norm(pattern)
        dirs.append(tuple(unit))
        seps.append(sep)
        vals.append(norms)
    name = directions if isinstance(directions, str) else "custom"
    return StructureFunction(p, order, name, tuple(dirs), tuple(seps), tuple(vals))


@dataclass(frozen=True)
class FitResult:
    """Fitted scaling exponent with a 95% band and rms log-residual."""

    exponent: float
    band: float
    residual: float
    n_points: int
    degenerate: bool = False

    def pessimistic(self, floor: float = 0.0) -> float:
        return self.exponent - max(self.band, floor)

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "band": self.band,
            "residual": self.residual,
            "n_points": self.n_points,
            "degenerate": self.degenerate,
        }


def fit_regularity(sf: StructureFunction, rng: str = "inertial") -> FitResult:
    """Exponent from a log-log fit of the structure function.

    ``rng``: "inertial" (middle half of log-separations), "small" (lower
    half), or "all".
    """
    seps, vals = sf.pairs()
    keep = vals > 0
    if keep.sum() < 4:
        return FitResult(float("nan"), float("nan"), float("nan"), int(keep.sum()), True)
    seps, vals = seps[keep], vals[keep]
    lo, hi = math.log(seps.min()), math.log(seps.max())
    if rng == "inertial":
        a, b = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
    elif rng == "small":
        a, b = lo, lo + 0.5 * (hi - lo)
    elif rng == "all":
        a, b = lo, hi
    else:
        raise ParameterError(f"unknown fit range {rng!r}")
    sel = (np.log(seps) >= a - 1e-12) & (np.log(seps) <= b + 1e-12)
    if sel.sum() < 4:
        sel = np.ones(len(seps), dtype=bool)
    slope, band, resid = fit_loglog(seps[sel], vals[sel])
    return FitResult(float(slope), float(band), float(resid), int(sel.sum()))


def besov_seminorm(f: ScalarField, s: float, p: float) -> float:
    """Difference-quotient B^s_{p,inf} seminorm on the offset lattice.

    Uses increments of order floor(s) + 1 (first order below s = 1,
    second order from there up to 2).
    """
    if not (0 < s < 2):
        raise ParameterError("seminorm order s must lie in (0, 2)")
    order = int(math.floor(s)) + 1
    sf = structure_function(f, p=p, directions="isotropic", order=order)
    seps, vals = sf.pairs()
    return float(np.max(vals / seps**s))


def log_holder_seminorm(f: ScalarField, gamma: float) -> float:
    """sup over the lattice of max_x |df(xi; x)| (1 + log^-|xi|) / |xi|^gamma."""
    if not (0 < gamma < 1):
        raise ParameterError("gamma must lie in (0, 1)")
    sf = structure_function(f, p=np.inf, directions="isotropic", order=1)
    seps, vals = sf.pairs()
    weight = 1.0 + np.maximum(0.0, -np.log(seps))
    return float(np.max(vals * weight / seps**gamma))


def anisotropic_norm(f: ScalarField, alpha: float, beta: float, p: float = 3) -> float:
    """Three-term norm: ||f||_p + vertical/full sup at alpha + horizontal sup at beta.

    The full-offset term uses increments of order floor(alpha) + 1, the
    horizontal term floor(beta) + 1 (the beta range extends to (0, 2) so
    horizontal exponents above 1 remain measurable).
    """
    if not (0 < alpha < 1):
        raise ParameterError("alpha must lie in (0, 1)")
    if not (0 < beta < 2):
        raise ParameterError("beta must lie in (0, 2)")
    base = _lp(f.values, p)
    sf_full = structure_function(f, p=p, directions="isotropic",
                                 order=int(math.floor(alpha)) + 1)
    seps, vals = sf_full.pairs()
    term_full = float(np.max(vals / seps**alpha))
    sf_h = structure_function(f, p=p, directions="horizontal",
                              order=int(math.floor(beta)) + 1)
    seps_h, vals_h = sf_h.pairs()
    term_h = float(np.max(vals_h / seps_h**beta))
    return base + term_full + term_h


def negative_besov_norm(f: ScalarField, s: float, p: float,
                        blocks: LPDecomposition | None = None) -> float:
    """B^{-s}_{p,inf} norm via dyadic blocks: sup_j 2^{-js} ||block_j||_p."""
    if s <= 0:
        raise ParameterError("s must be positive (the norm index is -s)")
    blocks = blocks or lp_blocks(f)
    return float(max(2.0 ** (-j * s) * blocks.block_norm(j, p) for j in blocks.j_values))


def lp_growth_exponent(f: ScalarField, p: float = 3,
                       blocks: LPDecomposition | None = None) -> FitResult:
    """Fitted slope of log2 ||block_j||_p over the upper dyadic shells.

    Positive slope sigma means the field behaves like B^{-sigma}: the
    smallest s with finite B^{-s} norm under refinement.  Clamped use is
    left to callers.
    """
    blocks = blocks or lp_blocks(f)
    js, norms = [], []
    for j in blocks.j_values:
        if j < 1:
            continue
        v = blocks.block_norm(j, p)
        if v > 0:
            js.append(j)
            norms.append(v)
    if len(js) < 3:
        return FitResult(float("nan"), float("nan"), float("nan"), len(js), True)
    js = np.asarray(js, float)
    half = js >= js.min() + 0.5 * (js.max() - js.min())
    if half.sum() < 3:
        half = np.ones(len(js), dtype=bool)
    slope, band, resid = fit_loglog(2.0 ** js[half], np.asarray(norms)[half])
    return FitResult(float(slope), float(band), float(resid), int(half.sum()))


def planewise_negative_norm(f: ScalarField, s: float, p: float = 3) -> float:
    """L^p-in-z quadrature of the 2-D B^{-s}_{p,inf}(T^2) norms per plane."""
    if s <= 0:
        raise ParameterError("s must be positive")
    norms = _planewise_block_norms(f, p)
    per_plane = np.max(
        [2.0 ** (-j * s) * n for j, n in norms.items()], axis=0
    )
    return float(np.mean(per_plane**p) ** (1.0 / p))


def planewise_growth_exponent(f: ScalarField, p: float = 3) -> FitResult:
    """Dyadic growth slope of the plane-wise 2-D blocks (z-quadratured)."""
    norms = _planewise_block_norms(f, p)
    js, agg = [], []
    for j, per_plane in sorted(norms.items()):
        if j < 1:
            continue
        v = float(np.mean(per_plane**p) ** (1.0 / p))
        if v > 0:
            js.append(j)
            agg.append(v)
    if len(js) < 3:
        return FitResult(float("nan"), float("nan"), float("nan"), len(js), True)
    js = np.asarray(js, float)
    half = js >= js.min() + 0.5 * (js.max() - js.min())
    if half.sum() < 3:
        half = np.ones(len(js), dtype=bool)
    slope, band, resid = fit_loglog(2.0 ** js[half], np.asarray(agg)[half])
    return FitResult(float(slope), float(band), float(resid), int(half.sum()))


def _planewise_block_norms(f: ScalarField, p: float) -> dict:
    """||Delta_j^{2D} f(., ., z)||_{L^p(T^2)} arrays (one entry per plane)."""
    from . import _fft

    grid = f.grid
    kx, ky, _ = _fft.rfft_wavenumbers(grid.shape)
    kh = np.sqrt(kx**2 + ky**2)
    J = j_max(grid)
    spec = _fft.rfftn(f.values)
    out = {}
    for j in range(-1, J + 1):
        block = _fft.irfftn(spec * block_profile(j, kh), grid.shape)
        out[j] = np.mean(np.abs(block) ** p, axis=(0, 1)) ** (1.0 / p)
    return out


# ---------------------------------------------------------------------------
# the one-stop measurement used by synth and the CLI


@dataclass(frozen=True)
class RegularityReport:
    """Everything the criterion engine consumes, JSON-serializable."""

    p: float
    alpha_iso: FitResult
    beta_horizontal: FitResult | None = None
    alpha_vertical: FitResult | None = None
    alpha_iso_order2: FitResult | None = None
    besov_seminorms: dict = field(default_factory=dict)
    log_holder_gamma_half: float | None = None
    negative_besov: dict = field(default_factory=dict)
    w_alpha_iso: FitResult | None = None
    w_negative_exponent: FitResult | None = None
    w_planewise_negative_exponent: FitResult | None = None

    def to_dict(self) -> dict:
        enc = lambda x: x.to_dict() if isinstance(x, FitResult) else x
        return {
            "p": self.p,
            "alpha_iso": enc(self.alpha_iso),
            "beta_horizontal": enc(self.beta_horizontal),
            "alpha_vertical": enc(self.alpha_vertical),
            "alpha_iso_order2": enc(self.alpha_iso_order2),
            "besov_seminorms": {f"{s},{p}": v for (s, p), v in self.besov_seminorms.items()},
            "log_holder_gamma_half": self.log_holder_gamma_half,
            "negative_besov": {f"{s},{p}": v for (s, p), v in self.negative_besov.items()},
            "w_alpha_iso": enc(self.w_alpha_iso),
            "w_negative_exponent": enc(self.w_negative_exponent),
            "w_planewise_negative_exponent": enc(self.w_planewise_negative_exponent),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _joint_fit(fields, p, directions, order, rng="inertial") -> FitResult:
    sfs = [structure_function(f, p=p, directions=directions, order=order) for f in fields]
    seps = np.concatenate([np.concatenate(sf.separations) for sf in sfs])
    vals = np.concatenate([np.concatenate(sf.values) for sf in sfs])
    merged = StructureFunction(p, order, "joint", ((1, 0, 0),), (seps,), (vals,))
    return fit_regularity(merged, rng=rng)


def measure_regularity(
    u: ScalarField,
    v: ScalarField | None = None,
    w: ScalarField | None = None,
    p: float = 3,
    anisotropic: bool = True,
    log_holder: bool = False,
    seminorms=(),
    negative=(),
    horizontal_order: int | None = None,
) -> RegularityReport:
    """Measure the exponents and norms the criterion engine needs.

    By default the horizontal fit auto-escalates to second-order
    increments when the first-order slope saturates near the Lipschitz cap
    (so exponents in (1, 2) stay measurable); pass ``horizontal_order`` to
    pin it.  The isotropic second-order fit is always included since the
    Sobolev-type criteria need it.
    """
    fields = [u] if v is None else [u, v]
    alpha_iso = _joint_fit(fields, p, "isotropic", 1)
    alpha_iso2 = _joint_fit(fields, p, "isotropic", 2)
    beta_h = alpha_v = None
    if anisotropic:
        if horizontal_order is None:
            beta_h = _joint_fit(fields, p, "horizontal", 1)
            if beta_h.exponent > 0.9:
                beta_h = _joint_fit(fields, p, "horizontal", 2)
        else:
            beta_h = _joint_fit(fields, p, "horizontal", horizontal_order)
        alpha_v = _joint_fit(fields, p, "vertical", 1)
    log_val = log_holder_seminorm(u, 0.5) if log_holder else None
    semis = {(s, pp): max(besov_seminorm(f, s, pp) for f in fields) for (s, pp) in seminorms}
    w_alpha = w_neg = w_plane = None
    negs = {}
    if w is not None:
        w_alpha = _joint_fit([w], p, "isotropic", 1)
        blocks = lp_blocks(w)
        w_neg = lp_growth_exponent(w, p, blocks=blocks)
        w_plane = planewise_growth_exponent(w, p)
        negs = {(s, pp): negative_besov_norm(w, s, pp, blocks=blocks) for (s, pp) in negative}
    return RegularityReport(
        p=p,
        alpha_iso=alpha_iso,
        beta_horizontal=beta_h,
        alpha_vertical=alpha_v,
        alpha_iso_order2=alpha_iso2,
        besov_seminorms=semis,
        log_holder_gamma_half=log_val,
        negative_besov=negs,
        w_alpha_iso=w_alpha,
        w_negative_exponent=w_neg,
        w_planewise_negative_exponent=w_plane,
    )
