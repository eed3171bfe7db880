"""Incompressibility: diagnose w from the horizontal flow and audit it.

The vertical velocity is not prognostic; it is pinned by
``w(x, y, z) = -int_0^z (du/dx + dv/dy) dz'`` together with w = 0 on the
z = 0 plane.  A periodic such w exists iff the vertical mean of the
horizontal divergence vanishes; the L2 size of that mean is the
``compat_l2`` defect reported here, and fields with a nonzero defect are
not hydrostatic velocities (downstream criterion checks refuse them).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InsufficientDataError
from .grid import (
    ScalarField,
    SpectralField,
    VectorField,
    _check_same_grid,
    fft3,
    ifft3,
    lp_norm,
    spectral_derivative,
    vertical_antiderivative,
)


@dataclass(frozen=True)
class CompatibilityReport:
    """Constraint diagnostics attached to a reconstructed w."""

    compat_l2: float
    w_boundary_max: float
    div_l2: float

    def to_dict(self) -> dict:
        return asdict(self)


def horizontal_divergence(u: ScalarField, v: ScalarField) -> ScalarField:
    _check_same_grid(u, v)
    du = spectral_derivative(fft3(u), "x")
    dv = spectral_derivative(fft3(v), "y")
    parity = u.z_parity if u.z_parity == v.z_parity else "none"
    return ifft3(SpectralField(u.grid, du.coeffs + dv.coeffs), z_parity=parity)


def reconstruct_w(u: ScalarField, v: ScalarField) -> tuple[ScalarField, CompatibilityReport]:
    """Vertical velocity from (u, v) plus the compatibility diagnostics.

    When the compatibility defect is nonzero the reconstruction proceeds
    on the mean-free part of the divergence; compat_l2 reports the L2 size
    of what was dropped, and div_l2 then stays at that same level instead
    of vanishing.
    """
    div = horizontal_divergence(u, v)
    anti, zmean = vertical_antiderivative(div)
    w = ScalarField(u.grid, -anti.values, anti.z_parity)
    dw = ifft3(spectral_derivative(fft3(w), "z"))
    return w, CompatibilityReport(
        compat_l2=float(np.sqrt(np.mean(zmean**2))),
        w_boundary_max=float(np.max(np.abs(w.values[:, :, 0]))),
        div_l2=lp_norm(div.values + dw.values, 2),
    )


def compatibility_defect(u: ScalarField, v: ScalarField) -> float:
    """L2 norm of the vertical mean of the horizontal divergence."""
    div = horizontal_divergence(u, v)
    return float(np.sqrt(np.mean(np.mean(div.values, axis=2) ** 2)))


@dataclass(frozen=True)
class ResidualSummary:
    """Strong-form L2 residuals of the four field equations on a trajectory."""

    momentum_u: float
    momentum_v: float
    pressure_z: float
    divergence: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_weak_solution_structure(snapshots, times, omega: float,
                                  dealias: bool = True) -> ResidualSummary:
    """Evaluate momentum/pressure/divergence residuals on smooth solver output.

    ``snapshots`` pairs a VectorField with its pressure ScalarField at each
    time.  Time derivatives use centered differences: the 5-point 4th-order
    stencil when five or more equispaced snapshots are available (so the
    finite difference does not mask a 4th-order integrator), else the
    3-point 2nd-order one.  Residuals are maxima over interior times.

    ``dealias`` forms the quadratic fluxes with the solver's strict 2/3
    truncation so that, on solver output, the residual measures pure time
    discretization error; disable it to audit against untruncated fluxes.
    """
    if len(snapshots) < 3:
        raise InsufficientDataError("need at least 3 snapshots for time derivatives")
    if len(snapshots) != len(times):
        raise InsufficientDataError("times and snapshots length mismatch")
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-8):
        raise InsufficientDataError("snapshots must be equispaced in time")
    h = float(dt[0])

    order4 = len(snapshots) >= 5
    lo, hi = (2, len(snapshots) - 2) if order4 else (1, len(snapshots) - 1)
    u_of = lambda j: snapshots[j][0].u.values
    v_of = lambda j: snapshots[j][0].v.values
    res_u = res_v = res_p = res_div = 0.0
    for i in range(lo, hi):
        vf, p = snapshots[i]
        if order4:
            ut = (-u_of(i + 2) + 8 * u_of(i + 1) - 8 * u_of(i - 1) + u_of(i - 2)) / (12 * h)
            vt = (-v_of(i + 2) + 8 * v_of(i + 1) - 8 * v_of(i - 1) + v_of(i - 2)) / (12 * h)
        else:
            ut = (u_of(i + 1) - u_of(i - 1)) / (2 * h)
            vt = (v_of(i + 1) - v_of(i - 1)) / (2 * h)
        nu, nv = _momentum_flux(vf, p, omega, dealias)
        res_u = max(res_u, lp_norm(ut + nu, 2))
        res_v = max(res_v, lp_norm(vt + nv, 2))
        pz = ifft3(spectral_derivative(fft3(p), "z"))
        res_p = max(res_p, lp_norm(pz.values, 2))
        res_div = max(res_div, lp_norm(_full_divergence(vf), 2))
    return ResidualSummary(res_u, res_v, res_p, res_div)


def _momentum_flux(vf: VectorField, p: ScalarField, omega: float,
                   dealias: bool = False):
    """nabla.(a u) -/+ Omega terms + horizontal pressure gradients."""
    u, v, w = (c.values for c in vf.components())
    g = vf.grid
    mask = None
    if dealias:
        kx, ky, kz = g.wavenumbers()
        cut = [(n - 1) // 3 for n in g.shape]
        mask = (np.abs(kx) <= cut[0]) & (np.abs(ky) <= cut[1]) & (np.abs(kz) <= cut[2])
    fluxes = []
    for a in (u, v):
        flux = np.zeros(g.shape)
        for prod, axis in ((a * u, "x"), (a * v, "y"), (a * w, "z")):
            F = fft3(ScalarField(g, prod))
            if mask is not None:
                F = SpectralField(g, F.coeffs * mask)
            flux += ifft3(spectral_derivative(F, axis)).values
        fluxes.append(flux)
    px = ifft3(spectral_derivative(fft3(p), "x")).values
    py = ifft3(spectral_derivative(fft3(p), "y")).values
    return fluxes[0] - omega * v + px, fluxes[1] + omega * u + py


def _full_divergence(vf: VectorField) -> np.ndarray:
    total = np.zeros(vf.grid.shape)
    for comp, axis in zip(vf.components(), ("x", "y", "z")):
        total += ifft3(spectral_derivative(fft3(comp), axis)).values
    return total
