"""Short-time pseudo-spectral integrator for the rotating hydrostatic
momentum equations with diagnostic w and projection-based pressure.

The equations are ill-posed in Sobolev spaces, so this is deliberately a
short-horizon, band-limited instrument with blow-up detection, not a
claim of converged inviscid dynamics.  The state is the pair of
horizontal velocity spectra, dealiased with the 2/3 rule; w is diagnosed
spectrally each stage and the surface pressure is obtained by projecting
the vertically averaged momentum tendency onto the constraint
d/dt int_0^1 (du/dx + dv/dy) dz = 0.  At Omega = 0 that projection
reproduces the quadratic-stress Poisson pressure exactly (an acceptance
check); at Omega != 0 it adds the Coriolis correction
Omega (d vbar/dx - d ubar/dy) to the Poisson source.

Time stepping is classical fixed-step RK4 (no adaptivity, for
reproducibility).  With band-limited fields and dealiased products the
semi-discrete system conserves the horizontal energy identically, so any
measured drift is time-integration error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fft
from .errors import BlowUpError, ConstraintError, ParameterError
from .grid import Grid, ScalarField, VectorField
from .pressure import PressureField

CFL_SAFETY = 0.5


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    omega: float = 0.0
    nu: float = 0.0
    hyper_order: int = 1
    dt: float = 1e-3
    t_end: float = 0.25
    snapshot_stride: int = 10
    dealias: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        if self.t_end <= 0:
            raise ParameterError("t_end must be positive")
        if self.nu < 0:
            raise ParameterError("viscosity must be >= 0")
        if self.hyper_order < 1:
            raise ParameterError("hyper_order must be >= 1")
        if self.snapshot_stride < 1:
            raise ParameterError("snapshot_stride must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list          # (VectorField, PressureField) pairs
    energy_series: np.ndarray
    config: SolverConfig
    blown_up: bool = False

    def max_energy_drift(self) -> float:
        e0 = self.energy_series[0]
        return float(np.max(np.abs(self.energy_series - e0)) / abs(e0))


class _Workspace:
    """Wavenumber tables in rfft layout for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        shape = grid.shape
        kx, ky, kz = _fft.rfft_wavenumbers(shape)
        self.dx = 2j * np.pi * kx
        self.dy = 2j * np.pi * ky
        self.dz = 2j * np.pi * kz
        self.kz = kz
        # strictly-stable 2/3 cutoff: floor((n-1)/3) keeps every aliased
        # pair product outside the band even when 3 divides n, which makes
        # the dealiased quadratic terms exactly energy-neutral
        cut = [(n - 1) // 3 for n in shape]
        self.mask = (
            (np.abs(kx) <= cut[0]) & (np.abs(ky) <= cut[1]) & (kz <= cut[2])
        )
        kh2 = (2 * np.pi) ** 2 * (kx**2 + ky**2)
        self.kh2_plane = kh2[:, :, 0].copy()
        self.kh2_plane[0, 0] = np.inf
        self.k2 = (2 * np.pi) ** 2 * (kx**2 + ky**2 + kz**2)
        kz_safe = kz.copy()
        kz_safe[kz_safe == 0] = 1.0
        self.inv_dz = np.where(kz > 0, 1.0, 0.0) / (2j * np.pi * kz_safe)
        self.inv_dz[:, :, shape[2] // 2] = 0.0  # z-Nyquist zeroed, as in grid ops


def _diagnose_w_hat(u_hat, v_hat, ws: _Workspace, tol: float = 1e-8):
    """Spectral w from the constraint; raises if the vertical-mean
    divergence does not vanish."""
    div = ws.dx * u_hat + ws.dy * v_hat
    scale = max(np.max(np.abs(u_hat)), np.max(np.abs(v_hat)), 1e-300)
    if np.max(np.abs(div[:, :, 0])) > tol * scale:
        raise ConstraintError("state violates the vertical-mean divergence constraint")
    w_hat = -div * ws.inv_dz
    # w(z = 0) = 0 gauge: remove the z = 0 trace through the k_z = 0 plane
    w0 = _fft.irfftn(w_hat, ws.grid.shape)[:, :, 0]
    w_hat = w_hat.copy()
    w_hat[:, :, 0] -= np.fft.fft2(w0) * ws.grid.nz
    return w_hat


def rhs(u_hat, v_hat, ws: _Workspace, omega: float, nu: float = 0.0,
        hyper_order: int = 1, dealias_products: bool = True):
    """Tendencies of the horizontal velocity spectra plus the diagnosed
    (w_hat, p_hat_2d) pair."""
    shape = ws.grid.shape
    w_hat = _diagnose_w_hat(u_hat, v_hat, ws)
    u = _fft.irfftn(u_hat, shape)
    v = _fft.irfftn(v_hat, shape)
    w = _fft.irfftn(w_hat, shape)

    def flux_hat(a):
        fx = _fft.rfftn(a * u)
        fy = _fft.rfftn(a * v)
        fz = _fft.rfftn(a * w)
        if dealias_products:
            fx, fy, fz = fx * ws.mask, fy * ws.mask, fz * ws.mask
        return ws.dx * fx + ws.dy * fy + ws.dz * fz

    n_u = -flux_hat(u) + omega * v_hat
    n_v = -flux_hat(v) - omega * u_hat
    if nu > 0:
        damp = -nu * ws.k2**hyper_order
        n_u = n_u + damp * u_hat
        n_v = n_v + damp * v_hat

    # pressure from the vertically averaged tendency (k_z = 0 plane):
    # Lap_H p = div_H(Nbar), i.e. -(2 pi |k_H|)^2 p_hat = (ik.N)_hat
    p_hat = -(ws.dx[:, :, 0] * n_u[:, :, 0] + ws.dy[:, :, 0] * n_v[:, :, 0]) / ws.kh2_plane
    n_u = n_u.copy()
    n_v = n_v.copy()
    n_u[:, :, 0] -= ws.dx[:, :, 0] * p_hat
    n_v[:, :, 0] -= ws.dy[:, :, 0] * p_hat
    return n_u, n_v, w_hat, p_hat


def step(u_hat, v_hat, ws: _Workspace, config: SolverConfig):
    """One classical RK4 step on the spectral state."""
    dt = config.dt
    args = (ws, config.omega, config.nu, config.hyper_order, config.dealias)
    k1u, k1v, _, _ = rhs(u_hat, v_hat, *args)
    k2u, k2v, _, _ = rhs(u_hat + 0.5 * dt * k1u, v_hat + 0.5 * dt * k1v, *args)
    k3u, k3v, _, _ = rhs(u_hat + 0.5 * dt * k2u, v_hat + 0.5 * dt * k2v, *args)
    k4u, k4v, _, _ = rhs(u_hat + dt * k3u, v_hat + dt * k3v, *args)
    u_new = u_hat + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    v_new = v_hat + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise BlowUpError("non-finite state", time=None)
    return u_new, v_new


def _snapshot(u_hat, v_hat, ws: _Workspace, omega: float) -> tuple[VectorField, PressureField]:
    grid = ws.grid
    w_hat = _diagnose_w_hat(u_hat, v_hat, ws)
    u = ScalarField(grid, _fft.irfftn(u_hat, grid.shape), "even")
    v = ScalarField(grid, _fft.irfftn(v_hat, grid.shape), "even")
    w_vals = _fft.irfftn(w_hat, grid.shape)
    w_vals[:, :, 0] = 0.0  # exact boundary gauge against round-off
    w = ScalarField(grid, w_vals, "odd")
    # pressure as the dynamics see it (includes the Coriolis correction)
    _, _, _, p_hat = rhs(u_hat, v_hat, ws, omega=omega)
    p2d = np.fft.ifft2(p_hat).real / grid.nz
    p = PressureField(ScalarField(grid, np.broadcast_to(p2d[:, :, None], grid.shape).copy(), "even"))
    return VectorField(u, v, w), p


def horizontal_energy_values(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.mean(u * u + v * v))


def run(config: SolverConfig, initial: VectorField) -> Trajectory:
    """Integrate to t_end, snapshotting every ``snapshot_stride`` steps.

    Raises BlowUpError carrying the partial trajectory if the state goes
    non-finite; the CFL bound is checked once against the initial data.
    """
    ws = _Workspace(config.grid)
    u_hat = _fft.rfftn(initial.u.values)
    v_hat = _fft.rfftn(initial.v.values)
    if config.dealias:
        u_hat *= ws.mask
        v_hat *= ws.mask
    umax = max(
        np.max(np.abs(initial.u.values)),
        np.max(np.abs(initial.v.values)),
        np.max(np.abs(initial.w.values)),
    )
    if umax > 0 and config.dt > CFL_SAFETY * config.grid.max_spacing / umax:
        raise ParameterError(
            f"dt={config.dt} violates the CFL bound "
            f"{CFL_SAFETY * config.grid.max_spacing / umax:.3e}"
        )

    n_steps = int(round(config.t_end / config.dt))
    times = [0.0]
    snaps = [_snapshot(u_hat, v_hat, ws, config.omega)]
    energies = [horizontal_energy_values(snaps[0][0].u.values, snaps[0][0].v.values)]
    t = 0.0
    for istep in range(1, n_steps + 1):
        try:
            u_hat, v_hat = step(u_hat, v_hat, ws, config)
        except BlowUpError:
            traj = Trajectory(np.asarray(times), snaps, np.asarray(energies), config, True)
            raise BlowUpError(f"blow-up at t={t + config.dt:.6f}", time=t + config.dt,
                              trajectory=traj) from None
        t = istep * config.dt
        if istep % config.snapshot_stride == 0 or istep == n_steps:
            vf, p = _snapshot(u_hat, v_hat, ws, config.omega)
            times.append(t)
            snaps.append((vf, p))
            energies.append(horizontal_energy_values(vf.u.values, vf.v.values))
    return Trajectory(np.asarray(times), snaps, np.asarray(energies), config)
