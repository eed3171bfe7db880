import numpy as np
import pytest

from hseuler.errors import InsufficientDataError
from hseuler.grid import ScalarField, VectorField, fft3, ifft3, lp_norm, spectral_derivative
from hseuler.incompress import (
    check_weak_solution_structure,
    compatibility_defect,
    horizontal_divergence,
    reconstruct_w,
)

from conftest import random_field, sine_field


class TestHorizontalDivergence:
    def test_sin_x(self, grid32):
        u = sine_field(grid32, axis=0)
        v = ScalarField(grid32, np.zeros(grid32.shape))
        div = horizontal_divergence(u, v)
        x, _, _ = grid32.mesh()
        assert np.max(np.abs(div.values - 2 * np.pi * np.cos(2 * np.pi * x))) < 1e-10

    def test_stream_function_is_divergence_free(self, grid32):
        psi = random_field(grid32, seed=5)
        P = fft3(psi)
        u = ifft3(spectral_derivative(P, "y"))
        v = ScalarField(grid32, -ifft3(spectral_derivative(P, "x")).values)
        div = horizontal_divergence(u, v)
        assert div.max_abs() < 1e-10 * max(u.max_abs(), 1.0)

    def test_constants(self, grid16):
        u = ScalarField(grid16, np.full(grid16.shape, 2.0))
        v = ScalarField(grid16, np.full(grid16.shape, -1.0))
        assert horizontal_divergence(u, v).max_abs() < 1e-14


class TestReconstructW:
    def test_separable_analytic(self, grid32):
        x, _, z = grid32.mesh()
        u = ScalarField(grid32, np.sin(2 * np.pi * x) * np.cos(2 * np.pi * z) + np.zeros(grid32.shape), "even")
        v = ScalarField(grid32, np.zeros(grid32.shape), "even")
        w, rep = reconstruct_w(u, v)
        expected = -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * z) + np.zeros(grid32.shape)
        assert np.max(np.abs(w.values - expected)) < 1e-12
        assert rep.compat_l2 < 1e-12
        assert rep.w_boundary_max < 1e-12
        assert rep.div_l2 < 1e-10
        assert w.z_parity == "odd"

    def test_z_independent_incompatible(self, grid32):
        u = sine_field(grid32, axis=0)
        v = ScalarField(grid32, np.zeros(grid32.shape))
        w, rep = reconstruct_w(u, v)
        div = horizontal_divergence(u, v)
        assert np.isclose(rep.compat_l2, lp_norm(div.values, 2), rtol=1e-10)
        assert w.max_abs() < 1e-12  # mean-free part is empty

    def test_zero(self, grid16):
        z = ScalarField(grid16, np.zeros(grid16.shape))
        w, rep = reconstruct_w(z, z)
        assert w.max_abs() == 0.0
        assert rep.compat_l2 == 0.0
        assert rep.div_l2 == 0.0

    def test_linearity(self, grid32):
        u1 = random_field(grid32, seed=21, z_even=True)
        v1 = random_field(grid32, seed=22, z_even=True)
        u2 = random_field(grid32, seed=23, z_even=True)
        v2 = random_field(grid32, seed=24, z_even=True)
        w1, _ = reconstruct_w(u1, v1)
        w2, _ = reconstruct_w(u2, v2)
        u12 = ScalarField(grid32, 2 * u1.values - 3 * u2.values)
        v12 = ScalarField(grid32, 2 * v1.values - 3 * v2.values)
        w12, _ = reconstruct_w(u12, v12)
        assert np.max(np.abs(w12.values - (2 * w1.values - 3 * w2.values))) < 1e-11


class TestWeakStructure:
    @staticmethod
    def _steady_zero(grid):
        zero = ScalarField(grid, np.zeros(grid.shape))
        vf = VectorField(zero, zero, zero)
        return [(vf, zero)] * 5, np.linspace(0.0, 0.4, 5)

    def test_steady_zero(self, grid16):
        snaps, times = self._steady_zero(grid16)
        res = check_weak_solution_structure(snaps, times, omega=1.0)
        assert res.momentum_u == 0.0
        assert res.momentum_v == 0.0
        assert res.pressure_z == 0.0
        assert res.divergence == 0.0

    def test_pressure_z_residual_measured(self, grid16):
        zero = ScalarField(grid16, np.zeros(grid16.shape))
        vf = VectorField(zero, zero, zero)
        _, _, z = grid16.mesh()
        p = ScalarField(grid16, np.sin(2 * np.pi * z) + np.zeros(grid16.shape))
        snaps = [(vf, p)] * 5
        res = check_weak_solution_structure(snaps, np.linspace(0, 1, 5), omega=0.0)
        dz = ifft3(spectral_derivative(fft3(p), "z"))
        assert np.isclose(res.pressure_z, lp_norm(dz.values, 2), rtol=1e-10)

    def test_too_few_snapshots(self, grid16):
        zero = ScalarField(grid16, np.zeros(grid16.shape))
        vf = VectorField(zero, zero, zero)
        with pytest.raises(InsufficientDataError):
            check_weak_solution_structure([(vf, zero)] * 2, [0.0, 0.1], omega=0.0)


def test_compatibility_defect_matches_report(grid32):
    u = random_field(grid32, seed=31, z_even=True)
    v = random_field(grid32, seed=32, z_even=True)
    _, rep = reconstruct_w(u, v)
    assert np.isclose(compatibility_defect(u, v), rep.compat_l2, atol=1e-14)
