import numpy as np
import pytest

from hseuler.errors import InvalidGridError, ParameterError
from hseuler.grid import Grid, ScalarField, fft3, lp_norm
from hseuler.paraproduct import (
    block_profile,
    bony,
    dealiased_product,
    j_max,
    lp_besov_norm,
    lp_blocks,
    partition_residual,
    product_estimate_probe,
    synth_power_law_field,
)

from conftest import random_field


class TestPartition:
    def test_exact_partition_of_unity(self):
        for n in (16, 32, 64):
            assert partition_residual(Grid(n, n, n)) < 1e-12

    def test_profile_support_radii(self):
        r = np.linspace(0, 4, 2000)
        rho = block_profile(0, r)
        assert np.all(rho[r <= 0.75] == 0.0)
        assert np.all(rho[r >= 8 / 3] == 0.0)
        inside = (r > 0.80) & (r < 2.6)
        assert np.all(rho[inside] >= 0)
        assert np.max(rho) <= 1.0

    def test_grid_too_small(self):
        with pytest.raises(InvalidGridError):
            j_max(Grid(8, 8, 8))


class TestBlocks:
    def test_reconstruction_random(self, grid32):
        f = random_field(grid32, seed=80)
        dec = lp_blocks(f)
        rec = dec.reconstruct()
        assert np.max(np.abs(rec.values - f.values)) < 1e-12 * max(f.max_abs(), 1)

    def test_constant_in_lowpass_only(self, grid16):
        f = ScalarField(grid16, np.full(grid16.shape, 3.0))
        dec = lp_blocks(f)
        for j in dec.j_values:
            norm = dec.block_norm(j, 2)
            if j == -1:
                assert np.isclose(norm, 3.0, atol=1e-12)
            else:
                assert norm < 1e-13

    def test_single_mode_spans_two_blocks(self, grid32):
        x, _, _ = grid32.mesh()
        f = ScalarField(grid32, np.cos(2 * np.pi * 4 * x) + np.zeros(grid32.shape))
        dec = lp_blocks(f)
        # |k| = 4 lies in the annuli of j = 1 and j = 2 only
        weights = {}
        for j in dec.j_values:
            peak = dec.block_norm(j, np.inf)
            if peak > 1e-13:
                weights[j] = block_profile(j, 4.0)
        assert set(weights) == {1, 2}
        assert np.isclose(sum(float(w) for w in weights.values()), 1.0, atol=1e-12)

    def test_block_spectrum_inside_annulus(self, grid32):
        f = random_field(grid32, seed=81)
        dec = lp_blocks(f)
        for j in dec.j_values[1:]:
            F = dec.block_spectral(j)
            kx, ky, kz = grid32.wavenumbers()
            kk = np.sqrt(kx**2 + ky**2 + kz**2)
            outside = (kk <= 0.75 * 2.0**j) | (kk >= 8 / 3 * 2.0**j)
            assert np.max(np.abs(F.coeffs[outside])) < 1e-12


class TestBony:
    def test_reconstruction_random(self, grid32):
        f = random_field(grid32, seed=82)
        g = random_field(grid32, seed=83)
        t_fg, t_gf, reso = bony(f, g)
        ref = dealiased_product(f, g)
        total = t_fg.values + t_gf.values + reso.values
        rel = lp_norm(total - ref.values, 2) / max(lp_norm(ref.values, 2), 1e-300)
        assert rel < 1e-10

    def test_constant_g_identity(self, grid32):
        f = random_field(grid32, seed=84)
        one = ScalarField(grid32, np.ones(grid32.shape))
        t_fg, t_gf, reso = bony(f, one)
        total = t_fg.values + t_gf.values + reso.values
        assert np.max(np.abs(total - f.values)) < 1e-10 * max(f.max_abs(), 1)

    def test_low_high_concentrates_in_t_fg(self, grid32):
        x, _, _ = grid32.mesh()
        low = ScalarField(grid32, np.cos(2 * np.pi * x) + np.zeros(grid32.shape))
        # |k| = 8 -> blocks j in {2, 3}; |k| = 1 -> block -1 and 0; gap >= 2
        high = ScalarField(grid32, np.cos(2 * np.pi * 8 * x) + np.zeros(grid32.shape))
        t_fg, t_gf, reso = bony(low, high)
        prod = dealiased_product(low, high)
        scale = lp_norm(prod.values, 2)
        assert lp_norm(t_fg.values - prod.values, 2) < 1e-10 * scale
        assert lp_norm(t_gf.values, 2) < 1e-10 * scale
        assert lp_norm(reso.values, 2) < 1e-10 * scale

    def test_equal_single_mode_is_resonant(self, grid32):
        x, _, _ = grid32.mesh()
        f = ScalarField(grid32, np.cos(2 * np.pi * 3 * x) + np.zeros(grid32.shape))
        t_fg, t_gf, reso = bony(f, f)
        ref = dealiased_product(f, f)
        total = t_fg.values + t_gf.values + reso.values
        assert np.max(np.abs(total - ref.values)) < 1e-10
        # the self-interaction of one mode lives in the resonant part
        assert lp_norm(reso.values, 2) > 0.5 * lp_norm(ref.values, 2)


class TestBesovNorm:
    def test_zero_field(self, grid16):
        f = ScalarField(grid16, np.zeros(grid16.shape))
        assert lp_besov_norm(f, -0.5, 3) == 0.0

    def test_single_mode_one_block_value(self, grid32):
        x, _, _ = grid32.mesh()
        f = ScalarField(grid32, np.cos(2 * np.pi * 4 * x) + np.zeros(grid32.shape))
        s, p = 0.7, 3.0
        got = lp_besov_norm(f, s, p)
        # oracle: the two blocks carry weights rho_j(4), each a pure mode
        mode_lp = lp_norm(np.cos(2 * np.pi * 4 * x) + np.zeros(grid32.shape), p)
        expect = max(
            2.0 ** (j * s) * float(block_profile(j, 4.0)) * mode_lp for j in (1, 2)
        )
        assert np.isclose(got, expect, rtol=1e-10)

    def test_negative_index_scaling(self, grid32):
        f = random_field(grid32, seed=85)
        n1 = lp_besov_norm(f, -0.3, 2)
        f2 = ScalarField(grid32, 2.5 * f.values)
        assert np.isclose(lp_besov_norm(f2, -0.3, 2), 2.5 * n1, rtol=1e-12)


class TestProbes:
    def test_zero_hypothesis_gate(self, grid32):
        with pytest.raises(ParameterError):
            product_estimate_probe(grid32, "B3", alpha=-0.3, beta=0.2)

    def test_bad_holder_triple(self, grid32):
        with pytest.raises(ParameterError):
            product_estimate_probe(grid32, "B4b", p_triple=(3.0, 5.0, 6.0))

    def test_b4b_finite_and_stable(self):
        res32 = product_estimate_probe(
            Grid(32, 32, 32), "B4b", alpha=0.5, p_triple=(3.0, 6.0, 6.0), n_fields=20
        )
        res64 = product_estimate_probe(
            Grid(64, 64, 64), "B4b", alpha=0.5, p_triple=(3.0, 6.0, 6.0), n_fields=20
        )
        assert np.isfinite(res32.max_ratio) and res32.max_ratio > 0
        drift = res64.max_ratio / res32.max_ratio
        assert 0.5 < drift < 2.0

    def test_b4c_finite(self, grid32):
        res = product_estimate_probe(grid32, "B4c", alpha=0.5, theta=0.25, n_fields=10)
        assert np.isfinite(res.max_ratio)
        assert res.to_dict()["estimate"] == "B4c"
