import numpy as np
import pytest

from hseuler.errors import ParameterError
from hseuler.grid import Grid, ScalarField
from hseuler.paraproduct import lp_blocks
from hseuler.regularity import (
    anisotropic_norm,
    besov_seminorm,
    fit_regularity,
    log_holder_seminorm,
    lp_growth_exponent,
    measure_regularity,
    negative_besov_norm,
    offset_lattice,
    planewise_growth_exponent,
    structure_function,
)

from conftest import random_field, sine_field


def marked_point_field(grid, damped, x0=(0.5, 0.5, 0.5)):
    """|rho|^(1/2) profile around x0, optionally log-damped."""
    x, y, z = grid.mesh()

    def pdist(a, b):
        d = np.abs(a - b)
        return np.minimum(d, 1.0 - d)

    rho = np.sqrt(pdist(x, x0[0]) ** 2 + pdist(y, x0[1]) ** 2 + pdist(z, x0[2]) ** 2)
    vals = np.sqrt(rho)
    if damped:
        vals = vals / (1.0 + np.maximum(0.0, -np.log(np.maximum(rho, 1e-300))))
    return ScalarField(grid, vals)


class TestLattice:
    def test_thirteen_directions(self, grid32):
        lat = offset_lattice(grid32, "isotropic")
        assert len(lat) == 13
        assert len(offset_lattice(grid32, "horizontal")) == 4
        assert len(offset_lattice(grid32, "vertical")) == 1

    def test_magnitude_range(self, grid32):
        for pattern, steps, seps in offset_lattice(grid32, "isotropic"):
            assert seps.min() >= 2 / 32 - 1e-12
            assert seps.max() <= 0.25 + 1e-12
            # grid-aligned: every separation is an integer multiple of the step
            step = np.linalg.norm(np.asarray(pattern) / 32)
            assert np.allclose(seps / step, np.round(seps / step))


class TestStructureFunction:
    def test_sine_small_half_slope(self):
        g = Grid(64, 64, 64)
        f = sine_field(g, axis=0)
        sf = structure_function(f, p=3, directions=[(1, 0, 0)])
        fit = fit_regularity(sf, rng="small")
        assert abs(fit.exponent - 1.0) <= 0.05

    def test_axis_permutation_invariance(self):
        g = Grid(32, 32, 32)
        f = sine_field(g, axis=0)
        fx = fit_regularity(structure_function(f, p=3, directions=[(1, 0, 0)]), "small")
        swapped = ScalarField(g, f.values.transpose(2, 0, 1))  # variation now along y
        fy = fit_regularity(structure_function(swapped, p=3, directions=[(0, 1, 0)]), "small")
        assert np.isclose(fx.exponent, fy.exponent, atol=1e-10)

    def test_white_noise_flat(self):
        g = Grid(64, 64, 64)
        rng = np.random.default_rng(1)
        f = ScalarField(g, rng.standard_normal(g.shape))
        fit = fit_regularity(structure_function(f, p=3))
        assert abs(fit.exponent) <= 0.05

    def test_vertical_mode_has_no_horizontal_signal(self, grid32):
        f = sine_field(grid32, axis=2)
        sf = structure_function(f, p=3, directions="horizontal")
        _, vals = sf.pairs()
        assert np.max(vals) < 1e-12

    def test_values_shrink_to_zero_separation(self):
        g = Grid(64, 64, 64)
        f = random_field(g, seed=90, kmax=2)
        sf = structure_function(f, p=3)
        seps, vals = sf.pairs()
        # smallest separations carry the smallest increments for smooth f
        assert vals[np.argmin(seps)] < 0.4 * np.max(vals)

    def test_degenerate_fit_flagged(self, grid16):
        f = ScalarField(grid16, np.full(grid16.shape, 2.0))
        fit = fit_regularity(structure_function(f, p=3))
        assert fit.degenerate

    def test_csv_roundtrip_header(self, grid16):
        f = random_field(grid16, seed=91)
        text = structure_function(f, p=2).to_csv()
        assert text.splitlines()[0] == "direction,separation,value"


class TestBesovSeminorm:
    def test_constant_zero(self, grid16):
        f = ScalarField(grid16, np.full(grid16.shape, 5.0))
        assert besov_seminorm(f, 0.5, 3) == 0.0

    def test_sine_closed_form(self):
        g = Grid(64, 64, 64)
        f = sine_field(g, axis=0)
        got = besov_seminorm(f, 0.5, 3)
        best = 0.0
        for pattern, steps, seps in offset_lattice(g, "isotropic"):
            h1 = steps * pattern[0] / 64
            vals = 2 * np.abs(np.sin(np.pi * h1)) * (4 / (3 * np.pi)) ** (1 / 3)
            best = max(best, float(np.max(vals / seps**0.5)))
        assert np.isclose(got, best, rtol=1e-5)

    def test_monotone_in_s(self, grid32):
        f = random_field(grid32, seed=92)
        values = [besov_seminorm(f, s, 3) for s in (0.2, 0.4, 0.6, 0.8)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(values, values[1:]))

    def test_linear_scaling(self, grid32):
        f = random_field(grid32, seed=93)
        n1 = besov_seminorm(f, 0.5, 4)
        f3 = ScalarField(grid32, -3.0 * f.values)
        assert np.isclose(besov_seminorm(f3, 0.5, 4), 3.0 * n1, rtol=1e-12)

    def test_second_order_for_s_above_one(self, grid32):
        f = random_field(grid32, seed=94, kmax=4)
        v = besov_seminorm(f, 1.5, 3)
        assert np.isfinite(v) and v > 0
        with pytest.raises(ParameterError):
            besov_seminorm(f, 2.3, 3)


class TestLogHolder:
    def test_constant_zero(self, grid16):
        f = ScalarField(grid16, np.full(grid16.shape, 1.0))
        assert log_holder_seminorm(f, 0.5) == 0.0

    def test_damped_profile_refinement_stable(self):
        vals = {}
        for n in (32, 64):
            f = marked_point_field(Grid(n, n, n), damped=True)
            vals[n] = log_holder_seminorm(f, 0.5)
        assert vals[64] < 2.0 * vals[32]

    def test_bare_profile_grows_like_log(self):
        vals = {}
        for n in (32, 64, 128):
            f = marked_point_field(Grid(n, n, n), damped=False)
            vals[n] = log_holder_seminorm(f, 0.5)
        # closed form: sup at the cusp, ratio 1 at |xi| = 2h, weight 1 - log(2h)
        for n in (32, 64, 128):
            assert np.isclose(vals[n], 1 + np.log(n / 2), rtol=0.05)


class TestAnisotropicNorm:
    def test_zero(self, grid16):
        f = ScalarField(grid16, np.zeros(grid16.shape))
        assert anisotropic_norm(f, 0.4, 0.7) == 0.0

    def test_vertical_mode_has_no_horizontal_term(self, grid32):
        f = sine_field(grid32, axis=2)
        total = anisotropic_norm(f, 0.4, 0.7, p=3)
        sf_h = structure_function(f, p=3, directions="horizontal")
        _, vals = sf_h.pairs()
        assert np.max(vals) < 1e-12
        from hseuler.regularity import _lp

        assert total > _lp(f.values, 3)  # vertical/full term contributes

    def test_parameter_gates(self, grid16):
        f = random_field(grid16, seed=95)
        with pytest.raises(ParameterError):
            anisotropic_norm(f, 1.2, 0.5)
        with pytest.raises(ParameterError):
            anisotropic_norm(f, 0.5, 2.5)


class TestNegativeBesov:
    def test_zero_field(self, grid16):
        f = ScalarField(grid16, np.zeros(grid16.shape))
        assert negative_besov_norm(f, 0.5, 3) == 0.0

    def test_single_mode_oracle(self, grid32):
        x, _, _ = grid32.mesh()
        f = ScalarField(grid32, np.cos(2 * np.pi * 4 * x) + np.zeros(grid32.shape))
        s, p = 0.4, 3
        got = negative_besov_norm(f, s, p)
        from hseuler.grid import lp_norm
        from hseuler.paraproduct import block_profile

        mode_lp = lp_norm(f.values, p)
        expect = max(
            2.0 ** (-j * s) * float(block_profile(j, 4.0)) * mode_lp for j in (1, 2)
        )
        assert np.isclose(got, expect, rtol=1e-10)

    def test_growth_exponent_sign_convention(self, grid32):
        smooth = random_field(grid32, seed=96, kmax=3)
        fit = lp_growth_exponent(smooth, 3)
        assert fit.exponent < 0  # decaying blocks: positive regularity

    def test_planewise_matches_3d_for_z_constant(self, grid32):
        rng = np.random.default_rng(9)
        v2d = rng.standard_normal((32, 32))
        f = ScalarField(grid32, np.broadcast_to(v2d[:, :, None], grid32.shape).copy())
        fit = planewise_growth_exponent(f, 3)
        assert np.isfinite(fit.exponent)


def test_measure_regularity_shapes(grid32):
    u = random_field(grid32, seed=97, z_even=True)
    v = random_field(grid32, seed=98, z_even=True)
    rep = measure_regularity(u, v, p=3, seminorms=((0.5, 3),), log_holder=True)
    assert rep.alpha_iso.exponent is not None
    assert rep.beta_horizontal is not None
    assert rep.alpha_vertical is not None
    assert (0.5, 3) in rep.besov_seminorms
    assert rep.log_holder_gamma_half is not None
    blob = rep.to_json()
    assert "alpha_iso" in blob
