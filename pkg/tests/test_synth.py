import numpy as np
import pytest

from hseuler.errors import ParameterError
from hseuler.grid import Grid
from hseuler.incompress import reconstruct_w
from hseuler.regularity import fit_regularity, structure_function
from hseuler.synth import (
    AnisotropicTarget,
    IsotropicTarget,
    LogHolderTarget,
    SynthSpec,
    synth_pair,
)


@pytest.fixture(scope="module")
def grid64():
    return Grid(64, 64, 64)


class TestSpecValidation:
    def test_isotropic_range(self):
        with pytest.raises(ParameterError):
            SynthSpec(IsotropicTarget(1.5))
        with pytest.raises(ParameterError):
            SynthSpec(IsotropicTarget(0.0))

    def test_anisotropic_range(self):
        with pytest.raises(ParameterError):
            SynthSpec(AnisotropicTarget(1.2, 0.5))
        SynthSpec(AnisotropicTarget(0.45, 1.2))  # horizontal may exceed 1

    def test_log_holder_range(self):
        with pytest.raises(ParameterError):
            SynthSpec(LogHolderTarget(1.0))


class TestSynthPair:
    def test_self_measurement_within_tolerance(self, grid64):
        u, v, rep = synth_pair(SynthSpec(IsotropicTarget(0.6), seed=3), grid64,
                               measure_w=False)
        assert abs(rep.alpha_iso.exponent - 0.6) <= 0.05

    def test_deterministic(self, grid64):
        u1, v1, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=11), grid64,
                               measure_w=False)
        u2, v2, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=11), grid64,
                               measure_w=False)
        assert np.array_equal(u1.values, u2.values)
        assert np.array_equal(v1.values, v2.values)

    def test_compatibility_enforced(self, grid64):
        u, v, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=4), grid64,
                             measure_w=False)
        w, cr = reconstruct_w(u, v)
        assert cr.compat_l2 < 1e-12
        assert cr.w_boundary_max < 1e-10
        assert cr.div_l2 < 1e-10

    def test_even_parity(self, grid64):
        u, v, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=5), grid64,
                             measure_w=False)
        idx = (-np.arange(grid64.nz)) % grid64.nz
        for f in (u, v):
            assert np.max(np.abs(f.values - f.values[:, :, idx])) < 1e-12 * f.max_abs()
            assert f.z_parity == "even"

    def test_unit_energy(self, grid64):
        u, v, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=6), grid64,
                             measure_w=False)
        assert np.isclose(np.mean(u.values**2 + v.values**2), 1.0, atol=1e-12)

    def test_band_limited(self, grid64):
        u, _, _ = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=7), grid64,
                             measure_w=False)
        F = np.fft.fftn(u.values) / u.values.size
        kx, ky, kz = grid64.wavenumbers()
        kk = np.sqrt(kx**2 + ky**2 + kz**2)
        assert np.max(np.abs(F[kk > 64 / 3])) < 1e-13

    def test_w_report_included(self, grid64):
        _, _, rep = synth_pair(SynthSpec(IsotropicTarget(0.5), seed=8), grid64)
        assert rep.w_alpha_iso is not None
        assert rep.w_negative_exponent is not None
        assert rep.w_planewise_negative_exponent is not None


class TestAnisotropic:
    def test_split_exponents(self, grid64):
        u, v, rep = synth_pair(SynthSpec(AnisotropicTarget(0.4, 0.8), seed=9), grid64,
                               measure_w=False)
        assert abs(rep.alpha_vertical.exponent - 0.4) <= 0.05
        assert abs(rep.beta_horizontal.exponent - 0.8) <= 0.05
        # vertical and horizontal fits genuinely differ
        assert rep.beta_horizontal.exponent - rep.alpha_vertical.exponent > 0.2
