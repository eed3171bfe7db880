import numpy as np
import pytest

from hseuler.balance import (
    CRITERIA,
    SpaceTimeTestFunction,
    TimeBump,
    balance_residual,
    balance_residual_sweep,
    criterion_engine,
    default_test_function,
    horizontal_energy,
    verdicts_to_csv,
)
from hseuler.errors import IncompleteInputError, ParameterError
from hseuler.grid import Grid, ScalarField
from hseuler.mollify import DefectSweep, Mollifier
from hseuler.regularity import FitResult, RegularityReport
from hseuler.solver import SolverConfig, run
from hseuler.synth import synth_smooth

from conftest import sine_field


def fake_report(alpha=0.6, beta=None, alpha_v=None, order2=None, w_alpha=None,
                w_neg=None, w_plane=None, band=0.01):
    fit = lambda x: None if x is None else FitResult(x, band, 0.01, 12)
    return RegularityReport(
        p=3,
        alpha_iso=fit(alpha),
        beta_horizontal=fit(beta),
        alpha_vertical=fit(alpha_v),
        alpha_iso_order2=fit(order2),
        w_alpha_iso=fit(w_alpha),
        w_negative_exponent=fit(w_neg),
        w_planewise_negative_exponent=fit(w_plane),
    )


def fake_sweep(slope):
    return DefectSweep((0.2, 0.1, 0.05, 0.02), (1, 1, 1, 1), slope, 0.02, 0.01)


class TestEnergy:
    def test_sine_half(self, grid32):
        u = sine_field(grid32, axis=0)
        v = ScalarField(grid32, np.zeros(grid32.shape))
        assert np.isclose(horizontal_energy(u, v), 0.5, atol=1e-14)

    def test_zero(self, grid16):
        z = ScalarField(grid16, np.zeros(grid16.shape))
        assert horizontal_energy(z, z) == 0.0

    def test_quadratic_scaling(self, grid16):
        import conftest

        u = conftest.random_field(grid16, seed=1)
        v = conftest.random_field(grid16, seed=2)
        e1 = horizontal_energy(u, v)
        u2 = ScalarField(grid16, 2 * u.values)
        v2 = ScalarField(grid16, 2 * v.values)
        assert np.isclose(horizontal_energy(u2, v2), 4 * e1, rtol=1e-13)


class TestEngine:
    def test_p31_holds_with_prediction(self):
        rep = fake_report(alpha=0.6)
        (v,) = criterion_engine(rep, fake_sweep(0.5), criteria=["P3.1"])
        assert v.hypothesis_holds
        assert np.isclose(v.predicted_decay, 0.2)
        assert v.decay_pass is True

    def test_p31_fails_below_half(self):
        rep = fake_report(alpha=0.45)
        (v,) = criterion_engine(rep, criteria=["P3.1"])
        assert not v.hypothesis_holds
        assert v.predicted_decay is None

    def test_anisotropic_split_verdict(self):
        # the acceptance-8 pattern: P3.6 holds while P3.1 fails
        rep = fake_report(alpha=0.45, beta=1.2, alpha_v=0.45)
        verdicts = criterion_engine(rep, fake_sweep(0.12), criteria=["P3.1", "P3.6"])
        table = {v.criterion: v for v in verdicts}
        assert not table["P3.1"].hypothesis_holds
        assert table["P3.6"].hypothesis_holds
        assert np.isclose(table["P3.6"].predicted_decay, 0.1)  # min(2.2,3,1.1,1.9)-1
        assert table["P3.6"].decay_pass is True

    def test_smooth_field_all_hold(self):
        rep = fake_report(alpha=1.0, beta=2.0, alpha_v=1.0, order2=2.0,
                          w_alpha=1.0, w_neg=0.0, w_plane=0.0)
        verdicts = criterion_engine(rep, fake_sweep(2.0))
        assert len(verdicts) == len(CRITERIA)
        for v in verdicts:
            assert v.hypothesis_holds, v.criterion
            if v.predicted_decay is not None:
                assert v.decay_pass is True

    def test_monotone_in_exponents(self):
        lo = fake_report(alpha=0.55, beta=0.8, alpha_v=0.4, order2=1.1,
                         w_alpha=0.3, w_neg=0.2, w_plane=0.2)
        hi = fake_report(alpha=0.75, beta=1.3, alpha_v=0.6, order2=1.5,
                         w_alpha=0.5, w_neg=0.2, w_plane=0.2)
        for c in CRITERIA:
            (vlo,) = criterion_engine(lo, criteria=[c])
            (vhi,) = criterion_engine(hi, criteria=[c])
            assert not (vlo.hypothesis_holds and not vhi.hypothesis_holds), c

    def test_t410_uses_measured_s(self):
        rep = fake_report(alpha=0.8, w_neg=0.3)
        (v,) = criterion_engine(rep, criteria=["T4.10"])
        assert v.hypothesis_holds  # 0.8 - band > 0.5 + (0.3 + band)/2
        assert np.isclose(v.predicted_decay, 2 * 0.8 - 1 - 0.3)

    def test_t410_with_given_s(self):
        rep = fake_report(alpha=0.8)
        (v,) = criterion_engine(rep, criteria=["T4.10"], s=0.5)
        assert v.inputs["s_origin"] == "given"
        assert v.hypothesis_holds  # 0.79 > 0.75

    def test_incomplete_input_raises(self):
        rep = fake_report(alpha=0.8)  # no w data
        with pytest.raises(IncompleteInputError) as err:
            criterion_engine(rep, criteria=["P3.5"])
        assert "P3.5" in str(err.value)

    def test_unknown_criterion(self):
        with pytest.raises(ParameterError):
            criterion_engine(fake_report(), criteria=["P9.9"])

    def test_verdict_order_fixed(self):
        rep = fake_report(alpha=1.0, beta=2.0, alpha_v=1.0, order2=2.0,
                          w_alpha=1.0, w_neg=0.0, w_plane=0.0)
        verdicts = criterion_engine(rep)
        assert tuple(v.criterion for v in verdicts) == CRITERIA

    def test_csv_one_row_per_criterion(self):
        rep = fake_report(alpha=1.0, beta=2.0, alpha_v=1.0, order2=2.0,
                          w_alpha=1.0, w_neg=0.0, w_plane=0.0)
        text = verdicts_to_csv(criterion_engine(rep))
        assert len(text.strip().splitlines()) == 1 + len(CRITERIA)


@pytest.fixture(scope="module")
def smooth_traj():
    g = Grid(32, 32, 32)
    vf = synth_smooth(seed=31, grid=g, modes=3)
    cfg = SolverConfig(g, omega=1.0, dt=2e-3, t_end=0.12, snapshot_stride=2)
    return run(cfg, vf)


class TestBalanceResidual:
    def test_zero_psi(self, smooth_traj):
        g = smooth_traj.snapshots[0][0].grid
        psi = SpaceTimeTestFunction(
            ScalarField(g, np.zeros(g.shape)), TimeBump(0.02, 0.1)
        )
        assert balance_residual(smooth_traj, 0.15, psi, Mollifier(m=5)) == 0.0

    def test_support_gate(self, smooth_traj):
        g = smooth_traj.snapshots[0][0].grid
        psi = default_test_function(g, -0.1, 0.3)
        with pytest.raises(ParameterError):
            balance_residual(smooth_traj, 0.15, psi)

    def test_eps_refinement_slope(self, smooth_traj):
        g = smooth_traj.snapshots[0][0].grid
        psi = default_test_function(g, 0.02, 0.10)
        moll = Mollifier(m=7)
        eps = [0.25, 0.125, 0.0625]
        res = balance_residual_sweep(smooth_traj, eps, psi, moll)
        vals = [res[e] for e in eps]
        slope = np.log(vals[0] / vals[-1]) / np.log(eps[0] / eps[-1])
        assert slope >= 1.0

    def test_steady_constant_psi_reduces_to_defect(self):
        # steady state u = sin(2 pi x): x-independent psi kills the time and
        # advective terms, leaving the pure defect integral
        g = Grid(32, 32, 32)
        from hseuler.grid import VectorField
        from hseuler.pressure import solve_pressure
        from hseuler.solver import Trajectory, SolverConfig
        from hseuler.mollify import defect_density

        _, y, _ = g.mesh()
        u = ScalarField(g, np.sin(2 * np.pi * y) + np.zeros(g.shape), "even")
        v = ScalarField(g, np.zeros(g.shape), "even")
        w = ScalarField(g, np.zeros(g.shape), "odd")
        vf = VectorField(u, v, w)
        p = solve_pressure(u, v)
        times = np.linspace(0.0, 0.2, 9)
        traj = Trajectory(times, [(vf, p)] * 9, np.full(9, 0.5),
                          SolverConfig(g, dt=1e-3, t_end=0.2))
        psi = SpaceTimeTestFunction(
            ScalarField(g, np.ones(g.shape)), TimeBump(0.05, 0.15)
        )
        moll = Mollifier(m=7)
        got = balance_residual(traj, 0.2, psi, moll)
        D = defect_density(vf, 0.2, moll, path="products")
        bump = TimeBump(0.05, 0.15)
        time_weight = np.trapezoid([bump.value(t) for t in times], times)
        expect = abs(0.5 * np.mean(D.values) * time_weight)
        assert np.isclose(got, expect, rtol=1e-10)
