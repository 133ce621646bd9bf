import numpy as np
import pytest
import scipy.linalg as sla

from kvwave import stepping
from kvwave.discretize import (State, assemble, build_grid, dissipation_form,
                               energy, random_state)
from kvwave.errors import DomainError
from kvwave.evolve import (DecayModel, Trajectory, decay_probe_initial_state,
                           dissipation_residual, fit_decay, simulate,
                           smooth_initial_state, step_trapezoidal)
from kvwave.model import ProblemConfig

RNG = np.random.default_rng(77)


def make(cfg, ncell=60):
    return assemble(cfg, build_grid(cfg, ncell))


class TestStepTrapezoidal:
    def test_zero_stays_zero(self):
        sys_ = make(ProblemConfig.main_local())
        U1 = step_trapezoidal(sys_, State.zeros(sys_.n), 1e-2)
        assert energy(sys_, U1) == 0.0

    def test_conservative_energy_exact_over_1e4_steps(self):
        # Cayley transform of a W-skew generator is W-unitary
        sys_ = make(ProblemConfig.conservative())
        U = smooth_initial_state(sys_)
        E0 = energy(sys_, U)
        traj = simulate(sys_, U, 10000 * 5e-3, 5e-3)
        assert np.abs(traj.energies - E0).max() <= 1e-12 * E0

    def test_global_kv_strictly_decreases(self):
        sys_ = make(ProblemConfig.global_damping())
        U = smooth_initial_state(sys_)
        traj = simulate(sys_, U, 0.5, 1e-2)
        assert np.all(np.diff(traj.energies) < 0)

    def test_matches_dense_cayley_solve(self):
        # tiny n: one step against the dense (I - th A)^{-1} (I + th A)
        cfg = ProblemConfig.main_local()
        sys_ = make(cfg, ncell=10)
        from kvwave.spectrum import build_dense_operator
        A = build_dense_operator(sys_)
        dt = 0.37
        U0 = random_state(sys_, RNG)
        x = U0.as_vector()
        I = np.eye(4 * sys_.n)
        expected = np.linalg.solve(I - 0.5 * dt * A, (I + 0.5 * dt * A) @ x)
        got = step_trapezoidal(sys_, U0, dt).as_vector()
        assert np.abs(got - expected).max() <= 1e-9 * np.abs(expected).max()


class TestBackends:
    def test_backends_agree(self):
        cfg = ProblemConfig.main_local()
        sys_ = make(cfg, 80)
        U0 = smooth_initial_state(sys_)
        try:
            ws_c = stepping.StepperWorkspace(sys_, 1e-3, backend="compiled")
        except ImportError:
            pytest.skip("compiled stepper not built")
        ws_p = stepping.StepperWorkspace(sys_, 1e-3, backend="python")
        Ec, fc, _ = ws_c.run(U0, 200)
        Ep, fp, _ = ws_p.run(U0, 200)
        assert np.abs(Ec - Ep).max() <= 1e-10 * Ec[0]
        assert np.abs(fc.as_vector() - fp.as_vector()).max() <= 1e-10

    def test_banded_factor_matches_sparse(self):
        cfg = ProblemConfig.auxiliary()
        sys_ = make(cfg, 50)
        ws = stepping.StepperWorkspace(sys_, 2e-3, backend="python")
        S = stepping._interleaved_sparse(
            ws.Md + ws.theta * ws.B1d + ws.theta ** 2 * ws.aKd,
            ws.Me + ws.theta * ws.B1e + ws.theta ** 2 * ws.aKe,
            ws.Md + ws.theta * ws.B2d + ws.theta ** 2 * ws.Kd,
            ws.Me + ws.theta * ws.B2e + ws.theta ** 2 * ws.Ke,
            ws.theta * ws.Cd, ws.theta * ws.Ce).toarray()
        rhs = RNG.standard_normal(2 * sys_.n)
        x = ws.fact.solve(rhs)
        assert np.abs(S @ x - rhs).max() <= 1e-10 * np.abs(rhs).max()

    def test_snapshots_recorded_at_stride(self):
        sys_ = make(ProblemConfig.main_local())
        U0 = smooth_initial_state(sys_)
        traj = simulate(sys_, U0, 10 * 1e-2, 1e-2, snapshot_stride=5)
        assert traj.snapshots.shape == (3, 4, sys_.n)
        assert np.allclose(traj.snapshots[0][0], U0.u)


class TestSimulate:
    def test_zero_horizon_single_point(self):
        sys_ = make(ProblemConfig.main_local())
        traj = simulate(sys_, smooth_initial_state(sys_), 0.0, 1e-3)
        assert len(traj.times) == 1

    def test_step_count_is_ceil(self):
        sys_ = make(ProblemConfig.main_local())
        traj = simulate(sys_, smooth_initial_state(sys_), 0.105, 1e-2)
        assert len(traj.times) == 12  # ceil(10.5) = 11 steps

    def test_main_local_strong_stability_trend(self):
        sys_ = make(ProblemConfig.main_local(), 100)
        U0 = smooth_initial_state(sys_)
        traj = simulate(sys_, U0, 120.0, 5e-3)
        E = traj.energies
        assert E[-1] < 0.25 * E[0]  # clear decay toward zero
        assert np.all(np.diff(E) <= 1e-12 * E[0])

    def test_auxiliary_log_energy_asymptotically_linear(self):
        cfg = ProblemConfig.auxiliary()
        sys_ = make(cfg, 100)
        traj = simulate(sys_, smooth_initial_state(sys_), 40.0, 5e-3)
        fit = fit_decay(traj, DecayModel.EXPONENTIAL, (5.0, 40.0))
        assert fit.r_squared > 0.99

    def test_monotone_for_every_damped_preset(self):
        for cfg in (ProblemConfig.main_local(), ProblemConfig.global_damping(),
                    ProblemConfig.transmission_local(),
                    ProblemConfig.auxiliary()):
            sys_ = make(cfg, 60)
            U0 = State(*(RNG.standard_normal(sys_.n) for _ in range(4)))
            traj = simulate(sys_, U0, 0.2, 2e-3)
            assert np.all(np.diff(traj.energies) <= 1e-12 * traj.energies[0])


class TestDissipationResidual:
    def test_zero_state(self):
        sys_ = make(ProblemConfig.main_local())
        Z = State.zeros(sys_.n)
        assert dissipation_residual(sys_, Z, Z, 1e-2) == 0.0

    def test_conservative_residual_machine_small(self):
        sys_ = make(ProblemConfig.conservative())
        U0 = smooth_initial_state(sys_)
        U1 = step_trapezoidal(sys_, U0, 1e-2)
        assert dissipation_residual(sys_, U0, U1, 1e-2) <= 1e-12 * energy(sys_, U0)

    @pytest.mark.parametrize("cfg", [ProblemConfig.main_local(),
                                     ProblemConfig.global_damping(),
                                     ProblemConfig.auxiliary()],
                             ids=lambda c: c.preset.value)
    def test_energy_balance_exact_per_step(self, cfg):
        sys_ = make(cfg, 80)
        U0 = random_state(sys_, RNG)
        U1 = step_trapezoidal(sys_, U0, 1e-3)
        assert dissipation_residual(sys_, U0, U1, 1e-3) <= 1e-10 * energy(sys_, U0)

    def test_tiny_n_direct_matrix_algebra(self):
        # oracle: on n=7 the identity E+ - E = -dt D(U_mid) follows from
        # (U+ - U) = dt A U_mid; verify with dense matrices
        cfg = ProblemConfig.main_local()
        sys_ = make(cfg, 8)
        from kvwave.spectrum import build_dense_operator
        A = build_dense_operator(sys_)
        W = sla.block_diag(cfg.a * sys_.K.toarray(), sys_.M.toarray(),
                           sys_.K.toarray(), sys_.M.toarray())
        dt = 0.21
        U0 = random_state(sys_, RNG)
        x0 = U0.as_vector()
        I = np.eye(4 * sys_.n)
        x1 = np.linalg.solve(I - 0.5 * dt * A, (I + 0.5 * dt * A) @ x0)
        xm = 0.5 * (x0 + x1)
        dE_direct = 0.5 * (x1 @ W @ x1 - x0 @ W @ x0)
        dE_form = dt * (xm @ W @ (A @ xm))
        assert abs(dE_direct - dE_form) <= 1e-12 * abs(dE_direct)
        U1 = State.from_vector(x1)
        res = dissipation_residual(sys_, U0, U1, dt)
        assert res <= 1e-12 * max(energy(sys_, U0), 1.0)


class TestFitDecay:
    def synth(self, fn, t0=1.0, t1=100.0, n=400):
        t = np.linspace(t0, t1, n)
        return Trajectory(t, fn(t))

    def test_recovers_power_law(self):
        traj = self.synth(lambda t: 5.0 / t)
        fit = fit_decay(traj, "polynomial", (1.0, 100.0))
        assert fit.exponent_or_rate == pytest.approx(1.0, abs=1e-6)
        assert fit.amplitude == pytest.approx(5.0, rel=1e-6)
        assert fit.residual < 1e-10

    def test_recovers_exponential_rate(self):
        traj = self.synth(lambda t: np.exp(-4.0 * t), t1=5.0)
        fit = fit_decay(traj, "exponential", (1.0, 5.0))
        assert fit.exponent_or_rate == pytest.approx(2.0, abs=1e-6)

    def test_window_outside_range(self):
        traj = self.synth(lambda t: 1.0 / t)
        with pytest.raises(DomainError, match="window"):
            fit_decay(traj, "polynomial", (0.5, 50.0))

    def test_too_few_samples(self):
        traj = self.synth(lambda t: 1.0 / t, n=30)
        with pytest.raises(DomainError, match="20 samples"):
            fit_decay(traj, "polynomial", (1.0, 3.0))

    def test_energy_floor(self):
        traj = self.synth(lambda t: np.exp(-t), t1=200.0, n=2000)
        with pytest.raises(DomainError, match="energy floor"):
            fit_decay(traj, "exponential", (1.0, 200.0))

    def test_dt_robustness_small_scale(self):
        # halving dt barely moves the fitted exponent
        cfg = ProblemConfig.main_local()
        sys_ = make(cfg, 100)
        U0 = decay_probe_initial_state(sys_, n_modes=25)
        fits = []
        for dt in (4e-3, 2e-3):
            traj = simulate(sys_, U0, 40.0, dt)
            fits.append(fit_decay(traj, "polynomial", (5.0, 40.0)).exponent_or_rate)
        assert abs(fits[0] - fits[1]) < 0.02


def test_trajectory_csv_format(tmp_path):
    traj = Trajectory(np.array([0.0, 0.5]), np.array([1.0, 1.0 / 3.0]))
    path = tmp_path / "t.csv"
    traj.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,E"
    assert lines[2].startswith("0.5,0.3333333333333333")
