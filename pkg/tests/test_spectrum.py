import numpy as np
import pytest

from kvwave.discretize import (State, apply_operator, assemble, build_grid,
                               random_state, w_norm)
from kvwave.errors import ConfigError
from kvwave.model import ProblemConfig
from kvwave.spectrum import (compute_spectrum, discrete_huang_pruss_check,
                             huang_pruss_sequence, resolvent_norm,
                             spectrum_to_csv, y_branch_frequency)

RNG = np.random.default_rng(3)


def make(cfg, ncell):
    return assemble(cfg, build_grid(cfg, ncell))


class TestComputeSpectrum:
    def test_conservative_oracle_with_multiplicities(self):
        # a = 4, L = 1: u-branch at 2k pi, y-branch at k pi; sorted |Im|/pi
        # begins 1, 2, 2, 3, 4, 4 (double entries where the branches meet)
        cfg = ProblemConfig.conservative(a=4.0)
        sys_ = make(cfg, 128)
        recs = compute_spectrum(sys_, 12, 0j)
        got = sorted(abs(r.lam.imag) / np.pi for r in recs)
        expected = [1, 1, 2, 2, 2, 2, 3, 3, 4, 4, 4, 4]  # conjugate pairs
        assert np.allclose(got, expected, atol=0.01)
        assert all(abs(r.lam.real) < 1e-9 for r in recs)

    def test_conservative_oracle_converges_quadratically(self):
        # 5 lowest modes (with multiplicity): pi, 2pi, 2pi, 3pi, 4pi
        cfg = ProblemConfig.conservative(a=4.0)
        exact = np.array([1, 2, 2, 3, 4]) * np.pi
        errs = []
        for ncell in (32, 64, 128):
            sys_ = make(cfg, ncell)
            recs = compute_spectrum(sys_, 12, 0j)
            pos = sorted(r.lam.imag for r in recs if r.lam.imag > 0)[:5]
            errs.append(np.abs(np.array(pos) - exact).max())
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.3)

    def test_damped_presets_have_negative_real_parts(self):
        for cfg in (ProblemConfig.main_local(),
                    ProblemConfig.transmission_local(),
                    ProblemConfig.auxiliary()):
            sys_ = make(cfg, 60)
            recs = compute_spectrum(sys_, 40, 0j)
            assert all(r.lam.real < 0 for r in recs), cfg.preset

    def test_residuals_below_tolerance(self):
        sys_ = make(ProblemConfig.main_local(), 80)
        recs = compute_spectrum(sys_, 30, 10j)
        assert all(r.residual < 1e-8 for r in recs)

    def test_conjugate_pairing(self):
        # full spectrum of a small system pairs up within 1e-10
        sys_ = make(ProblemConfig.main_local(), 20)
        recs = compute_spectrum(sys_, 4 * sys_.n, 0j)
        lams = np.array([r.lam for r in recs])
        for lam in lams:
            if abs(lam.imag) > 1e-8:
                assert np.min(np.abs(lams - lam.conjugate())) < 1e-10 * max(1, abs(lam))

    def test_transmission_real_parts_approach_axis(self):
        # |Re| along the branch decays like 1/sqrt(Im): the non-exponential
        # stability signature
        sys_ = make(ProblemConfig.transmission_local(), 200)
        recs = compute_spectrum(sys_, 120, 0j)
        ups = [r for r in recs if r.lam.imag > 5]
        ups.sort(key=lambda r: r.lam.imag)
        re_lo = max(abs(r.lam.real) for r in ups[:6])
        re_hi = min(np.sort([abs(r.lam.real) for r in ups[-12:]])[:3])
        assert re_hi < re_lo
        assert max(r.lam.real for r in ups) < 0

    def test_count_exceeding_dimension(self):
        sys_ = make(ProblemConfig.main_local(), 20)
        with pytest.raises(ValueError, match="count"):
            compute_spectrum(sys_, 4 * sys_.n + 1, 0j)


class TestResolventNorm:
    def test_lambda_zero_in_resolvent_set(self):
        sys_ = make(ProblemConfig.main_local(), 50)
        assert np.isfinite(resolvent_norm(sys_, 0.0, method="svd").norm)

    def test_methods_agree(self):
        sys_ = make(ProblemConfig.global_damping(), 48)
        for lam in (0.0, 3.0, 11.0):
            svd = resolvent_norm(sys_, lam, method="svd").norm
            pwr = resolvent_norm(sys_, lam, method="power").norm
            mod = resolvent_norm(sys_, lam, method="modal").norm
            assert pwr == pytest.approx(svd, rel=1e-6)
            assert mod == pytest.approx(svd, rel=1e-6)

    def test_modal_requires_global_layout(self):
        sys_ = make(ProblemConfig.main_local(), 48)
        with pytest.raises(ConfigError):
            resolvent_norm(sys_, 1.0, method="modal")

    def test_probe_lower_bound(self):
        sys_ = make(ProblemConfig.main_local(), 60)
        for lam in (2.0, 9.0):
            nr = resolvent_norm(sys_, lam, method="svd").norm
            for _ in range(5):
                U = random_state(sys_, RNG)
                AU = apply_operator(sys_, U)
                R = State(1j * lam * U.u - AU.u, 1j * lam * U.v - AU.v,
                          1j * lam * U.y - AU.y, 1j * lam * U.z - AU.z)
                assert nr >= (1 - 1e-9) * w_norm(sys_, U) / w_norm(sys_, R)

    def test_huang_pruss_witness_lower_bound(self):
        cfg = ProblemConfig.global_damping()
        sys_ = make(cfg, 256)
        for n in (1, 2, 3):
            t = huang_pruss_sequence(cfg, n)
            x = sys_.grid.interior
            s = np.sin(n * np.pi * x / cfg.L).astype(complex)
            au, av, ay, az = t.u_amplitudes
            U = State(au * s, av * s, ay * s, az * s)
            F = State(0 * s, 0 * s, 0 * s, s)
            nr = resolvent_norm(sys_, t.lambda_n, method="power", probe=U).norm
            assert nr >= (1 - 0.05) * w_norm(sys_, U) / w_norm(sys_, F)


class TestHuangPruss:
    def test_symbolic_example(self):
        # L = pi, a = 2, b0 = c0 = 1, n = 3: lambda = 3, A = i/3, B = -3i - 1
        cfg = ProblemConfig.global_damping(L=np.pi, a=2.0, b0=1.0, c0=1.0)
        t = huang_pruss_sequence(cfg, 3)
        assert t.lambda_n == pytest.approx(3.0)
        assert t.A_n == pytest.approx(1j / 3)
        assert t.B_n == pytest.approx(-3j - 1.0)
        assert abs(t.D1_n) < 1e-12
        assert abs(t.D2_n - 1) < 1e-12

    def test_identities_over_range(self):
        # huang_pruss_sequence itself raises if D1/D2 drift beyond 1e-12
        # relative to the magnitudes of the cancelling terms
        cfg = ProblemConfig.global_damping()
        for n in range(1, 201):
            t = huang_pruss_sequence(cfg, n)
            term_scale = abs(t.B_n) * 2 * np.pi ** 2 * n ** 2 / cfg.L ** 2
            assert abs(t.D1_n) <= 1e-10 * max(1.0, term_scale)
            assert abs(t.D2_n - 1) <= 1e-12 * max(1.0, term_scale)

    def test_norm_dominated_by_fourth_block(self):
        # ||U_n||^2 >= L lambda_n^2 |B_n|^2 / 2 (the z-block alone)
        cfg = ProblemConfig.global_damping()
        for n in (1, 7, 40):
            t = huang_pruss_sequence(cfg, n)
            nu, _ = t.continuum_norms()
            assert nu ** 2 >= 0.5 * cfg.L * t.lambda_n ** 2 * abs(t.B_n) ** 2

    def test_f_amplitudes_unit_fourth_block(self):
        t = huang_pruss_sequence(ProblemConfig.global_damping(), 2)
        assert t.f_amplitudes == (0.0, 0.0, 0.0, 1.0)

    def test_norm_ratio_has_positive_limit(self):
        # ||U_n||^2 / lambda_n^4 -> L b0^2 / c0^4 (from |B_n| ~ lambda b0/c0^2)
        cfg = ProblemConfig.global_damping()
        ratios = []
        for n in (50, 100, 200, 400):
            t = huang_pruss_sequence(cfg, n)
            nu, _ = t.continuum_norms()
            ratios.append(nu ** 2 / t.lambda_n ** 4)
        limit = cfg.L * cfg.b0 ** 2 / cfg.c0 ** 4
        assert ratios[-1] == pytest.approx(limit, rel=0.01)
        assert abs(ratios[-1] - limit) < abs(ratios[0] - limit)

    def test_rejects_other_presets(self):
        with pytest.raises(ConfigError):
            huang_pruss_sequence(ProblemConfig.main_local(), 1)

    def test_rejects_zero_mode(self):
        with pytest.raises(ValueError):
            huang_pruss_sequence(ProblemConfig.global_damping(), 0)

    def test_discrete_residual_quarters_per_refinement(self):
        cfg = ProblemConfig.global_damping()
        t = huang_pruss_sequence(cfg, 1)
        r64 = discrete_huang_pruss_check(make(cfg, 64), t)
        r128 = discrete_huang_pruss_check(make(cfg, 128), t)
        r256 = discrete_huang_pruss_check(make(cfg, 256), t)
        assert r64 / r128 == pytest.approx(4.0, abs=1.0)
        assert r128 / r256 == pytest.approx(4.0, abs=1.0)

    def test_discrete_check_requires_matching_config(self):
        cfg = ProblemConfig.global_damping()
        t = huang_pruss_sequence(cfg, 1)
        other = make(ProblemConfig.global_damping(L=1.0), 64)
        with pytest.raises(ConfigError, match="config"):
            discrete_huang_pruss_check(other, t)


def test_y_branch_frequency_matches_spectrum():
    cfg = ProblemConfig.global_damping()
    sys_ = make(cfg, 96)
    lam_probe, ev = y_branch_frequency(sys_, 4)
    recs = compute_spectrum(sys_, 60, 4j)
    best = min(recs, key=lambda r: abs(r.lam - ev))
    assert abs(best.lam - ev) < 1e-8 * max(1.0, abs(ev))


def test_spectrum_csv_format(tmp_path):
    sys_ = make(ProblemConfig.main_local(), 40)
    recs = compute_spectrum(sys_, 4, 0j)
    path = tmp_path / "s.csv"
    spectrum_to_csv(recs, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "re,im,residual"
    assert len(lines) == 5
