"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  Criteria and tolerances
are fixed here; nothing is deferred to later calibration.

Two discretization-facing choices are deliberate and documented:

  * criterion 4 probes the resolvent at the imaginary parts of the discrete
    y-branch eigenvalues rather than literally at k pi / L: quadratic mesh
    dispersion shifts the discrete resonances by far more than their tiny
    real parts, and probing off-resonance measures mesh error, not the
    lambda^2 growth the criterion is about (the modal evaluation used for
    the sweep is exact for the uniform global layout and is cross-checked
    against the generic dense path at several points);
  * criterion 7 uses the multi-mode smooth data sum_k k^{-5/2} sin(k pi x)
    whose energy is spread across modes with near-flat graph-norm weights;
    a single low mode sits in a pre-asymptotic regime over the whole fit
    window and cannot exhibit the t^{-1} envelope;
  * criterion 8's sweep includes the discrete resonance frequencies among
    the probe points: a purely uniform lambda grid undersamples the narrow
    resonance peaks and its binwise "upper envelope" is ill-defined.
"""

import math
import time

import numpy as np
import pytest

from kvwave import charroots as cr
from kvwave.discretize import (State, apply_operator, assemble, build_grid,
                               dissipation_form, random_state, w_inner, w_norm)
from kvwave.evolve import (DecayModel, decay_probe_initial_state, fit_decay,
                           simulate, smooth_initial_state)
from kvwave.model import ProblemConfig
from kvwave.spectrum import (compute_spectrum, discrete_huang_pruss_check,
                             huang_pruss_sequence, resolvent_norm,
                             resonance_frequencies, y_branch_frequency)


def _report(num, name, ok, detail, elapsed, budget):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPT-{num} {name}: {status} ({detail}; "
          f"{elapsed:.1f}s of {budget:.0f}s budget)")
    assert ok, f"criterion {num} failed: {detail}"
    assert elapsed < budget, f"criterion {num} over budget: {elapsed:.1f}s"


ALL_PRESETS = [ProblemConfig.main_local(), ProblemConfig.global_damping(),
               ProblemConfig.transmission_local(), ProblemConfig.auxiliary(),
               ProblemConfig.conservative()]


def test_criterion_1_dissipativity_identity():
    """Re<AU,U>_W <= 0 and equals -v'K_b v - v'M_d v - z'M_d z, 1e-12 rel."""
    t0 = time.time()
    rng = np.random.default_rng(1001)
    worst_pos = 0.0
    worst_rel = 0.0
    for cfg in ALL_PRESETS:
        sys_ = assemble(cfg, build_grid(cfg, 400))
        for _ in range(100):
            U = random_state(sys_, rng)
            AU = apply_operator(sys_, U)
            lhs = w_inner(sys_, AU, U).real
            rhs = -dissipation_form(sys_, U)
            scale = w_norm(sys_, AU) * w_norm(sys_, U)
            worst_pos = max(worst_pos, lhs / scale)
            worst_rel = max(worst_rel, abs(lhs - rhs) / max(abs(rhs), scale))
    ok = worst_pos <= 1e-12 and worst_rel <= 1e-12
    _report(1, "dissipativity & dissipation identity", ok,
            f"max Re/scale = {worst_pos:.2e}, max identity rel err = "
            f"{worst_rel:.2e}", time.time() - t0, 10.0)


def test_criterion_2_kernel_determinants():
    """Closed forms match direct 4x4 determinants, 1e-10 rel, 1000/case."""
    t0 = time.time()
    rng = np.random.default_rng(1002)
    worst = 0.0
    for case in ("lt", "eq", "gt"):
        for _ in range(1000):
            a = rng.uniform(0.3, 4.0)
            c0 = rng.uniform(0.3, 4.0)
            alpha3 = rng.uniform(0.2, 0.9)
            if case == "lt":
                lam = c0 * rng.uniform(0.05, 0.95)
            elif case == "eq":
                lam = c0
            else:
                lam = c0 * rng.uniform(1.05, 5.0)
            if rng.uniform() < 0.5:
                lam = -lam
            closed, direct = cr.kernel_det(case, lam, a, c0, alpha3)
            worst = max(worst, abs(closed - direct)
                        / max(abs(closed), abs(direct)))
    ok = worst <= 1e-10
    _report(2, "kernel determinant equivalence", ok,
            f"max rel err = {worst:.2e} over 3000 draws",
            time.time() - t0, 5.0)


def test_criterion_3_huang_pruss_witness():
    """D1 = 0, D2 = 1 (1e-12 rel) for n in [1,200]; positive norm-ratio
    limit; discrete residual quarters per mesh doubling."""
    t0 = time.time()
    cfg = ProblemConfig.global_damping(L=math.pi, a=2.0, b0=1.0, c0=1.0)
    worst_d1 = worst_d2 = 0.0
    for n in range(1, 201):
        t = huang_pruss_sequence(cfg, n)  # raises beyond 1e-12 relative
        term = abs(t.B_n) * 2 * math.pi ** 2 * n ** 2 / cfg.L ** 2
        worst_d1 = max(worst_d1, abs(t.D1_n) / term)
        worst_d2 = max(worst_d2, abs(t.D2_n - 1) / term)
    ratios = []
    for n in (100, 200, 400):
        t = huang_pruss_sequence(cfg, n)
        nu, nf = t.continuum_norms()
        ratios.append(nu / (t.lambda_n ** 2 * nf))
    limit = math.sqrt(2.0) * cfg.b0 / cfg.c0 ** 2
    limit_ok = (ratios[-1] > 0
                and abs(ratios[-1] - limit) < 0.02 * limit
                and abs(ratios[-1] - limit) < abs(ratios[0] - limit))
    t1 = huang_pruss_sequence(cfg, 1)
    res = [discrete_huang_pruss_check(assemble(cfg, build_grid(cfg, nc)), t1)
           for nc in (64, 128, 256)]
    r1, r2 = res[0] / res[1], res[1] / res[2]
    res_ok = abs(r1 - 4) <= 1.0 and abs(r2 - 4) <= 1.0
    ok = worst_d1 <= 1e-12 and worst_d2 <= 1e-12 and limit_ok and res_ok
    _report(3, "Huang-Pruss witness", ok,
            f"max|D1|rel = {worst_d1:.1e}, max|D2-1|rel = {worst_d2:.1e}, "
            f"norm ratio -> {ratios[-1]:.4f} (limit {limit:.4f}), "
            f"residual ratios {r1:.2f}, {r2:.2f}",
            time.time() - t0, 30.0)


def test_criterion_4_resolvent_growth_global():
    """log-log slope of the energy-norm resolvent vs lambda is 2.0 +/- 0.3
    (global preset, n_cells = 600, modes k = 5..60, probes at the discrete
    y-branch resonances; modal evaluation cross-checked against the generic
    power method)."""
    t0 = time.time()
    cfg = ProblemConfig.global_damping(L=math.pi, a=2.0, b0=1.0, c0=1.0)
    sys_ = assemble(cfg, build_grid(cfg, 600))
    ks = list(range(5, 61))
    lams, norms = [], []
    for k in ks:
        lam_k, _ = y_branch_frequency(sys_, k)
        lams.append(lam_k)
        norms.append(resolvent_norm(sys_, lam_k, method="modal").norm)
    slope = float(np.polyfit(np.log(lams), np.log(norms), 1)[0])
    cross_ok = True
    for k in (5, 20, 40, 60):
        lam_k, _ = y_branch_frequency(sys_, k)
        generic = resolvent_norm(sys_, lam_k, method="power").norm
        modal = resolvent_norm(sys_, lam_k, method="modal").norm
        cross_ok &= abs(generic - modal) <= 1e-6 * modal
    ok = abs(slope - 2.0) <= 0.3 and cross_ok
    _report(4, "resolvent growth (global preset)", ok,
            f"slope = {slope:.3f} (target 2.0 +/- 0.3), modal/generic "
            f"cross-check {'ok' if cross_ok else 'FAILED'}",
            time.time() - t0, 300.0)


def test_criterion_5_characteristic_roots():
    """c = 2, n in [10, 60]: one root per Rouche ball, |root - mu| decreasing,
    Re < 0 with |Re| sqrt(n pi) within [0.5, 2] x the branch coefficient;
    reports which candidate constant fits."""
    t0 = time.time()
    c = 2.0
    ns = range(10, 61)
    coef1 = {"3+cos": 2 * math.sin(c / 4) ** 2 / (3 + math.cos(c / 2)),
             "2+cos": 2 * math.sin(c / 4) ** 2 / (2 + math.cos(c / 2))}
    gamma = cr.gamma_constant(c)
    ok = True
    details = []
    meas1 = []
    for branch in (1, 2):
        errs = []
        for n in ns:
            center = cr.f0_roots(n, c)[branch - 1]
            radius = n ** -0.25
            count = cr.count_zeros_in_ball(center, radius, c)
            if count != 1:
                ok = False
                details.append(f"ball count {count} at branch {branch}, n={n}")
            rec = cr.refine_root(center, c, radius, branch=branch, n=n)
            if not rec.root.real < 0:
                ok = False
                details.append(f"nonnegative Re at branch {branch}, n={n}")
            errs.append(abs(rec.root - center))
            scaled_re = -rec.root.real * math.sqrt(n * math.pi)
            target = coef1["3+cos"] if branch == 1 else gamma
            if not 0.5 * target <= scaled_re <= 2.0 * target:
                ok = False
                details.append(f"|Re| sqrt(n pi) = {scaled_re:.4f} outside "
                               f"[{0.5 * target:.4f}, {2 * target:.4f}] "
                               f"at branch {branch}, n={n}")
            if branch == 1:
                meas1.append(scaled_re)
        if not (errs[-1] < errs[0] and
                all(b <= a + 1e-3 for a, b in zip(errs, errs[1:]))):
            ok = False
            details.append(f"branch {branch} |root - mu| not decreasing")
    mean1 = float(np.mean(meas1))
    best = min(coef1, key=lambda k: abs(coef1[k] - mean1))
    if best != "3+cos":
        details.append("constant adjudication unexpectedly favors 2+cos")
    _report(5, "characteristic roots vs asymptotics", ok,
            f"mean |Re| sqrt(n pi) = {mean1:.4f}, candidates 3+cos -> "
            f"{coef1['3+cos']:.4f}, 2+cos -> {coef1['2+cos']:.4f}, best fit: "
            f"{best}" + ("; " + "; ".join(details[:3]) if details else ""),
            time.time() - t0, 120.0)


def test_criterion_6_asymptotic_determinant():
    """|det/( -ic lam^{11/2}) - F| fits a slope <= -2.3 on lam = it,
    t in [50, 500], c = 2."""
    t0 = time.time()
    c = 2.0
    ts = np.geomspace(50.0, 500.0, 40)
    diffs = []
    for t in ts:
        lam = 1j * t
        scaled, log_scale = cr.char_det_with_scale(lam, c)
        det = scaled * np.exp(log_scale)
        G = det / (-1j * c * lam ** 5 * cr.branch_sqrt(lam))
        diffs.append(abs(G - cr.asymptotic_F(lam, c)))
    slope = float(np.polyfit(np.log(ts), np.log(diffs), 1)[0])
    ok = slope <= -2.3
    _report(6, "asymptotic determinant consistency", ok,
            f"remainder slope = {slope:.2f} (need <= -2.3)",
            time.time() - t0, 30.0)


def test_criterion_7_polynomial_decay_main_local():
    """main_local, smooth multi-mode data, n_cells=400, dt=1e-3, T=200:
    polynomial exponent on [10, 200] >= 0.8 and the exponential model fits
    strictly worse."""
    t0 = time.time()
    cfg = ProblemConfig.main_local(L=1.0, a=1.0, b0=1.0, c0=1.0,
                                   alphas=(0.2, 0.4, 0.6, 0.8))
    sys_ = assemble(cfg, build_grid(cfg, 400))
    U0 = decay_probe_initial_state(sys_)
    traj = simulate(sys_, U0, 200.0, 1e-3)
    fp = fit_decay(traj, DecayModel.POLYNOMIAL, (10.0, 200.0))
    fe = fit_decay(traj, DecayModel.EXPONENTIAL, (10.0, 200.0))
    ok = fp.exponent_or_rate >= 0.8 and fe.residual > fp.residual
    _report(7, "polynomial decay (main_local)", ok,
            f"exponent = {fp.exponent_or_rate:.3f} (need >= 0.8), "
            f"log-residuals poly {fp.residual:.4f} < exp {fe.residual:.4f}",
            time.time() - t0, 300.0)


def test_criterion_8_auxiliary_exponential_stability():
    """Auxiliary preset: log E linear (R^2 > 0.99 on [5, 50]) and bounded
    resolvent envelope on lambda in [1, 200] (max/min < 5)."""
    t0 = time.time()
    cfg = ProblemConfig.auxiliary()
    sys_ = assemble(cfg, build_grid(cfg, 400))
    traj = simulate(sys_, smooth_initial_state(sys_), 50.0, 1e-3)
    fit = fit_decay(traj, DecayModel.EXPONENTIAL, (5.0, 50.0))
    sweep_sys = assemble(cfg, build_grid(cfg, 200))
    lams = np.array(sorted(list(np.linspace(1.0, 200.0, 60))
                           + resonance_frequencies(sweep_sys, 1.0, 200.0)))
    norms = np.array([resolvent_norm(sweep_sys, lam, method="power").norm
                      for lam in lams])
    edges = np.linspace(lams[0], lams[-1] + 1e-9, 11)
    env = np.array([norms[(lams >= lo) & (lams < hi)].max()
                    for lo, hi in zip(edges, edges[1:])])
    ratio = env.max() / env.min()
    ok = fit.r_squared > 0.99 and ratio < 5.0
    _report(8, "auxiliary exponential stability", ok,
            f"R^2 = {fit.r_squared:.4f} (rate tau = "
            f"{fit.exponent_or_rate:.4f}), envelope max/min = {ratio:.2f}",
            time.time() - t0, 300.0)


def test_criterion_9_oracle_spectra():
    """Conservative decoupled eigenvalues match k pi sqrt(a)/L and k pi / L
    for the 5 lowest modes, converging at O(h^2) under mesh doubling."""
    t0 = time.time()
    cfg = ProblemConfig.conservative(L=1.0, a=4.0)
    exact = np.array([1, 2, 2, 3, 4]) * math.pi
    errs = []
    for ncell in (32, 64, 128):
        sys_ = assemble(cfg, build_grid(cfg, ncell))
        recs = compute_spectrum(sys_, 12, 0j)
        pos = sorted(r.lam.imag for r in recs if r.lam.imag > 0)[:5]
        errs.append(np.abs(np.array(pos) - exact).max())
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    ok = (errs[-1] < 5e-3 and abs(r1 - 4) <= 1.2 and abs(r2 - 4) <= 1.2)
    _report(9, "oracle spectra (conservative preset)", ok,
            f"finest error = {errs[-1]:.2e}, refinement ratios "
            f"{r1:.2f}, {r2:.2f} (target 4)",
            time.time() - t0, 60.0)
