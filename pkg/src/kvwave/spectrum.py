"""Discrete spectra, energy-norm resolvent estimates, Huang-Pruss witnesses.

Everything here measures the assembled operator in the energy norm induced
by W = blockdiag(a K, M, K, M): resolvent norms are 1/sigma_min of the
W-congruence G (i lam I - A) G^{-1} with G^T G = W, never the plain 2-norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .discretize import (SemiDiscreteSystem, State, apply_operator, w_norm)
from .errors import ConfigError, NumericalError
from .model import Preset, ProblemConfig

#: requested residual bound for eigenpairs returned by compute_spectrum
EIG_RESIDUAL_TOL = 1e-8

#: size threshold (4n) below which resolvent norms use a dense SVD by default
_DENSE_SVD_LIMIT = 1200


@dataclass(frozen=True)
class EigenRecord:
    lam: complex
    eigvec: State
    residual: float
    mode_index_hint: int


@dataclass(frozen=True)
class ResolventSample:
    lambda_imag: float
    norm: float
    method: str


@dataclass(frozen=True)
class HuangPrussTriple:
    """Explicit pseudomode of the global-coefficient system.

    At lambda_n = n pi / L the choice A_n = iL/(c0 n pi),
    B_n = -i n b0 pi / (c0^2 L) - (a-1)/c0^2 makes

        (i lambda_n I - A) U_n = F_n,  U_n, F_n pure sine modes,

    with ||U_n|| ~ lambda_n^2 ||F_n||: the witness that a uniform resolvent
    bound (hence exponential decay) is impossible.
    """

    config: ProblemConfig
    n: int
    lambda_n: float
    A_n: complex
    B_n: complex
    D1_n: complex
    D2_n: complex

    @property
    def u_amplitudes(self) -> tuple[complex, complex, complex, complex]:
        lam = self.lambda_n
        return (self.A_n, 1j * lam * self.A_n, self.B_n, 1j * lam * self.B_n)

    @property
    def f_amplitudes(self) -> tuple[complex, complex, complex, complex]:
        return (0.0, 0.0, 0.0, 1.0)

    def continuum_norms(self) -> tuple[float, float]:
        """(||U_n||_H, ||F_n||_H) from the closed-form sine integrals."""
        L, a = self.config.L, self.config.a
        lam = self.lambda_n
        nu = 0.5 * L * lam ** 2 * ((1 + a) * abs(self.A_n) ** 2
                                   + 2 * abs(self.B_n) ** 2)
        return float(np.sqrt(nu)), float(np.sqrt(0.5 * L))


# ---------------------------------------------------------------------------
# dense operator and eigenpairs
# ---------------------------------------------------------------------------

def build_dense_operator(sys: SemiDiscreteSystem) -> np.ndarray:
    """Dense 4n x 4n first-order matrix (desk scale: n <= ~2000)."""
    cached = sys._caches.get("dense_A")
    if cached is not None:
        return cached
    n = sys.n
    I = np.eye(n)
    Minv_aK = sys.mass_solve(sys.a * sys.K.toarray())
    Minv_K = sys.mass_solve(sys.K.toarray())
    Minv_B1 = sys.mass_solve((sys.K_b + sys.M_d).toarray())
    Minv_B2 = sys.mass_solve(sys.M_d.toarray())
    Minv_C = sys.mass_solve(sys.M_c.toarray())
    Z = np.zeros((n, n))
    A = np.block([
        [Z, I, Z, Z],
        [-Minv_aK, -Minv_B1, Z, -Minv_C],
        [Z, Z, Z, I],
        [Z, Minv_C, -Minv_K, -Minv_B2]])
    sys._caches["dense_A"] = A
    return A


def _dense_eig(sys: SemiDiscreteSystem):
    cached = sys._caches.get("dense_eig")
    if cached is None:
        A = build_dense_operator(sys)
        cached = sla.eig(A)
        sys._caches["dense_eig"] = cached
    return cached


def _polish_eigenpair(A: np.ndarray, lam: complex, vec: np.ndarray):
    """One inverse-iteration step with a tiny regularizing shift."""
    n4 = A.shape[0]
    shift = lam + 1e-10 * (1.0 + abs(lam))
    try:
        lu = sla.lu_factor(A - shift * np.eye(n4, dtype=complex))
        w = sla.lu_solve(lu, vec)
    except sla.LinAlgError:
        return lam, vec
    w = w / np.linalg.norm(w)
    lam_new = np.vdot(w, A @ w) / np.vdot(w, w)
    return lam_new, w


def compute_spectrum(sys: SemiDiscreteSystem, count: int,
                     near: complex) -> list[EigenRecord]:
    """The `count` eigenvalues closest to `near`, sorted by |Im|.

    Residuals ||A u - lam u||_W / ||u||_W are recomputed independently of
    the eigensolver; pairs above EIG_RESIDUAL_TOL are polished by inverse
    iteration and an error is raised if that fails too.
    """
    if count > 4 * sys.n:
        raise ValueError(f"count={count} exceeds the 4n={4 * sys.n} "
                         "eigenvalues of the discrete operator")
    w, V = _dense_eig(sys)
    order = np.argsort(np.abs(w - near))[:count]
    A = build_dense_operator(sys)
    records = []
    for idx in order:
        lam, vec = w[idx], V[:, idx]
        rec = _make_record(sys, lam, vec)
        if rec.residual > EIG_RESIDUAL_TOL:
            lam2, vec2 = _polish_eigenpair(A, lam, vec)
            rec2 = _make_record(sys, lam2, vec2)
            if rec2.residual < rec.residual:
                rec = rec2
        if rec.residual > EIG_RESIDUAL_TOL:
            raise NumericalError(
                f"eigenpair near {lam} has residual {rec.residual:.3e} "
                f"> {EIG_RESIDUAL_TOL} after polishing")
        records.append(rec)
    records.sort(key=lambda r: abs(r.lam.imag))
    return records


def _make_record(sys: SemiDiscreteSystem, lam: complex,
                 vec: np.ndarray) -> EigenRecord:
    U = State.from_vector(vec)
    AU = apply_operator(sys, U)
    R = State(AU.u - lam * U.u, AU.v - lam * U.v,
              AU.y - lam * U.y, AU.z - lam * U.z)
    res = w_norm(sys, R) / w_norm(sys, U)
    hint = int(round(abs(lam.imag) * sys.config.L / np.pi))
    return EigenRecord(complex(lam), U, float(res), hint)


# ---------------------------------------------------------------------------
# energy-norm resolvent
# ---------------------------------------------------------------------------

class _EnergyFactor:
    """Banded Cholesky factors of the four W blocks; G = blockdiag(L_i^T)."""

    def __init__(self, sys: SemiDiscreteSystem):
        self.n = sys.n
        self.factors = []
        for blk in sys.w_blocks():
            ab = np.zeros((2, sys.n))
            ab[0] = blk.diagonal()
            ab[1, :-1] = blk.diagonal(1)
            self.factors.append(sla.cholesky_banded(ab, lower=True))

    def _blocks(self, x):
        n = self.n
        return [x[i * n:(i + 1) * n] for i in range(4)]

    def mul_g(self, x):
        """G x (apply L_i^T per block); works on vectors and matrices."""
        out = []
        for cb, xb in zip(self.factors, self._blocks(x)):
            yb = cb[0].reshape(-1, *([1] * (xb.ndim - 1))) * xb
            yb[:-1] += cb[1, :-1].reshape(-1, *([1] * (xb.ndim - 1))) * xb[1:]
            out.append(yb)
        return np.concatenate(out)

    def mul_gt(self, x):
        """G^T x (apply L_i per block)."""
        out = []
        for cb, xb in zip(self.factors, self._blocks(x)):
            yb = cb[0].reshape(-1, *([1] * (xb.ndim - 1))) * xb
            yb[1:] += cb[1, :-1].reshape(-1, *([1] * (xb.ndim - 1))) * xb[:-1]
            out.append(yb)
        return np.concatenate(out)

    def solve_g(self, b):
        """G x = b (solve with L_i^T, upper bidiagonal)."""
        out = []
        for cb, bb in zip(self.factors, self._blocks(b)):
            ab = np.zeros((2, self.n), dtype=float)
            ab[0, 1:] = cb[1, :-1]
            ab[1] = cb[0]
            out.append(sla.solve_banded((0, 1), ab, bb))
        return np.concatenate(out)

    def solve_gt(self, b):
        """G^T x = b (solve with L_i, lower bidiagonal)."""
        out = []
        for cb, bb in zip(self.factors, self._blocks(b)):
            out.append(sla.solve_banded((1, 0), cb, bb))
        return np.concatenate(out)


def _energy_factor(sys: SemiDiscreteSystem) -> _EnergyFactor:
    ef = sys._caches.get("energy_factor")
    if ef is None:
        ef = _EnergyFactor(sys)
        sys._caches["energy_factor"] = ef
    return ef


def resolvent_norm(sys: SemiDiscreteSystem, lambda_imag: float,
                   method: str = "auto", probe: State | None = None,
                   tol: float = 1e-9, max_iter: int = 400) -> ResolventSample:
    """||(i lam I - A)^{-1}|| in the energy norm.

    method:
      svd    dense singular value factorization of G (i lam - A) G^{-1}
      power  LU of (i lam - A) plus power iteration on the inverse (the
             estimate converges to the norm from below)
      modal  exact per-mode 4x4 reduction; only for uniform global layouts
      auto   svd when 4n <= 1200, else power
    """
    if method == "auto":
        method = "svd" if 4 * sys.n <= _DENSE_SVD_LIMIT else "power"
    if method == "modal":
        return ResolventSample(float(lambda_imag),
                               _modal_resolvent_norm(sys, lambda_imag), "modal")
    ef = _energy_factor(sys)
    A = build_dense_operator(sys)
    B = 1j * lambda_imag * np.eye(4 * sys.n) - A
    if method == "svd":
        C = ef.mul_g(B.astype(complex))
        C = ef.solve_gt(C.T).T  # right-multiply by G^{-1} = (G^{-T} C^T)^T
        smin = sla.svdvals(C)[-1]
        if smin <= 0:
            raise NumericalError(f"i*{lambda_imag} is an eigenvalue of the "
                                 "discrete operator")
        return ResolventSample(float(lambda_imag), float(1.0 / smin), "svd")
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    try:
        lu = sla.lu_factor(B)
    except sla.LinAlgError as exc:
        raise NumericalError(f"factorization of (i lam - A) failed: {exc}") from exc

    def cinv(x):       # C^{-1} x = G B^{-1} G^{-1} x
        return ef.mul_g(sla.lu_solve(lu, ef.solve_g(x)))

    def cinv_h(x):     # C^{-H} x = G^{-T} B^{-H} G^T x
        return ef.solve_gt(sla.lu_solve(lu, ef.mul_gt(x), trans=2))

    rng = np.random.default_rng(20240813)
    x = rng.standard_normal(4 * sys.n) + 1j * rng.standard_normal(4 * sys.n)
    if probe is not None:
        x = x * 1e-3 + ef.mul_g(probe.as_vector().astype(complex))
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iter):
        y = cinv(x)
        sigma_new = np.linalg.norm(y)
        w = cinv_h(y)
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        x = w / nw
        if abs(sigma_new - sigma) <= tol * sigma_new:
            sigma = sigma_new
            break
        sigma = sigma_new
    return ResolventSample(float(lambda_imag), float(sigma), "power")


# ---------------------------------------------------------------------------
# exact modal reduction for uniform global coefficient layouts
# ---------------------------------------------------------------------------

def _modal_data(sys: SemiDiscreteSystem):
    """(mu, b0, c0) when K_b = b0 K, M_c = c0 M, M_d = 0 on a uniform grid.

    In the M-orthonormal eigenbasis of the (K, M) pencil the 4n x 4n
    operator splits into n independent 4x4 blocks and W becomes
    diag(a mu_k, 1, mu_k, 1) per block, so the energy-norm resolvent is the
    max of the per-block scaled inverses.  Raises ConfigError otherwise.
    """
    cached = sys._caches.get("modal_data")
    if cached is not None:
        return cached
    widths = sys.grid.cell_widths
    if widths.max() - widths.min() > 1e-12 * widths.max():
        raise ConfigError("modal reduction needs a uniform grid")
    b0, c0 = sys.config.b0, sys.config.c0
    if abs(sys.K_b - b0 * sys.K).max() > 1e-12 * max(1.0, abs(b0)):
        raise ConfigError("modal reduction needs K_b = b0 K (global damping)")
    if abs(sys.M_c - c0 * sys.M).max() > 1e-12 * max(1.0, abs(c0)):
        raise ConfigError("modal reduction needs M_c = c0 M (global coupling)")
    if abs(sys.M_d).max() > 0:
        raise ConfigError("modal reduction does not cover viscous damping")
    # generalized pencil K x = mu M x, dense at desk scale
    mu = sla.eigh(sys.K.toarray(), sys.M.toarray(), eigvals_only=True)
    cached = (np.asarray(mu), b0, c0)
    sys._caches["modal_data"] = cached
    return cached


def _modal_block(mu_k: float, a: float, b0: float, c0: float) -> np.ndarray:
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-a * mu_k, -b0 * mu_k, 0.0, -c0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, c0, -mu_k, 0.0]])


def _modal_resolvent_norm(sys: SemiDiscreteSystem, lam: float) -> float:
    mu, b0, c0 = _modal_data(sys)
    a = sys.a
    n = len(mu)
    blocks = np.zeros((n, 4, 4), dtype=complex)
    for i, m in enumerate(mu):
        g = np.sqrt([a * m, 1.0, m, 1.0])
        B = 1j * lam * np.eye(4) - _modal_block(m, a, b0, c0)
        blocks[i] = (g[:, None] * B) / g[None, :]
    smin = np.linalg.svd(blocks, compute_uv=False)[:, -1]
    if np.any(smin <= 0):
        raise NumericalError("i*lam is an eigenvalue of the discrete operator")
    return float(1.0 / smin.min())


def resonance_frequencies(sys: SemiDiscreteSystem, lo: float,
                          hi: float) -> list[float]:
    """Imaginary parts of the discrete eigenvalues with Im in [lo, hi].

    Resolvent sweeps that probe only a uniform lambda grid undersample the
    narrow resonance peaks; including these frequencies makes the upper
    envelope of the sweep meaningful.
    """
    w, _ = _dense_eig(sys)
    vals = sorted(float(x.imag) for x in w if lo <= x.imag <= hi)
    return vals


def y_branch_frequency(sys: SemiDiscreteSystem, k: int) -> tuple[float, complex]:
    """Imaginary part (and full value) of the discrete y-branch eigenvalue of
    mode k for a uniform global layout.

    The probe frequencies for resolvent-growth sweeps: the discrete
    resonances sit at these shifted frequencies, not exactly at k pi / L
    (quadratic mesh dispersion moves them by far more than their tiny real
    parts at desk-scale resolutions).
    """
    mu, b0, c0 = _modal_data(sys)
    ev = np.linalg.eigvals(_modal_block(mu[k - 1], sys.a, b0, c0))
    ev = ev[ev.imag > 0]
    target = 1j * k * np.pi / sys.config.L
    lam = ev[np.argmin(np.abs(ev - target))]
    return float(lam.imag), complex(lam)


# ---------------------------------------------------------------------------
# Huang-Pruss witness
# ---------------------------------------------------------------------------

def huang_pruss_sequence(config: ProblemConfig, n: int,
                         tol: float = 1e-12) -> HuangPrussTriple:
    """Construct the explicit witness triple; verifies D1 = 0, D2 = 1."""
    if config.preset is not Preset.GLOBAL:
        raise ConfigError("Huang-Pruss sequence is defined for the global preset")
    if n < 1:
        raise ValueError(f"mode index must be >= 1, got {n}")
    L, a, b0, c0 = config.L, config.a, config.b0, config.c0
    lam = n * np.pi / L
    A_n = 1j * L / (c0 * n * np.pi)
    B_n = -1j * n * b0 * np.pi / (c0 ** 2 * L) - (a - 1.0) / c0 ** 2
    D1 = (-(L ** 2 * lam ** 2 - a * n ** 2 * np.pi ** 2
            - 1j * np.pi ** 2 * b0 * lam * n ** 2) * A_n / L ** 2
          + 1j * B_n * c0 * lam)
    D2 = -1j * A_n * c0 * lam + B_n * (np.pi ** 2 * n ** 2
                                       - L ** 2 * lam ** 2) / L ** 2
    # relative tolerances: the identities cancel terms of these magnitudes
    scale1 = abs(A_n) * (lam ** 2 + b0 * lam * n ** 2 * np.pi ** 2 / L ** 2) \
        + abs(B_n) * c0 * lam
    scale2 = abs(A_n) * c0 * lam + abs(B_n) * 2 * np.pi ** 2 * n ** 2 / L ** 2
    if abs(D1) > tol * scale1 or abs(D2 - 1.0) > tol * scale2:
        raise NumericalError(f"witness identities violated: D1={D1}, D2={D2}")
    return HuangPrussTriple(config, n, float(lam), complex(A_n), complex(B_n),
                            complex(D1), complex(D2))


def discrete_huang_pruss_check(sys: SemiDiscreteSystem,
                               triple: HuangPrussTriple) -> float:
    """|| (i lam_n I - A_h) U_n^h - F_n^h ||_W for the interpolated modes.

    Decreases at O(h^2) under mesh refinement (the displacement blocks of
    the residual vanish identically; only the two velocity blocks carry the
    finite-element consistency error).
    """
    if sys.config != triple.config:
        raise ConfigError("system was not assembled from the triple's config")
    x = sys.grid.interior
    L = sys.config.L
    s = np.sin(triple.n * np.pi * x / L)
    au, av, ay, az = triple.u_amplitudes
    U = State(au * s.astype(complex), av * s.astype(complex),
              ay * s.astype(complex), az * s.astype(complex))
    AU = apply_operator(sys, U)
    lam = 1j * triple.lambda_n
    R = State(lam * U.u - AU.u, lam * U.v - AU.v,
              lam * U.y - AU.y, lam * U.z - AU.z - s)
    return w_norm(sys, R)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def spectrum_to_csv(records: list[EigenRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("re,im,residual\n")
        for r in records:
            fh.write(f"{r.lam.real:.17g},{r.lam.imag:.17g},{r.residual:.17g}\n")


def resolvent_to_csv(samples: list[ResolventSample], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("lambda,norm\n")
        for smp in samples:
            fh.write(f"{smp.lambda_imag:.17g},{smp.norm:.17g}\n")
