"""Transcendental spectral analysis of the transmission configuration.

The configuration: two waves on (0, 1) with unit speeds, Kelvin-Voigt
damping equal to the indicator of (1/2, 1) and a constant coupling c.  An
eigenvalue lam makes the 4x4 interface matrix M1 singular; its entries are
hyperbolic functions of the four exponents

    r1 = lam sqrt(1 + ic/lam),   r2 = lam sqrt(1 - ic/lam)        (left half)
    s1, s2  = roots of (1+lam) s^4 - lam^2 (2+lam) s^2 + lam^4 + c^2 lam^2
                                                                  (right half)

with the explicit square-root branch

    sqrt(z) = sqrt((|z|+Re z)/2) + i sign(Im z) sqrt((|z|-Re z)/2),

which keeps Re sqrt(z) >= 0 so that exp(-s2) is negligible for large |lam|.
For large |lam| in the spectral strip, det(M1) = -ic lam^{11/2} F(lam) with
F = f0 + f1 lam^{-1/2} + f2/(8 lam) + f3/(8 lam^{3/2}) + f4/(128 lam^2)
+ O(lam^{-5/2}), and the roots split into two branches localized in shrinking
balls around the zeros of f0(lam) = 2 cosh(lam/2)(cosh lam - cos^2(c/4)).

Numerical conventions adopted after direct adjudication against the exact
determinant (see the tests):

  * the f4 coefficient carries cos(c/2), and the first-branch correction
    carries the denominator (3 + cos(c/2)); the competing variants
    (cosh(c/2), 2 + cos(c/2)) are rejected by the refined roots but remain
    available through function parameters for comparison;
  * det(M1) is conjugate-antisymmetric, det(M1)(conj lam) = -conj(det(M1)),
    because conjugation swaps the r1/r2 columns; roots still come in
    conjugate pairs.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

#: default half-width of the root-search strip: Re(lam) in [-1, 0.1]
STRIP_RE_MIN = -1.0
STRIP_RE_MAX = 0.1

#: |det| <= DET_TOL * |det'| * radius declares a refined root converged
DET_TOL = 1e-9


def branch_sqrt(z: complex) -> complex:
    """Square root with Re >= 0: sign(Im z) picks the half-plane for Im.

    Equals sqrt((|z|+Re z)/2) + i sign(Im z) sqrt((|z|-Re z)/2); the smaller
    of the two components is recovered from Re(w) Im(w) = Im(z)/2 to avoid
    the cancellation in |z| -+ Re z near the real axis.
    """
    z = complex(z)
    az = abs(z)
    s = 1.0 if z.imag >= 0 else -1.0
    if z.real >= 0:
        re = math.sqrt((az + z.real) / 2.0)
        im = s * math.sqrt(max((az - z.real) / 2.0, 0.0)) if re == 0.0 \
            else z.imag / (2.0 * re)
    else:
        im = s * math.sqrt((az - z.real) / 2.0)
        re = math.sqrt(max((az + z.real) / 2.0, 0.0)) if im == 0.0 \
            else z.imag / (2.0 * im)
    return complex(re, im)


@dataclass(frozen=True)
class BranchExponents:
    r1: complex
    r2: complex
    s1: complex
    s2: complex


def branch_exponents(lam: complex, c: float) -> BranchExponents:
    """The four exponents at lam; lam = 0 is outside the domain."""
    lam = complex(lam)
    if lam == 0:
        raise DomainError("exponents are undefined at lam = 0")
    r1 = lam * branch_sqrt(1 + 1j * c / lam)
    r2 = lam * branch_sqrt(1 - 1j * c / lam)
    disc = branch_sqrt(1 - 4 * c ** 2 / lam ** 3 - 4 * c ** 2 / lam ** 4)
    denom = 2 * (1 + 1 / lam)
    s1 = lam * branch_sqrt((1 + 2 / lam + disc) / denom)
    s2 = branch_sqrt(lam) * branch_sqrt((lam + 2 - lam * disc) / denom)
    return BranchExponents(r1, r2, s1, s2)


def _scaled_ch_sh(w: complex, sigma: float) -> tuple[complex, complex]:
    """(cosh(w), sinh(w)) times exp(-sigma), computed without overflow."""
    ep = cmath.exp(w - sigma)
    em = cmath.exp(-w - sigma)
    return 0.5 * (ep + em), 0.5 * (ep - em)


def _det_m1(lam: complex, c: float,
            col_scales: tuple[float, float, float, float] | None = None
            ) -> tuple[complex, float]:
    """(scaled det(M1), total log scale): det(M1) = value * exp(log_scale).

    Column j is divided by exp(col_scales[j]); by default the scales are
    (Re r1 / 2, Re r2 / 2, Re s1 / 2, max(0, -Re s2)), which keeps every
    entry bounded on the strip for |lam| up to 1e4.  Passing frozen scales
    keeps the function analytic during Newton refinement.
    """
    e = branch_exponents(lam, c)
    r1, r2, s1, s2 = e.r1, e.r2, e.s1, e.s2
    if col_scales is None:
        col_scales = (0.5 * r1.real, 0.5 * r2.real, 0.5 * s1.real,
                      max(0.0, -s2.real))
    ch1, sh1 = _scaled_ch_sh(0.5 * r1, col_scales[0])
    ch2, sh2 = _scaled_ch_sh(0.5 * r2, col_scales[1])
    ch3, sh3 = _scaled_ch_sh(0.5 * s1, col_scales[2])
    e4a = cmath.exp(-col_scales[3])
    e4b = cmath.exp(-s2 - col_scales[3])
    g1 = -s1 * (s1 ** 2 - lam * (lam ** 2 - s1 ** 2))
    g2 = -s2 * (s2 ** 2 - lam * (lam ** 2 - s2 ** 2))
    M = np.array([
        [sh1, sh2, sh3, e4a - e4b],
        [r1 * ch1, r2 * ch2, -s1 * ch3, -s2 * (e4a + e4b)],
        [r1 ** 2 * sh1, r2 ** 2 * sh2, s1 ** 2 * sh3, s2 ** 2 * (e4a - e4b)],
        [r1 ** 3 * ch1, r2 ** 3 * ch2, g1 * ch3, g2 * (e4a + e4b)],
    ], dtype=complex)
    det = complex(np.linalg.det(M))
    if not (math.isfinite(det.real) and math.isfinite(det.imag)):
        raise NumericalError(f"characteristic determinant overflowed despite "
                             f"scaling at |lam| = {abs(lam):.3g}")
    return det, float(sum(col_scales))


def char_det(lam: complex, c: float) -> complex:
    """Rescaled characteristic determinant (same zero set as det(M1))."""
    return _det_m1(lam, c)[0]


def char_det_with_scale(lam: complex, c: float) -> tuple[complex, float]:
    """(scaled determinant, log scale) with det(M1) = value * exp(log_scale)."""
    return _det_m1(lam, c)


def char_det_f1f2(lam: complex, c: float) -> complex:
    """det(M1) through the explicit six-term sums F1 + F2 exp(-s2).

    Independent of the matrix evaluation path; used to cross-validate
    char_det (unscaled: intended for moderate |lam| on the strip).
    """
    e = branch_exponents(lam, c)
    r1, r2, s1, s2 = e.r1, e.r2, e.s1, e.s2
    ch = cmath.cosh
    sh = cmath.sinh
    a1 = sh(r1 / 2) * sh(r2 / 2) * ch(s1 / 2)
    a2 = ch(r1 / 2) * sh(r2 / 2) * sh(s1 / 2)
    a3 = sh(r1 / 2) * ch(r2 / 2) * sh(s1 / 2)
    a4 = ch(r1 / 2) * ch(r2 / 2) * sh(s1 / 2)
    a5 = sh(r1 / 2) * ch(r2 / 2) * ch(s1 / 2)
    a6 = ch(r1 / 2) * sh(r2 / 2) * ch(s1 / 2)
    t1 = s1 * s2 * (r1 ** 2 - r2 ** 2) * (s1 ** 2 - s2 ** 2) * (lam + 1) * a1
    t2 = r1 * s2 * (r2 ** 2 - s1 ** 2) * ((lam ** 2 - s2 ** 2) * lam
                                          + r1 ** 2 - s2 ** 2) * a2
    t3 = r2 * s2 * (r1 ** 2 - s1 ** 2) * ((lam ** 2 - s2 ** 2) * lam
                                          + r2 ** 2 - s2 ** 2) * a3
    t4 = r1 * r2 * (r1 ** 2 - r2 ** 2) * (s1 ** 2 - s2 ** 2) * a4
    t5 = r2 * s1 * (r1 ** 2 - s2 ** 2) * ((lam ** 2 - s1 ** 2) * lam
                                          + r2 ** 2 - s1 ** 2) * a5
    t6 = r1 * s1 * (r2 ** 2 - s2 ** 2) * ((lam ** 2 - s1 ** 2) * lam
                                          + r1 ** 2 - s1 ** 2) * a6
    f1 = -t1 + t2 - t3 - t4 + t5 - t6
    f2 = -t1 + t2 - t3 + t4 - t5 + t6
    return f1 + f2 * cmath.exp(-s2)


# ---------------------------------------------------------------------------
# asymptotic expansion
# ---------------------------------------------------------------------------

def f0(lam: complex, c: float) -> complex:
    return cmath.cosh(1.5 * lam) - cmath.cosh(0.5 * lam) * math.cos(0.5 * c)


def f0_factored(lam: complex, c: float) -> complex:
    """Equivalent product form 2 cosh(lam/2) (cosh lam - cos^2(c/4))."""
    return 2 * cmath.cosh(0.5 * lam) * (cmath.cosh(lam) - math.cos(0.25 * c) ** 2)


def asymptotic_F(lam: complex, c: float, f4_form: str = "cos") -> complex:
    """F(lam) truncated after the lam^-2 term; valid in the regime |lam| >= 10.

    det(M1) ~ -ic lam^{11/2} F(lam) with an O(lam^{-5/2}) remainder.
    f4_form selects the constant inside f4: "cos" (matches the exact
    determinant; default) or "cosh" (rejected variant, kept for comparison;
    it leaves an O(lam^-2) remainder).
    """
    lam = complex(lam)
    ch3 = cmath.cosh(1.5 * lam)
    sh3 = cmath.sinh(1.5 * lam)
    chh = cmath.cosh(0.5 * lam)
    shh = cmath.sinh(0.5 * lam)
    cos_c2 = math.cos(0.5 * c)
    sin_c2 = math.sin(0.5 * c)
    if f4_form == "cos":
        c_half = math.cos(0.5 * c)
    elif f4_form == "cosh":
        c_half = math.cosh(0.5 * c)
    else:
        raise ValueError(f"f4_form must be 'cos' or 'cosh', got {f4_form!r}")
    f0v = ch3 - chh * cos_c2
    f1v = sh3 + shh * cos_c2
    f2v = c ** 2 * sh3 - 4 * ch3 + 4 * (chh * cos_c2 + c * shh * sin_c2)
    f3v = -8 * sh3 + c ** 2 * ch3 - 12 * c * chh * sin_c2 - 8 * shh * cos_c2
    f4v = (-40 * c ** 2 * sh3 + (c ** 4 + 72 * c ** 2 + 48) * ch3
           + 32 * c * (c * cos_c2 + 7 * sin_c2) * shh
           - (8 * c ** 2 + 8 * c ** 3 * sin_c2
              + 16 * (4 * c ** 2 + 3) * c_half) * chh)
    rt = branch_sqrt(lam)
    return (f0v + f1v / rt + f2v / (8 * lam) + f3v / (8 * lam * rt)
            + f4v / (128 * lam ** 2))


def f0_roots(n: int, c: float) -> tuple[complex, complex]:
    """The two root families of f0: (2n+1) pi i and 2n pi i + i arccos(cos^2(c/4))."""
    mu1 = 1j * (2 * n + 1) * math.pi
    mu2 = 2j * n * math.pi + 1j * math.acos(math.cos(0.25 * c) ** 2)
    return mu1, mu2


def gamma_constant(c: float) -> float:
    """Real decay coefficient of the second branch when sin(c/4) != 0."""
    th = math.acos(math.cos(0.25 * c) ** 2)
    num = math.cos(0.5 * c) * math.sin(0.5 * th) + math.sin(1.5 * th)
    den = 4 * math.sqrt(1 - math.cos(0.25 * c) ** 4) * math.cos(0.5 * th)
    return num / den


class BranchCase(enum.Enum):
    SIN_NONZERO = "sin_nonzero"
    SIN_ZERO = "sin_zero"


def branch_case(c: float, tol: float = 1e-12) -> BranchCase:
    return BranchCase.SIN_ZERO if abs(math.sin(0.25 * c)) <= tol \
        else BranchCase.SIN_NONZERO


@dataclass(frozen=True)
class AsymptoticBranch:
    branch: int
    case: BranchCase
    gamma: float | None

    @classmethod
    def for_coupling(cls, branch: int, c: float) -> "AsymptoticBranch":
        case = branch_case(c)
        g = gamma_constant(c) if (branch == 2 and case is BranchCase.SIN_NONZERO) \
            else None
        return cls(branch, case, g)


def asymptotic_eigenvalue(branch: int, n: int, c: float,
                          denominator: str = "3+cos") -> complex:
    """Truncated asymptotic eigenvalue of the given branch and index.

    `denominator` selects the first-branch correction constant among the
    two candidates "3+cos" and "2+cos" of c/2; the refined roots decide
    between them (they match 3+cos).
    """
    if n == 0:
        raise DomainError("branch formulas need |n| >= 1")
    sgn = 1.0 if n > 0 else -1.0
    case = branch_case(c)
    mu1, mu2 = f0_roots(n, c)
    if branch == 1:
        if case is BranchCase.SIN_NONZERO:
            if denominator == "3+cos":
                den = 3.0 + math.cos(0.5 * c)
            elif denominator == "2+cos":
                den = 2.0 + math.cos(0.5 * c)
            else:
                raise ValueError(f"unknown denominator {denominator!r}")
            corr = -2 * math.sin(0.25 * c) ** 2 * (1 - 1j * sgn) \
                / (den * math.sqrt(abs(n) * math.pi))
            return mu1 + corr
        return (mu1 + 1j * c ** 2 / (32 * math.pi * n)
                - (4 + 1j * math.pi) * c ** 2 / (64 * math.pi ** 2 * n ** 2))
    if branch == 2:
        if case is BranchCase.SIN_NONZERO:
            g = gamma_constant(c)
            return mu2 + g * (-1 + 1j * sgn) / math.sqrt(abs(n) * math.pi)
        return 2j * n * math.pi
    raise ValueError(f"branch must be 1 or 2, got {branch}")


# ---------------------------------------------------------------------------
# root refinement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootRecord:
    branch: int
    n: int
    root: complex
    det_value_at_root: complex
    newton_iters: int
    ball_center: complex
    ball_radius: float


def _derivative(f, lam: complex) -> complex:
    h = 1e-6 * max(1.0, abs(lam))
    return (f(lam + h) - f(lam - h)) / (2 * h)


def _muller_step(f, x0, x1, x2):
    f0_, f1_, f2_ = f(x0), f(x1), f(x2)
    q = (x2 - x1) / (x1 - x0)
    a = q * f2_ - q * (1 + q) * f1_ + q ** 2 * f0_
    b = (2 * q + 1) * f2_ - (1 + q) ** 2 * f1_ + q ** 2 * f0_
    cc = (1 + q) * f2_
    disc = cmath.sqrt(b ** 2 - 4 * a * cc)
    den = b + disc if abs(b + disc) > abs(b - disc) else b - disc
    if den == 0:
        raise NumericalError("Muller step degenerate")
    return x2 - (x2 - x1) * 2 * cc / den


def refine_root(lam0: complex, c: float, radius: float,
                branch: int = 0, n: int = 0, max_iter: int = 100) -> RootRecord:
    """Newton refinement of a characteristic root inside B(lam0, radius).

    Central-difference derivatives on the determinant with column scales
    frozen at lam0 (the frozen scaling keeps the iterated function analytic).
    Newton stagnation triggers a Muller fallback.  Raises NumericalError on
    non-convergence (carrying the best iterate in the message) or when the
    converged root escapes the ball ("localization violated").
    """
    if radius <= 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if not (STRIP_RE_MIN - radius <= lam0.real <= STRIP_RE_MAX + radius):
        raise DomainError(f"start {lam0} outside the spectral strip "
                          f"Re in [{STRIP_RE_MIN}, {STRIP_RE_MAX}] "
                          "(extended by the ball radius)")
    e = branch_exponents(lam0, c)
    frozen = (0.5 * e.r1.real, 0.5 * e.r2.real, 0.5 * e.s1.real,
              max(0.0, -e.s2.real))

    def f(lam: complex) -> complex:
        return _det_m1(lam, c, frozen)[0]

    lam = complex(lam0)
    best = (abs(f(lam)), lam)
    newton_iters = 0
    stagnant = 0
    for it in range(max_iter):
        fv = f(lam)
        if abs(fv) < best[0]:
            best = (abs(fv), lam)
        dfv = _derivative(f, lam)
        scale = abs(dfv) * radius
        if scale > 0 and abs(fv) <= DET_TOL * scale:
            newton_iters = it
            break
        if dfv == 0 or not math.isfinite(abs(dfv)):
            stagnant = 3
        else:
            step = fv / dfv
            nxt = lam - step
            if abs(nxt - lam0) > 1.5 * radius:
                # damped pull-back toward the ball
                nxt = lam - step * (0.5 * radius / abs(step))
                stagnant += 1
            elif abs(f(nxt)) > 0.7 * abs(fv):
                stagnant += 1
            else:
                stagnant = 0
            lam = nxt
        if stagnant >= 3:
            h = 0.05 * radius
            try:
                lam = _muller_step(f, lam + h, lam - h, lam)
            except NumericalError:
                pass
            stagnant = 0
    else:
        raise NumericalError(
            f"no convergence in {max_iter} iterations; best iterate "
            f"{best[1]} with |det| = {best[0]:.3e}")
    if abs(lam - lam0) > radius:
        raise NumericalError(f"localization violated: root {lam} escaped "
                             f"B({lam0}, {radius})")
    return RootRecord(branch, n, lam, f(lam), newton_iters, complex(lam0),
                      float(radius))


def count_zeros_in_ball(center: complex, radius: float, c: float,
                        n_points: int = 256, snap_tol: float = 0.2) -> int:
    """Argument-principle zero count of det(M1) inside B(center, radius)."""
    theta = np.linspace(0.0, 2 * np.pi, n_points + 1)
    zs = center + radius * np.exp(1j * theta)
    vals = np.array([char_det(z, c) for z in zs])
    if np.any(vals == 0):
        raise NumericalError("determinant vanished on the contour; "
                             "perturb the radius")
    winding = float(np.sum(np.angle(vals[1:] / vals[:-1]))) / (2 * np.pi)
    snapped = round(winding)
    if abs(winding - snapped) > snap_tol:
        raise NumericalError(f"winding number {winding:.3f} does not snap to "
                             "an integer; increase n_points")
    return int(snapped)


# ---------------------------------------------------------------------------
# closed-form kernel determinants (real lam, boundary matrices at alpha3)
# ---------------------------------------------------------------------------

class KernelCase(enum.Enum):
    LT = "lt"   # lam^2 < c0^2
    EQ = "eq"   # lam^2 = c0^2
    GT = "gt"   # lam^2 > c0^2


def kernel_m_roots(lam: float, a: float, c0: float) -> tuple[float, float]:
    """Roots m1 < m2 of a m^2 + (a+1) lam^2 m + lam^2 (lam^2 - c0^2)."""
    disc = math.sqrt(lam ** 4 * (a - 1) ** 2 + 4 * a * c0 ** 2 * lam ** 2)
    m1 = (-lam ** 2 * (a + 1) - disc) / (2 * a)
    m2 = (-lam ** 2 * (a + 1) + disc) / (2 * a)
    return m1, m2


def kernel_matrix(case: KernelCase | str, lam: float, a: float, c0: float,
                  alpha3: float) -> np.ndarray:
    """Boundary matrix at alpha3 of the no-eigenvalue argument, per case.

    The (3,4) entry of the oscillatory/oscillatory case follows the
    general solution, (lam^2 - a r2^2)/(i lam c0) cos(r2 alpha3): flipping
    that sign is inconsistent with the fourth row and breaks the closed
    form.
    """
    case = KernelCase(case)
    _check_case(case, lam, c0)
    m1, m2 = kernel_m_roots(lam, a, c0)
    x = alpha3
    ilc = 1j * lam * c0
    if case is KernelCase.LT:
        r1, r2 = math.sqrt(-m1), math.sqrt(m2)
        k1 = (lam ** 2 - a * r1 ** 2) / ilc
        k2 = (lam ** 2 + a * r2 ** 2) / ilc
        c1, s1 = math.cos(r1 * x), math.sin(r1 * x)
        ch, sh = math.cosh(r2 * x), math.sinh(r2 * x)
        return np.array([
            [s1, c1, ch, sh],
            [r1 * c1, -r1 * s1, r2 * sh, r2 * ch],
            [k1 * s1, k1 * c1, k2 * ch, k2 * sh],
            [k1 * r1 * c1, -k1 * r1 * s1, k2 * r2 * sh, k2 * r2 * ch]],
            dtype=complex)
    if case is KernelCase.EQ:
        r1 = math.sqrt((a + 1) * c0 ** 2 / a)
        k1 = (lam ** 2 - a * r1 ** 2) / ilc
        k3 = lam / (1j * c0)
        c1, s1 = math.cos(r1 * x), math.sin(r1 * x)
        return np.array([
            [s1, c1, x, 1.0],
            [r1 * c1, -r1 * s1, 1.0, 0.0],
            [k1 * s1, k1 * c1, k3 * x, k3],
            [k1 * r1 * c1, -k1 * r1 * s1, k3, 0.0]], dtype=complex)
    r1, r2 = math.sqrt(-m1), math.sqrt(-m2)
    k1 = (lam ** 2 - a * r1 ** 2) / ilc
    k2 = (lam ** 2 - a * r2 ** 2) / ilc
    c1, s1 = math.cos(r1 * x), math.sin(r1 * x)
    c2, s2 = math.cos(r2 * x), math.sin(r2 * x)
    return np.array([
        [s1, c1, s2, c2],
        [r1 * c1, -r1 * s1, r2 * c2, -r2 * s2],
        [k1 * s1, k1 * c1, k2 * s2, k2 * c2],
        [k1 * r1 * c1, -k1 * r1 * s1, k2 * r2 * c2, -k2 * r2 * s2]],
        dtype=complex)


def kernel_closed_form(case: KernelCase | str, lam: float, a: float,
                       c0: float) -> complex:
    """Closed-form determinant per case.

    lt:  r1 r2 a^2 (r1^2 + r2^2)^2 / (lam^2 c0^2)
    eq:  -a^2 r1^5 / (lam^2 c0^2)
    gt:  -r1 r2 a^2 (r1^2 - r2^2)^2 / (lam^2 c0^2)

    The gt case carries lam^2 in the denominator; with lam instead the
    direct determinant is off by exactly a factor lam.
    """
    case = KernelCase(case)
    _check_case(case, lam, c0)
    m1, m2 = kernel_m_roots(lam, a, c0)
    if case is KernelCase.LT:
        r1, r2 = math.sqrt(-m1), math.sqrt(m2)
        return r1 * r2 * a ** 2 * (r1 ** 2 + r2 ** 2) ** 2 / (lam ** 2 * c0 ** 2)
    if case is KernelCase.EQ:
        r1 = math.sqrt((a + 1) * c0 ** 2 / a)
        return -a ** 2 * r1 ** 5 / (lam ** 2 * c0 ** 2)
    r1, r2 = math.sqrt(-m1), math.sqrt(-m2)
    return -r1 * r2 * a ** 2 * (r1 ** 2 - r2 ** 2) ** 2 / (lam ** 2 * c0 ** 2)


def _check_case(case: KernelCase, lam: float, c0: float) -> None:
    if lam == 0:
        raise DomainError("kernel determinants need lam != 0")
    d = lam ** 2 - c0 ** 2
    tol = 1e-12 * max(lam ** 2, c0 ** 2)
    if case is KernelCase.LT and not d < -tol:
        raise DomainError(f"case lt needs lam^2 < c0^2, got lam={lam}, c0={c0}")
    if case is KernelCase.EQ and not abs(d) <= tol:
        raise DomainError(f"case eq needs lam^2 = c0^2, got lam={lam}, c0={c0}")
    if case is KernelCase.GT and not d > tol:
        raise DomainError(f"case gt needs lam^2 > c0^2, got lam={lam}, c0={c0}")


def kernel_det(case: KernelCase | str, lam: float, a: float, c0: float,
               alpha3: float) -> tuple[complex, complex]:
    """(closed form, direct 4x4 determinant); the two agree to ~1e-10 relative."""
    closed = kernel_closed_form(case, lam, a, c0)
    direct = complex(np.linalg.det(kernel_matrix(case, lam, a, c0, alpha3)))
    return closed, direct


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def roots_to_csv(records_with_asym, path: str) -> None:
    """Rows of (record, asymptotic value) as branch,n,re,im,asym_re,asym_im,abs_err."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("branch,n,re,im,asym_re,asym_im,abs_err\n")
        for rec, asym in records_with_asym:
            err = abs(rec.root - asym)
            fh.write(f"{rec.branch},{rec.n},{rec.root.real:.17g},"
                     f"{rec.root.imag:.17g},{asym.real:.17g},"
                     f"{asym.imag:.17g},{err:.17g}\n")
