# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trapezoidal stepping loop.

One step of the trapezoidal rule on the first-order system reduces, after
eliminating the displacement updates, to a banded solve for the velocities:

    [ M + th*B1 + th^2 aK      th*C          ] [v+]   [ q - th*aK*p ]
    [      -th*C           M + th*B2 + th^2 K] [z+] = [ s - th*K*r  ]

with p = u + th*v, r = y + th*z, q = M v - th(aK u + B1 v + C z),
s = M z - th(K y + B2 z - C v), B1 = K_b + M_d, B2 = M_d, C = M_c and
th = dt/2.  Interleaving v and z gives bandwidth 3.

The banded LU is computed here without pivoting: the symmetric part of the
step matrix is blockdiag(A1, A2), both symmetric positive definite, so every
pivot of the elimination is positive.  Band storage is ab[3 + i - j, j] for
|i - j| <= 3 (row 3 = main diagonal), C-ordered with shape (7, 2n).
"""

import numpy as np

from libc.math cimport isfinite


def factor_banded(double[:, ::1] ab):
    """In-place LU (no pivoting) of a bandwidth-3 matrix in ab[3+i-j, j].

    L's multipliers overwrite the subdiagonal rows, U the rest.  Returns 0
    on success or j+1 when pivot j is zero/non-finite.
    """
    cdef Py_ssize_t n = ab.shape[1]
    cdef Py_ssize_t j, i, k, imax, kmax
    cdef double piv, m
    for j in range(n):
        piv = ab[3, j]
        if piv == 0.0 or not isfinite(piv):
            return <int> (j + 1)
        imax = j + 4 if j + 4 < n else n
        for i in range(j + 1, imax):
            m = ab[3 + (i - j), j] / piv
            ab[3 + (i - j), j] = m
            kmax = j + 4 if j + 4 < n else n
            for k in range(j + 1, kmax):
                ab[3 + i - k, k] -= m * ab[3 + j - k, k]
    return 0


cdef inline void solve_banded(const double[:, ::1] ab, double[::1] b) noexcept nogil:
    cdef Py_ssize_t n = ab.shape[1]
    cdef Py_ssize_t i, j, imax, jmax
    for j in range(n):                      # L y = b (unit lower)
        imax = j + 4 if j + 4 < n else n
        for i in range(j + 1, imax):
            b[i] -= ab[3 + i - j, j] * b[j]
    for i in range(n - 1, -1, -1):          # U x = y
        jmax = i + 4 if i + 4 < n else n
        for j in range(i + 1, jmax):
            b[i] -= ab[3 + i - j, j] * b[j]
        b[i] /= ab[3, i]


cdef inline void tri_matvec(const double[::1] d, const double[::1] e,
                            const double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    out[0] = d[0] * x[0] + e[0] * x[1]
    for i in range(1, n - 1):
        out[i] = e[i - 1] * x[i - 1] + d[i] * x[i] + e[i] * x[i + 1]
    out[n - 1] = e[n - 2] * x[n - 2] + d[n - 1] * x[n - 1]


cdef inline double tri_quad(const double[::1] d, const double[::1] e,
                            const double[::1] x) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += d[i] * x[i] * x[i]
    for i in range(n - 1):
        acc += 2.0 * e[i] * x[i] * x[i + 1]
    return acc


def run(const double[::1] Md, const double[::1] Me,
        const double[::1] aKd, const double[::1] aKe,
        const double[::1] Kd, const double[::1] Ke,
        const double[::1] B1d, const double[::1] B1e,
        const double[::1] B2d, const double[::1] B2e,
        const double[::1] Cd, const double[::1] Ce,
        const double[:, ::1] fact,
        double theta, Py_ssize_t nsteps,
        double[::1] u, double[::1] v, double[::1] y, double[::1] z,
        double[::1] energies,
        Py_ssize_t snap_stride, double[:, :, ::1] snaps):
    """Advance (u, v, y, z) in place by nsteps trapezoidal steps.

    energies has length nsteps+1 and receives E at every step including the
    initial state.  If snap_stride > 0, snaps[k] receives the state at step
    k*snap_stride (snaps must have shape (nsteps//snap_stride + 1, 4, n)).
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t step, i, isnap = 0

    work = np.empty((5, n))
    rhs_arr = np.empty(2 * n)
    cdef double[::1] p = work[0]
    cdef double[::1] r = work[1]
    cdef double[::1] t1 = work[2]
    cdef double[::1] t2 = work[3]
    cdef double[::1] t3 = work[4]
    cdef double[::1] rhs = rhs_arr

    energies[0] = 0.5 * (tri_quad(aKd, aKe, u) + tri_quad(Md, Me, v)
                         + tri_quad(Kd, Ke, y) + tri_quad(Md, Me, z))
    if snap_stride > 0:
        for i in range(n):
            snaps[0, 0, i] = u[i]; snaps[0, 1, i] = v[i]
            snaps[0, 2, i] = y[i]; snaps[0, 3, i] = z[i]
        isnap = 1

    for step in range(nsteps):
        with nogil:
            for i in range(n):
                p[i] = u[i] + theta * v[i]
                r[i] = y[i] + theta * z[i]
            tri_matvec(Md, Me, v, t1)
            tri_matvec(aKd, aKe, u, t2)
            tri_matvec(B1d, B1e, v, t3)
            for i in range(n):
                rhs[2 * i] = t1[i] - theta * (t2[i] + t3[i])
            tri_matvec(Cd, Ce, z, t1)
            tri_matvec(aKd, aKe, p, t2)
            for i in range(n):
                rhs[2 * i] -= theta * (t1[i] + t2[i])
            tri_matvec(Md, Me, z, t1)
            tri_matvec(Kd, Ke, y, t2)
            tri_matvec(B2d, B2e, z, t3)
            for i in range(n):
                rhs[2 * i + 1] = t1[i] - theta * (t2[i] + t3[i])
            tri_matvec(Cd, Ce, v, t1)
            tri_matvec(Kd, Ke, r, t2)
            for i in range(n):
                rhs[2 * i + 1] += theta * t1[i] - theta * t2[i]

            solve_banded(fact, rhs)

            for i in range(n):
                v[i] = rhs[2 * i]
                z[i] = rhs[2 * i + 1]
                u[i] = p[i] + theta * v[i]
                y[i] = r[i] + theta * z[i]
            energies[step + 1] = 0.5 * (tri_quad(aKd, aKe, u) + tri_quad(Md, Me, v)
                                        + tri_quad(Kd, Ke, y) + tri_quad(Md, Me, z))
        if snap_stride > 0 and (step + 1) % snap_stride == 0:
            for i in range(n):
                snaps[isnap, 0, i] = u[i]; snaps[isnap, 1, i] = v[i]
                snaps[isnap, 2, i] = y[i]; snaps[isnap, 3, i] = z[i]
            isnap += 1
    return None
