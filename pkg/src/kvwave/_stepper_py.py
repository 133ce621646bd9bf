"""Pure-Python trapezoidal stepping loop (fallback for the compiled kernel).

Same algorithm as _stepper.pyx: per-step tridiagonal matvecs plus one sparse
back-substitution against a cached LU factor.  Vectorized numpy keeps this
usable when the extension is not built, at roughly an order of magnitude
slower than the compiled loop.
"""

import numpy as np


def _tri_matvec(d, e, x):
    out = d * x
    out[:-1] += e * x[1:]
    out[1:] += e * x[:-1]
    return out


def _tri_quad(d, e, x):
    return float(d @ (x * x) + 2.0 * (e @ (x[:-1] * x[1:])))


def run(Md, Me, aKd, aKe, Kd, Ke, B1d, B1e, B2d, B2e, Cd, Ce,
        lu, theta, nsteps, u, v, y, z, energies, snap_stride, snaps):
    """lu is a scipy SuperLU factor of the interleaved step matrix."""
    rhs = np.empty(2 * len(u))

    def energy():
        return 0.5 * (_tri_quad(aKd, aKe, u) + _tri_quad(Md, Me, v)
                      + _tri_quad(Kd, Ke, y) + _tri_quad(Md, Me, z))

    energies[0] = energy()
    isnap = 0
    if snap_stride > 0:
        snaps[0] = (u, v, y, z)
        isnap = 1
    for step in range(nsteps):
        p = u + theta * v
        r = y + theta * z
        rhs[0::2] = (_tri_matvec(Md, Me, v)
                     - theta * (_tri_matvec(aKd, aKe, u) + _tri_matvec(B1d, B1e, v)
                                + _tri_matvec(Cd, Ce, z) + _tri_matvec(aKd, aKe, p)))
        rhs[1::2] = (_tri_matvec(Md, Me, z)
                     - theta * (_tri_matvec(Kd, Ke, y) + _tri_matvec(B2d, B2e, z)
                                - _tri_matvec(Cd, Ce, v) + _tri_matvec(Kd, Ke, r)))
        w = lu.solve(rhs)
        v[:] = w[0::2]
        z[:] = w[1::2]
        u[:] = p + theta * v
        y[:] = r + theta * z
        energies[step + 1] = energy()
        if snap_stride > 0 and (step + 1) % snap_stride == 0:
            snaps[isnap] = (u, v, y, z)
            isnap += 1
