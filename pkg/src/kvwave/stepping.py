"""Backend selection and factor caching for the trapezoidal stepper.

The hot loop lives in the compiled extension kvwave._stepper when available;
otherwise the numpy fallback kvwave._stepper_py is used.  Set
KVWAVE_STEPPER=python or KVWAVE_STEPPER=compiled to force a backend
(forcing 'compiled' when the extension is missing is an error).
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretize import SemiDiscreteSystem, State
from .errors import NumericalError

try:
    from . import _stepper as _compiled
except ImportError:
    _compiled = None
from . import _stepper_py as _python


def _select_backend():
    choice = os.environ.get("KVWAVE_STEPPER", "").strip().lower()
    if choice == "python":
        return _python, "python"
    if choice == "compiled":
        if _compiled is None:
            raise ImportError("KVWAVE_STEPPER=compiled but kvwave._stepper "
                              "is not built (pip install -e . --no-build-isolation)")
        return _compiled, "compiled"
    if choice not in ("", "auto"):
        raise ValueError(f"unknown KVWAVE_STEPPER value {choice!r}")
    if _compiled is not None:
        return _compiled, "compiled"
    return _python, "python"


_BACKEND, _BACKEND_NAME = _select_backend()


def backend_name() -> str:
    return _BACKEND_NAME


def _diag_pair(A):
    """(main diagonal, first superdiagonal) of a symmetric tridiagonal CSR."""
    return (np.ascontiguousarray(A.diagonal()),
            np.ascontiguousarray(A.diagonal(1)))


class StepperWorkspace:
    """Banded forms plus the LU factor of the velocity step system for one dt."""

    def __init__(self, sys: SemiDiscreteSystem, dt: float,
                 backend: str | None = None):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if backend is None:
            self.backend, self.backend_name = _BACKEND, _BACKEND_NAME
        elif backend == "python":
            self.backend, self.backend_name = _python, "python"
        elif backend == "compiled":
            if _compiled is None:
                raise ImportError("compiled stepper not built")
            self.backend, self.backend_name = _compiled, "compiled"
        else:
            raise ValueError(f"unknown backend {backend!r}")
        theta = 0.5 * dt
        self.dt = dt
        self.theta = theta
        self.n = sys.n
        self.Md, self.Me = _diag_pair(sys.M)
        self.aKd, self.aKe = _diag_pair(sys.a * sys.K)
        self.Kd, self.Ke = _diag_pair(sys.K)
        self.B1d, self.B1e = _diag_pair(sys.K_b + sys.M_d)
        self.B2d, self.B2e = _diag_pair(sys.M_d)
        self.Cd, self.Ce = _diag_pair(sys.M_c)

        A1d = self.Md + theta * self.B1d + theta ** 2 * self.aKd
        A1e = self.Me + theta * self.B1e + theta ** 2 * self.aKe
        A2d = self.Md + theta * self.B2d + theta ** 2 * self.Kd
        A2e = self.Me + theta * self.B2e + theta ** 2 * self.Ke
        if self.backend_name == "compiled":
            ab = _interleaved_band(A1d, A1e, A2d, A2e,
                                   theta * self.Cd, theta * self.Ce)
            info = _compiled.factor_banded(ab)
            if info != 0:
                raise NumericalError(
                    f"step matrix factorization failed at pivot {info} "
                    "(cannot occur for dt>0 and a dissipative operator)")
            self.fact = ab
        else:
            S = _interleaved_sparse(A1d, A1e, A2d, A2e,
                                    theta * self.Cd, theta * self.Ce)
            try:
                self.fact = spla.splu(S)
            except RuntimeError as exc:
                raise NumericalError(f"step matrix factorization failed: {exc}"
                                     ) from exc

    def run(self, U: State, nsteps: int, snap_stride: int = 0):
        """Advance a copy of U by nsteps; returns (energies, final state, snaps).

        snaps is a (count, 4, n) array of states at steps 0, s, 2s, ... when
        snap_stride = s > 0, else None.
        """
        for block in (U.u, U.v, U.y, U.z):
            if np.iscomplexobj(block):
                raise TypeError("time stepping expects real states")
        u = np.array(U.u, dtype=float)
        v = np.array(U.v, dtype=float)
        y = np.array(U.y, dtype=float)
        z = np.array(U.z, dtype=float)
        energies = np.empty(nsteps + 1)
        if snap_stride > 0:
            snaps = np.empty((nsteps // snap_stride + 1, 4, self.n))
        else:
            snaps = np.empty((0, 4, self.n))
        self.backend.run(self.Md, self.Me, self.aKd, self.aKe, self.Kd, self.Ke,
                         self.B1d, self.B1e, self.B2d, self.B2e, self.Cd, self.Ce,
                         self.fact, self.theta, nsteps,
                         u, v, y, z, energies, snap_stride, snaps)
        final = State(u, v, y, z)
        return energies, final, (snaps if snap_stride > 0 else None)


def _interleaved_structure(A1d, A1e, A2d, A2e, Cd, Ce):
    """(i, j, value) triplets of [[A1, C], [-C, A2]] with v/z interleaved."""
    n = len(A1d)
    t = np.arange(n)
    s = np.arange(n - 1)
    rows, cols, vals = [], [], []

    def put(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    put(2 * t, 2 * t, A1d)
    put(2 * t + 1, 2 * t + 1, A2d)
    put(2 * s, 2 * s + 2, A1e)
    put(2 * s + 2, 2 * s, A1e)
    put(2 * s + 1, 2 * s + 3, A2e)
    put(2 * s + 3, 2 * s + 1, A2e)
    put(2 * t, 2 * t + 1, Cd)
    put(2 * t + 1, 2 * t, -Cd)
    put(2 * s, 2 * s + 3, Ce)
    put(2 * s + 2, 2 * s + 1, Ce)
    put(2 * s + 1, 2 * s + 2, -Ce)
    put(2 * s + 3, 2 * s, -Ce)
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _interleaved_band(A1d, A1e, A2d, A2e, Cd, Ce):
    """Band storage ab[3 + i - j, j] (7 rows) of the interleaved step matrix."""
    n = len(A1d)
    rows, cols, vals = _interleaved_structure(A1d, A1e, A2d, A2e, Cd, Ce)
    ab = np.zeros((7, 2 * n))
    ab[3 + rows - cols, cols] = vals
    return ab


def _interleaved_sparse(A1d, A1e, A2d, A2e, Cd, Ce):
    n = len(A1d)
    rows, cols, vals = _interleaved_structure(A1d, A1e, A2d, A2e, Cd, Ce)
    return sp.csc_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))


def workspace_for(sys: SemiDiscreteSystem, dt: float) -> StepperWorkspace:
    """Per-(system, dt) cached workspace."""
    key = ("stepper", float(dt), _BACKEND_NAME)
    ws = sys._caches.get(key)
    if ws is None:
        ws = StepperWorkspace(sys, dt)
        sys._caches[key] = ws
    return ws
