"""Benchmark the compiled stepping kernel against the pure-Python fallback.

Usage:
    python benchmarks/bench_stepper.py [--n-cells 400] [--steps 20000]

Also re-checks that both backends produce the same trajectory.
"""

import argparse
import time

import numpy as np

from kvwave import stepping
from kvwave.discretize import assemble, build_grid
from kvwave.evolve import decay_probe_initial_state
from kvwave.model import ProblemConfig


def bench(ws, U0, nsteps, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        energies, final, _ = ws.run(U0, nsteps)
        best = min(best, time.perf_counter() - t0)
    return best, energies, final


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-cells", type=int, default=400)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    cfg = ProblemConfig.main_local()
    sys_ = assemble(cfg, build_grid(cfg, args.n_cells))
    U0 = decay_probe_initial_state(sys_)

    rows = []
    results = {}
    for backend in ("compiled", "python"):
        try:
            ws = stepping.StepperWorkspace(sys_, args.dt, backend=backend)
        except ImportError:
            print(f"{backend:>9}: not available")
            continue
        secs, energies, final = bench(ws, U0, args.steps)
        results[backend] = (energies, final)
        rate = args.steps / secs
        rows.append((backend, secs, rate))
        print(f"{backend:>9}: {secs:8.3f} s  ({rate:10.0f} steps/s)  "
              f"E({args.steps * args.dt:g}) = {energies[-1]:.6e}")

    if len(rows) == 2:
        print(f"  speedup: {rows[1][1] / rows[0][1]:.1f}x")
    if len(results) == 2:
        Ec, fc = results["compiled"]
        Ep, fp = results["python"]
        ediff = np.abs(Ec - Ep).max() / Ec[0]
        sdiff = np.abs(fc.as_vector() - fp.as_vector()).max()
        print(f"  agreement: max |dE|/E0 = {ediff:.2e}, "
              f"max state diff = {sdiff:.2e}")
        assert ediff < 1e-9 and sdiff < 1e-8, "backends disagree"


if __name__ == "__main__":
    main()
