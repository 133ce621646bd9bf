"""Batch experiment runner.

Subcommands (one per experiment kind):

    simulate    time integration + decay-law fits        -> trajectory.csv
    spectrum    eigenvalues near a target                -> spectrum.csv
    resolvent   energy-norm resolvent sweep along i*R    -> resolvent.csv
    huangpruss  witness identities + discrete residuals  -> huangpruss.csv
    roots       characteristic roots vs asymptotics      -> roots.csv
    kerncheck   closed-form vs direct kernel dets        -> kerncheck.csv
    aux         auxiliary system: exponential fit + sweep-> aux_*.csv

Common flags: --config PATH --out DIR [--jobs N] [--seed U64].  Outputs are
written atomically (temp file + rename), each CSV gets a .meta.txt echoing
the fully resolved configuration and a gnuplot-compatible .gp plot script.
Runs are deterministic for a fixed config and seed.  Exit codes: 0 success,
1 usage/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import enum
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, charroots, evolve, spectrum
from .discretize import assemble, build_grid
from .errors import ConfigError, DomainError, GridError, NumericalError
from .model import (Preset, ProblemConfig, problem_from_text,
                    read_config_text, validate)


class ExperimentKind(enum.Enum):
    SIMULATE = "simulate"
    SPECTRUM = "spectrum"
    RESOLVENT_SWEEP = "resolvent_sweep"
    HUANG_PRUSS = "huang_pruss"
    CHAR_ROOTS = "char_roots"
    KERNEL_CHECK = "kernel_check"
    AUX_CHECK = "aux_check"


_SUBCOMMANDS = {
    "simulate": ExperimentKind.SIMULATE,
    "spectrum": ExperimentKind.SPECTRUM,
    "resolvent": ExperimentKind.RESOLVENT_SWEEP,
    "huangpruss": ExperimentKind.HUANG_PRUSS,
    "roots": ExperimentKind.CHAR_ROOTS,
    "kerncheck": ExperimentKind.KERNEL_CHECK,
    "aux": ExperimentKind.AUX_CHECK,
}

#: allowed [experiment] keys and their defaults, per kind
_EXPERIMENT_KEYS = {
    ExperimentKind.SIMULATE: dict(n_cells=400, dt=1e-3, T=200.0,
                                  snapshot_stride=0, fit_t_min=10.0,
                                  fit_t_max=None, initial="multimode"),
    ExperimentKind.SPECTRUM: dict(n_cells=200, count=24, near_im=0.0,
                                  near_re=0.0),
    ExperimentKind.RESOLVENT_SWEEP: dict(n_cells=200, lambda_min=1.0,
                                         lambda_max=200.0, lambda_count=80,
                                         method="auto", probe="grid",
                                         k_min=5, k_max=60),
    ExperimentKind.HUANG_PRUSS: dict(n_min=1, n_max=200,
                                     mesh_levels="64 128 256", witness_n=1),
    ExperimentKind.CHAR_ROOTS: dict(n_min=10, n_max=60),
    ExperimentKind.KERNEL_CHECK: dict(draws=1000),
    ExperimentKind.AUX_CHECK: dict(n_cells=400, dt=1e-3, T=50.0,
                                   fit_t_min=5.0, lambda_min=1.0,
                                   lambda_max=200.0, lambda_count=60,
                                   sweep_n_cells=200),
}

_INT_KEYS = {"n_cells", "snapshot_stride", "count", "lambda_count", "n_min",
             "n_max", "draws", "k_min", "k_max", "witness_n", "sweep_n_cells"}
_STR_KEYS = {"initial", "method", "probe", "mesh_levels"}


@dataclass
class ExperimentSpec:
    kind: ExperimentKind
    config: ProblemConfig
    params: dict
    out_dir: str
    seed: int = 0
    jobs: int = 1
    source_path: str = ""


def parse_config(path: str, kind: ExperimentKind | str,
                 out_dir: str = ".", seed: int = 0, jobs: int = 1
                 ) -> ExperimentSpec:
    """Strict parse of a config file for the given experiment kind."""
    kind = ExperimentKind(kind)
    text = read_config_text(path)
    config = problem_from_text(text)
    allowed = _EXPERIMENT_KEYS[kind]
    text.check_keys("experiment", set(allowed))
    params = {}
    for key, default in allowed.items():
        if key in _STR_KEYS:
            params[key] = text.get("experiment", key, default)
        elif key in _INT_KEYS:
            val = text.getint("experiment", key, default)
            params[key] = val
        else:
            val = text.getfloat("experiment", key, default)
            params[key] = val
    if params.get("fit_t_max") is None and "T" in params:
        params["fit_t_max"] = params["T"]
    return ExperimentSpec(kind, config, params, out_dir, seed, jobs, str(path))


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


class _OutputSet:
    """Atomic writes; removes everything already written if a run fails."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.paths: list[str] = []

    def write_text(self, name: str, content: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.paths.append(path)
        return path

    def write_csv(self, name: str, header: list[str], rows) -> str:
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(x) for x in row))
        return self.write_text(name, "\n".join(lines) + "\n")

    def discard_all(self) -> None:
        for p in self.paths:
            try:
                os.unlink(p)
            except OSError:
                pass


def _metadata(spec: ExperimentSpec, extra: dict | None = None) -> str:
    lines = [f"tool = kvwave {__version__}",
             f"kind = {spec.kind.value}",
             f"seed = {spec.seed}",
             f"preset = {spec.config.preset.value}",
             f"L = {_fmt(spec.config.L)}",
             f"a = {_fmt(spec.config.a)}",
             f"b0 = {_fmt(spec.config.b0)}",
             f"c0 = {_fmt(spec.config.c0)}",
             f"alphas = {' '.join(_fmt(x) for x in spec.config.alphas)}"]
    if spec.config.epsilon is not None:
        lines.append(f"epsilon = {_fmt(spec.config.epsilon)}")
    for key in sorted(spec.params):
        lines.append(f"{key} = {_fmt(spec.params[key])}")
    for key in sorted(extra or {}):
        lines.append(f"{key} = {_fmt((extra or {})[key])}")
    return "\n".join(lines) + "\n"


_GNUPLOT = {
    "trajectory.csv": ("set datafile separator ','\nset logscale xy\n"
                       "set xlabel 't'\nset ylabel 'E'\n"
                       "plot 'trajectory.csv' every ::1 using 1:2 "
                       "with lines title 'energy'\n"),
    "spectrum.csv": ("set datafile separator ','\nset xlabel 'Re'\n"
                     "set ylabel 'Im'\n"
                     "plot 'spectrum.csv' every ::1 using 1:2 "
                     "with points title 'eigenvalues'\n"),
    "resolvent.csv": ("set datafile separator ','\nset logscale xy\n"
                      "set xlabel 'lambda'\nset ylabel 'norm'\n"
                      "plot 'resolvent.csv' every ::1 using 1:2 "
                      "with linespoints title 'resolvent norm'\n"),
    "roots.csv": ("set datafile separator ','\nset xlabel 'Re'\n"
                  "set ylabel 'Im'\n"
                  "plot 'roots.csv' every ::1 using 3:4 with points "
                  "title 'refined', 'roots.csv' every ::1 using 5:6 "
                  "with points title 'asymptotic'\n"),
}


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _build_system(spec: ExperimentSpec, n_cells: int):
    grid = build_grid(spec.config, n_cells)
    return assemble(spec.config, grid)


def _run_simulate(spec: ExperimentSpec, out: _OutputSet,
                  config: ProblemConfig | None = None,
                  basename: str = "trajectory") -> dict:
    cfg = config or spec.config
    p = spec.params
    grid = build_grid(cfg, int(p["n_cells"]))
    sys_ = assemble(cfg, grid)
    if p.get("initial", "multimode") == "single":
        U0 = evolve.smooth_initial_state(sys_)
    else:
        U0 = evolve.decay_probe_initial_state(sys_)
    traj = evolve.simulate(sys_, U0, p["T"], p["dt"],
                           int(p.get("snapshot_stride", 0) or 0))
    out.write_csv(f"{basename}.csv", ["t", "E"],
                  zip(traj.times, traj.energies))
    window = (p["fit_t_min"], p["fit_t_max"])
    extra = {}
    try:
        fp = evolve.fit_decay(traj, evolve.DecayModel.POLYNOMIAL, window)
        fe = evolve.fit_decay(traj, evolve.DecayModel.EXPONENTIAL, window)
        extra = {"fit_poly_exponent": fp.exponent_or_rate,
                 "fit_poly_residual": fp.residual,
                 "fit_exp_rate": fe.exponent_or_rate,
                 "fit_exp_residual": fe.residual,
                 "fit_exp_r_squared": fe.r_squared,
                 "fit_window": f"{_fmt(window[0])} {_fmt(window[1])}"}
    except DomainError as exc:
        extra = {"fit_error": str(exc)}
    out.write_text(f"{basename}.gp", _GNUPLOT["trajectory.csv"]
                   .replace("trajectory.csv", f"{basename}.csv"))
    return extra


def _run_spectrum(spec: ExperimentSpec, out: _OutputSet) -> dict:
    p = spec.params
    sys_ = _build_system(spec, int(p["n_cells"]))
    near = complex(p["near_re"], p["near_im"])
    recs = spectrum.compute_spectrum(sys_, int(p["count"]), near)
    out.write_csv("spectrum.csv", ["re", "im", "residual"],
                  ((r.lam.real, r.lam.imag, r.residual) for r in recs))
    out.write_text("spectrum.gp", _GNUPLOT["spectrum.csv"])
    return {"max_re": max(r.lam.real for r in recs),
            "max_residual": max(r.residual for r in recs)}


def _resolvent_points(spec: ExperimentSpec, sys_) -> list[float]:
    p = spec.params
    if p.get("probe") == "modes":
        ks = range(int(p["k_min"]), int(p["k_max"]) + 1)
        return [spectrum.y_branch_frequency(sys_, k)[0] for k in ks]
    grid = list(np.linspace(p["lambda_min"], p["lambda_max"],
                            int(p["lambda_count"])))
    if p.get("probe") == "resonances":
        grid += spectrum.resonance_frequencies(sys_, p["lambda_min"],
                                               p["lambda_max"])
        grid.sort()
    return grid


def _run_resolvent(spec: ExperimentSpec, out: _OutputSet,
                   config: ProblemConfig | None = None,
                   basename: str = "resolvent") -> dict:
    p = spec.params
    cfg = config or spec.config
    grid = build_grid(cfg, int(p["n_cells"]))
    sys_ = assemble(cfg, grid)
    lams = _resolvent_points(spec, sys_)
    method = p.get("method", "auto")

    def one(lam):
        return spectrum.resolvent_norm(sys_, lam, method=method)

    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            samples = list(pool.map(one, lams))
    else:
        samples = [one(lam) for lam in lams]
    out.write_csv(f"{basename}.csv", ["lambda", "norm"],
                  ((s.lambda_imag, s.norm) for s in samples))
    out.write_text(f"{basename}.gp", _GNUPLOT["resolvent.csv"]
                   .replace("resolvent.csv", f"{basename}.csv"))
    norms = np.array([s.norm for s in samples])
    xs = np.array([s.lambda_imag for s in samples])
    extra = {"norm_max": float(norms.max()), "norm_min": float(norms.min())}
    if np.all(xs > 0) and np.all(norms > 0):
        slope = float(np.polyfit(np.log(xs), np.log(norms), 1)[0])
        extra["loglog_slope"] = slope
    return extra


def _run_huang_pruss(spec: ExperimentSpec, out: _OutputSet) -> dict:
    p = spec.params
    if spec.config.preset is not Preset.GLOBAL:
        raise ConfigError("huangpruss requires preset = global")
    rows = []
    worst_d1 = worst_d2 = 0.0
    for n in range(int(p["n_min"]), int(p["n_max"]) + 1):
        t = spectrum.huang_pruss_sequence(spec.config, n)
        nu, nf = t.continuum_norms()
        worst_d1 = max(worst_d1, abs(t.D1_n))
        worst_d2 = max(worst_d2, abs(t.D2_n - 1))
        rows.append((n, t.lambda_n, abs(t.D1_n), abs(t.D2_n - 1),
                     nu / (t.lambda_n ** 2 * nf)))
    out.write_csv("huangpruss.csv",
                  ["n", "lambda", "abs_D1", "abs_D2_minus_1",
                   "norm_ratio_over_lambda_sq"], rows)
    levels = [int(tok) for tok in str(p["mesh_levels"]).split()]
    wn = int(p["witness_n"])
    t = spectrum.huang_pruss_sequence(spec.config, wn)
    res_rows = []
    for nc in levels:
        sys_ = _build_system(spec, nc)
        res_rows.append((nc, spectrum.discrete_huang_pruss_check(sys_, t)))
    out.write_csv("huangpruss_residuals.csv", ["n_cells", "residual"], res_rows)
    extra = {"max_abs_D1": worst_d1, "max_abs_D2_minus_1": worst_d2}
    for (nc1, r1), (nc2, r2) in zip(res_rows, res_rows[1:]):
        extra[f"residual_ratio_{nc1}_{nc2}"] = r1 / r2
    return extra


def _run_roots(spec: ExperimentSpec, out: _OutputSet) -> dict:
    p = spec.params
    if spec.config.preset is not Preset.TRANSMISSION_LOCAL:
        raise ConfigError("roots requires preset = transmission_local")
    c = spec.config.c0
    ns = range(int(p["n_min"]), int(p["n_max"]) + 1)

    def one(args):
        branch, n = args
        center = charroots.f0_roots(n, c)[branch - 1]
        radius = abs(n) ** -0.25
        rec = charroots.refine_root(center, c, radius, branch=branch, n=n)
        asym = charroots.asymptotic_eigenvalue(branch, n, c)
        return rec, asym

    tasks = [(b, n) for b in (1, 2) for n in ns]
    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]
    path = os.path.join(out.out_dir, "roots.csv")
    os.makedirs(out.out_dir, exist_ok=True)
    charroots.roots_to_csv(results, path + ".tmp")
    os.replace(path + ".tmp", path)
    out.paths.append(path)
    out.write_text("roots.gp", _GNUPLOT["roots.csv"])

    extra = {}
    if charroots.branch_case(c) is charroots.BranchCase.SIN_NONZERO:
        b1 = [rec for rec, _ in results if rec.branch == 1]
        meas = np.array([-rec.root.real * math.sqrt(abs(rec.n) * math.pi)
                         for rec in b1])
        coef3 = 2 * math.sin(c / 4) ** 2 / (3 + math.cos(c / 2))
        coef2 = 2 * math.sin(c / 4) ** 2 / (2 + math.cos(c / 2))
        err3 = float(np.abs(meas - coef3).mean())
        err2 = float(np.abs(meas - coef2).mean())
        extra["branch1_coefficient_measured_mean"] = float(meas.mean())
        extra["branch1_coefficient_3_plus_cos"] = coef3
        extra["branch1_coefficient_2_plus_cos"] = coef2
        extra["branch1_best_constant"] = ("3+cos" if err3 <= err2 else "2+cos")
    return extra


def _run_kernel_check(spec: ExperimentSpec, out: _OutputSet) -> dict:
    p = spec.params
    rng = np.random.default_rng(spec.seed)
    draws = int(p["draws"])
    rows = []
    worst = 0.0
    for case in charroots.KernelCase:
        for _ in range(draws):
            a = float(rng.uniform(0.3, 4.0))
            c0 = float(rng.uniform(0.3, 4.0))
            alpha3 = float(rng.uniform(0.2, 0.9))
            if case is charroots.KernelCase.LT:
                lam = c0 * float(rng.uniform(0.05, 0.95))
            elif case is charroots.KernelCase.EQ:
                lam = c0
            else:
                lam = c0 * float(rng.uniform(1.05, 5.0))
            if rng.uniform() < 0.5:
                lam = -lam
            closed, direct = charroots.kernel_det(case, lam, a, c0, alpha3)
            rel = abs(closed - direct) / max(abs(closed), abs(direct))
            worst = max(worst, rel)
            rows.append((case.value, lam, a, c0, alpha3, closed.real,
                         closed.imag, direct.real, direct.imag, rel))
    out.write_csv("kerncheck.csv",
                  ["case", "lambda", "a", "c0", "alpha3", "closed_re",
                   "closed_im", "direct_re", "direct_im", "rel_err"], rows)
    return {"max_rel_err": worst, "draws_per_case": draws}


def _run_aux_check(spec: ExperimentSpec, out: _OutputSet) -> dict:
    if spec.config.preset is not Preset.AUXILIARY:
        raise ConfigError("aux requires preset = auxiliary")
    p = dict(spec.params)
    # single-mode data keeps log E close to a single exponential rate
    sim_spec = ExperimentSpec(spec.kind, spec.config,
                              dict(p, fit_t_max=p["T"], initial="single",
                                   snapshot_stride=0),
                              spec.out_dir, spec.seed, spec.jobs)
    extra = _run_simulate(sim_spec, out, basename="aux_trajectory")
    sweep_spec = ExperimentSpec(spec.kind, spec.config,
                                dict(p, method="power", probe="resonances",
                                     n_cells=int(p["sweep_n_cells"])),
                                spec.out_dir, spec.seed, spec.jobs)
    extra2 = _run_resolvent(sweep_spec, out, basename="aux_resolvent")
    env_ratio = _envelope_ratio(os.path.join(out.out_dir, "aux_resolvent.csv"))
    merged = {f"sim_{k}": v for k, v in extra.items()}
    merged.update({f"sweep_{k}": v for k, v in extra2.items()})
    merged["sweep_envelope_max_min_ratio"] = env_ratio
    return merged


def _envelope_ratio(csv_path: str, bins: int = 10) -> float:
    """max/min over bin-wise maxima of the sweep (upper envelope boundedness)."""
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    lam, norm = data[:, 0], data[:, 1]
    edges = np.linspace(lam.min(), lam.max() + 1e-9, bins + 1)
    env = []
    for lo, hi in zip(edges, edges[1:]):
        m = (lam >= lo) & (lam < hi)
        if m.any():
            env.append(norm[m].max())
    env = np.array(env)
    return float(env.max() / env.min())


_RUNNERS = {
    ExperimentKind.SIMULATE: _run_simulate,
    ExperimentKind.SPECTRUM: _run_spectrum,
    ExperimentKind.RESOLVENT_SWEEP: _run_resolvent,
    ExperimentKind.HUANG_PRUSS: _run_huang_pruss,
    ExperimentKind.CHAR_ROOTS: _run_roots,
    ExperimentKind.KERNEL_CHECK: _run_kernel_check,
    ExperimentKind.AUX_CHECK: _run_aux_check,
}


def run_experiment(spec: ExperimentSpec) -> list[str]:
    """Execute one experiment; returns the emitted artifact paths.

    Any failure removes partial outputs and re-raises with the experiment
    kind and parameters attached.
    """
    violations = validate(spec.config)
    if violations:
        raise ConfigError("invalid config:\n  " + "\n  ".join(violations))
    out = _OutputSet(spec.out_dir)
    try:
        extra = _RUNNERS[spec.kind](spec, out)
        out.write_text(f"{spec.kind.value}.meta.txt", _metadata(spec, extra))
    except (ConfigError, DomainError, GridError) as exc:
        out.discard_all()
        raise ConfigError(f"[{spec.kind.value}] {exc}") from exc
    except Exception as exc:
        out.discard_all()
        raise NumericalError(
            f"[{spec.kind.value}] failed with params {spec.params}: {exc}"
        ) from exc
    return out.paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kvwave",
        description="Experiments on locally coupled waves with local "
                    "Kelvin-Voigt damping")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=0)
    args = parser.parse_args(argv)
    try:
        spec = parse_config(args.config, _SUBCOMMANDS[args.command],
                            out_dir=args.out, seed=args.seed, jobs=args.jobs)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        paths = run_experiment(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
