"""kvwave: a numerical laboratory for locally coupled 1D waves with local
Kelvin-Voigt damping.

Subpackages follow the pipeline: model (problem instances) -> discretize
(interface-aligned FEM forms) -> evolve (contractive time stepping and decay
fits) / spectrum (eigenpairs, energy-norm resolvents, witness sequences),
plus charroots (exact transcendental root analysis of the transmission
configuration) and cli (batch experiment runner).
"""

__version__ = "0.1.0"

from .model import (DampingKind, DampingSpec, PiecewiseConstant, Preset,
                    ProblemConfig, coefficient_b, coefficient_c, load_problem,
                    validate)
from .discretize import (Grid, SemiDiscreteSystem, State, apply_operator,
                         assemble, build_grid, dissipation_form, energy,
                         w_norm)
from .evolve import (DecayFit, DecayModel, Trajectory, dissipation_residual,
                     fit_decay, simulate, step_trapezoidal)
from .spectrum import (EigenRecord, HuangPrussTriple, ResolventSample,
                       compute_spectrum, discrete_huang_pruss_check,
                       huang_pruss_sequence, resolvent_norm)
from . import charroots

__all__ = [
    "DampingKind", "DampingSpec", "PiecewiseConstant", "Preset",
    "ProblemConfig", "coefficient_b", "coefficient_c", "load_problem",
    "validate", "Grid", "SemiDiscreteSystem", "State", "apply_operator",
    "assemble", "build_grid", "dissipation_form", "energy", "w_norm",
    "DecayFit", "DecayModel", "Trajectory", "dissipation_residual",
    "fit_decay", "simulate", "step_trapezoidal", "EigenRecord",
    "HuangPrussTriple", "ResolventSample", "compute_spectrum",
    "discrete_huang_pruss_check", "huang_pruss_sequence", "resolvent_norm",
    "charroots", "__version__",
]
