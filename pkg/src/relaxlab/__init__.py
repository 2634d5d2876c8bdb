"""IMEX Runge-Kutta schemes for linear hyperbolic relaxation systems.

Modules: ``densemat`` (small dense kernels), ``tableaux`` (double Butcher
tableaux and their conditions), ``relaxsys`` (systems and stability
certificates), ``spectral`` (Fourier-Galerkin states), ``stepper`` (time
integration and the exact per-mode semigroup) and ``lab`` (convergence
studies).
"""

from . import densemat, lab, relaxsys, spectral, stepper, tableaux
from .errors import RelaxLabError
from .lab import ExperimentConfig, convergence_study, fit_order, initial_state, uniform_error
from .relaxsys import RelaxationSystem, StabilityCertificate, builtin, check_structural_stability
from .spectral import ModalState, l2_norm, modal_error, project, synthesize
from .stepper import exact_evolve, integrate, plan, step
from .tableaux import Tableau, classify, new_tableau, order_residuals, registry

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "ModalState",
    "RelaxLabError",
    "RelaxationSystem",
    "StabilityCertificate",
    "Tableau",
    "builtin",
    "check_structural_stability",
    "classify",
    "convergence_study",
    "densemat",
    "exact_evolve",
    "fit_order",
    "initial_state",
    "integrate",
    "l2_norm",
    "lab",
    "modal_error",
    "new_tableau",
    "order_residuals",
    "plan",
    "project",
    "registry",
    "relaxsys",
    "spectral",
    "step",
    "stepper",
    "synthesize",
    "tableaux",
    "uniform_error",
]
