"""Numerical toolkit for the 1D wave equation with a coefficient degenerating at x = 0."""

__version__ = "0.1.0"

from .weights import Weight, WeightConstants, compute_constants, make_weight
from .spectral import EigenPair, bessel_j, first_bessel_zero, first_eigenpair
from .discretization import Dirichlet, EnergyTrace, Grid, GridState, LinearDamped, NonlinearDamped
from .dynamics import Bump, Eigen, FeedbackLaw, RandomSmooth, Samples, SimConfig, run
from .observability import blowup_sweep, check_bounds, failure_demo, observe
from .hum import HumProblem, HumSolution, solve_hum
from .decay import DecayModel, build_decay_model, calibrate, fit_decay_rate, predict_envelope

__all__ = [
    "Weight", "WeightConstants", "compute_constants", "make_weight",
    "EigenPair", "bessel_j", "first_bessel_zero", "first_eigenpair",
    "Dirichlet", "EnergyTrace", "Grid", "GridState", "LinearDamped", "NonlinearDamped",
    "Bump", "Eigen", "FeedbackLaw", "RandomSmooth", "Samples", "SimConfig", "run",
    "blowup_sweep", "check_bounds", "failure_demo", "observe",
    "HumProblem", "HumSolution", "solve_hum",
    "DecayModel", "build_decay_model", "calibrate", "fit_decay_rate", "predict_envelope",
]
