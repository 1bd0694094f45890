"""
QAOA Trust-Region Package
=========================

Uncertainty-aware initialization and query budgeting for MaxCut QAOA: a graph
neural network predicts a Gaussian over the circuit angles, and a projected
Nelder-Mead search stays inside the resulting trust region.

Modules
-------
graphs
    Graph type and random graph families.
linalg
    Symmetric eigensolver.
spectral
    Laplacian positional encodings and handcrafted graph features.
engine
    Statevector simulator, noise model, shot sampling and metered objective.
predictor
    Graph Isomorphism Network and its training losses.
training
    Two-phase training schedule.
checkpoint
    Model checkpoint format.
trust
    Chi-square quantiles, trust regions and budget allocation.
neldermead
    Projected Nelder-Mead maximizer.
search
    Trust-region inference and the shared refinement path.
solver
    High-level solver facade.
calibration
    Normalization constants, conformal radii and calibration metrics.
baselines
    Comparison methods.
config
    Experiment configuration and sensitivity presets.
datasets
    Benchmark graph sets and reference angles.
experiments
    Benchmark orchestration and summary tables.
stats
    Paired significance tests.
bounds
    Plug-in and empirical bound checks.
report
    Plot-ready data files.
"""

from .calibration import CalibrationConstants, conformal_quantile
from .config import ExperimentConfig, load_config
from .engine import NoiseModel, expectation, noisy_expectation
from .graphs import Family, Graph, generate, get_family, list_families
from .predictor import GaussianPrediction, GINModel
from .solver import TrustRegionSolver
from .trust import TrustRegion, allocate_budget, chi2_quantile

__all__ = [
    "CalibrationConstants",
    "ExperimentConfig",
    "Family",
    "GINModel",
    "GaussianPrediction",
    "Graph",
    "NoiseModel",
    "TrustRegion",
    "TrustRegionSolver",
    "allocate_budget",
    "chi2_quantile",
    "conformal_quantile",
    "expectation",
    "generate",
    "get_family",
    "list_families",
    "load_config",
    "noisy_expectation",
]
