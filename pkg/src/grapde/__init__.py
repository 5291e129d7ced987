"""Discrete calculus, energies and variational solvers for elliptic systems on graphs."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .energy import EnergyModel, FunctionPair, make_model
from .estimators import SpectralEstimator, VariationalSolver
from .graph import build_graph, generate, make_domain
from .solver import SolveConfig, exhaustion_solve, minimize_direct, mountain_pass, newton_refine
from .spectral import first_eigenvalue

__all__ = [
    "EnergyModel", "FunctionPair", "SolveConfig", "SpectralEstimator", "VariationalSolver",
    "build_graph", "exhaustion_solve", "first_eigenvalue", "generate", "make_domain",
    "make_model", "minimize_direct", "mountain_pass", "newton_refine", "__version__",
]
