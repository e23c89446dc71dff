"""Adaptive Taylor-Hood / mini solver for stationary Navier-Stokes with point forces.

The package is organised by stage of the adaptive loop::

    mesh        triangulations, geometric queries, longest-edge bisection
    domains     catalog of experiment domains and their initial meshes
    quadrature  triangle and edge rules, weights |x - z|^alpha and rho
    spaces      finite element spaces, basis functions, discrete fields
    assembly    sparse operators and right-hand sides
    solver      sparse LU and the Picard fixed-point loop
    estimator   weighted residual indicators
    adaptivity  solve / estimate / mark / refine
    experiments presets, configuration files and output writers
"""

from nsdelta.mesh import Mesh, refine, locate_point
from nsdelta.domains import DomainShape, build_initial_mesh, catalog_shape
from nsdelta.spaces import (
    BoundaryCondition,
    DiscreteField,
    FunctionSpace,
    build_space,
)
from nsdelta.solver import SolverConfig, SolveReport, picard_solve, stokes_initial_guess
from nsdelta.estimator import IndicatorReport, compute_indicators
from nsdelta.adaptivity import AdaptiveRun, ProblemSpec, adapt, mark, convergence_slope

__all__ = [
    "AdaptiveRun",
    "BoundaryCondition",
    "DiscreteField",
    "DomainShape",
    "FunctionSpace",
    "IndicatorReport",
    "Mesh",
    "ProblemSpec",
    "SolveReport",
    "SolverConfig",
    "adapt",
    "build_initial_mesh",
    "build_space",
    "catalog_shape",
    "compute_indicators",
    "convergence_slope",
    "locate_point",
    "mark",
    "picard_solve",
    "refine",
    "stokes_initial_guess",
]

__version__ = "0.1.0"
