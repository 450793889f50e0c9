"""slicekit: sliced Wasserstein distances with pluggable direction selectors.

Direction sets come from Monte Carlo sampling, quasi-Monte Carlo
constructions (with scrambled and rotated randomizations), or Bayesian
optimization over the sphere; all of them drop into the same estimator,
gradient-flow, and experiment machinery.
"""

__version__ = "0.1.0"

from .flows import FlowConfig, FlowTrace, euler_flow, exact_w2, style_transfer
from .gp import AcquisitionKind, GpState, angular_rbf, fit, median_lengthscale, posterior
from .landscapes import Landscape, budgeted_search, standard_landscapes
from .ot1d import SwValue, project, sw_estimate, sw_gradient, wasserstein_1d
from .qsw import QswKind, RandomizeMode, make_qsw, sobol, spiral
from .selectors import (
    METHODS,
    SelectorConfig,
    SliceOracle,
    abosw,
    bosw,
    method_names,
    propose_batch,
    select_for_step,
)
from .sphere import geodesic_distance, random_rotation, sample_uniform

__all__ = [
    "AcquisitionKind",
    "FlowConfig",
    "FlowTrace",
    "GpState",
    "Landscape",
    "METHODS",
    "QswKind",
    "RandomizeMode",
    "SelectorConfig",
    "SliceOracle",
    "SwValue",
    "abosw",
    "angular_rbf",
    "bosw",
    "budgeted_search",
    "euler_flow",
    "exact_w2",
    "fit",
    "geodesic_distance",
    "make_qsw",
    "median_lengthscale",
    "method_names",
    "posterior",
    "project",
    "propose_batch",
    "random_rotation",
    "sample_uniform",
    "select_for_step",
    "sobol",
    "spiral",
    "standard_landscapes",
    "style_transfer",
    "sw_estimate",
    "sw_gradient",
    "wasserstein_1d",
]
