"""rdsnet: reconstruct hidden social ties from respondent-driven sampling.

Simulates RDS as a continuous-time diffusion over a population graph and
recovers the recruitment-induced subgraph plus the inter-recruitment-time
distribution parameters from the observed recruitment data.
"""

__version__ = "0.1.0"

from .annealer import AnnealResult, CoolingSchedule, anneal
from .estimator import NetworkReconstructor
from .graph import (CompatibilityReport, DataValidationError, ObservedStudy,
                    RecruitmentGraph, check_compatible, compatible_path,
                    count_addable, count_removable, undirected_projection)
from .likelihood import (BernoulliEdgePrior, UniformPrior, build_workspace,
                         log_likelihood_direct, log_likelihood_matrix,
                         log_posterior)
from .param_est import estimate_theta
from .pipeline import RenderConfig, render, tpr_fpr
from .simulate import SimConfig, SimResult, generate_population, simulate
from .waiting_time import (Exponential, GammaUnitMean, GammaWaiting, PowerLaw,
                           WaitingTimeModel, make_model)

__all__ = [
    "AnnealResult", "CoolingSchedule", "anneal",
    "NetworkReconstructor",
    "CompatibilityReport", "DataValidationError", "ObservedStudy",
    "RecruitmentGraph", "check_compatible", "compatible_path",
    "count_addable", "count_removable", "undirected_projection",
    "BernoulliEdgePrior", "UniformPrior", "build_workspace",
    "log_likelihood_direct", "log_likelihood_matrix", "log_posterior",
    "estimate_theta",
    "RenderConfig", "render", "tpr_fpr",
    "SimConfig", "SimResult", "generate_population", "simulate",
    "Exponential", "GammaUnitMean", "GammaWaiting", "PowerLaw", "WaitingTimeModel",
    "make_model",
]
