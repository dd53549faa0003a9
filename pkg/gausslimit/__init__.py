"""Stein-method Wasserstein bounds for ARMA outputs driven by non-Gaussian noise."""

__version__ = "0.1.0"

from gausslimit.errors import ConfigError, GaussLimitError
from gausslimit.lti_core import ArmaSpec, find_roots, impulse_response
from gausslimit.noise import InnovationDistribution, NoiseModel
from gausslimit.stein_bound import assemble_bound, prop1_bound
from gausslimit.wasserstein import EmpiricalSample, w1_to_std_normal

__all__ = [
    "__version__",
    "ArmaSpec",
    "ConfigError",
    "EmpiricalSample",
    "GaussLimitError",
    "InnovationDistribution",
    "NoiseModel",
    "assemble_bound",
    "find_roots",
    "impulse_response",
    "prop1_bound",
    "w1_to_std_normal",
]
