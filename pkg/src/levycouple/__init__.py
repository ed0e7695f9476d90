"""Reflection/mirror coupling for SDEs driven by rotationally invariant pure-jump Lévy noise."""

__version__ = "0.1.0"

from .contraction import DistanceFunction, build_distance_function, distance_from_model
from .coupling_sim import SimConfig, run_ensemble, simulate_coupled_pair, simulate_single
from .drift import DriftSpec, radius_R0, radius_R1
from .errors import ConfigurationError, DomainError, FeasibilityError, LevyCoupleError
from .levy_measure import (
    RadialLevyMeasure,
    TruncationParams,
    c_delta_overlap,
    c_epsilon,
    select_truncation_m,
)

__all__ = [
    "ConfigurationError",
    "DistanceFunction",
    "DomainError",
    "DriftSpec",
    "FeasibilityError",
    "LevyCoupleError",
    "RadialLevyMeasure",
    "SimConfig",
    "TruncationParams",
    "build_distance_function",
    "c_delta_overlap",
    "c_epsilon",
    "distance_from_model",
    "radius_R0",
    "radius_R1",
    "run_ensemble",
    "select_truncation_m",
    "simulate_coupled_pair",
    "simulate_single",
]
