"""Joint design of constant-modulus pulse-compression codes and extended
mismatched receive filters for weather radar, with a synthetic-scene
simulator for checking reflectivity and velocity estimates."""

__version__ = "0.1.0"

from .admm import AdmmParams, solve_x_subproblem
from .design import DesignConfig, DesignResult, design, evaluate, matched_filter, update_filter
from .scene import RadarParams, compare_profiles, estimate_moments, generate_scene, simulate
from .signal_model import ClutterProfile, build_covariance, mse, sinr, zero_pad

__all__ = [
    "AdmmParams",
    "ClutterProfile",
    "DesignConfig",
    "DesignResult",
    "RadarParams",
    "build_covariance",
    "compare_profiles",
    "design",
    "estimate_moments",
    "evaluate",
    "generate_scene",
    "matched_filter",
    "mse",
    "simulate",
    "sinr",
    "solve_x_subproblem",
    "update_filter",
    "zero_pad",
]
