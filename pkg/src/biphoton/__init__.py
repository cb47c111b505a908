"""Spatial biphoton amplitudes of type-I SPDC in anisotropic crystals."""

from .core import PumpProfile, ScenarioConfig, amplitude, amplitude_grid, make_scenario
from .crystal import get_model, list_crystals, solve_phase_matching

__all__ = [
    "PumpProfile",
    "ScenarioConfig",
    "amplitude",
    "amplitude_grid",
    "get_model",
    "list_crystals",
    "make_scenario",
    "solve_phase_matching",
]

__version__ = "0.1.0"
