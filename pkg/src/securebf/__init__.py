"""Robust secure multicast beamforming with chance constraints on imperfect eavesdropper and primary-user CSI."""

__version__ = "0.1.0"

from .antenna import ArrayGeometry, Direction, DirectivityParams, steering_vector
from .channel import ChannelSet, CsiErrorModel
from .optimizer import AlgorithmConfig, BeamformerSolution, ScenarioInfeasible, SolverFailure, Targets, solve_scheme
from .scenario import ScenarioFile, load_scenario, default_scenario, random_scenario

__all__ = [
    "AlgorithmConfig",
    "ArrayGeometry",
    "BeamformerSolution",
    "ChannelSet",
    "CsiErrorModel",
    "Direction",
    "DirectivityParams",
    "ScenarioFile",
    "ScenarioInfeasible",
    "SolverFailure",
    "Targets",
    "load_scenario",
    "default_scenario",
    "random_scenario",
    "solve_scheme",
    "steering_vector",
]
