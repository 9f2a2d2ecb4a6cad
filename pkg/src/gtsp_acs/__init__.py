"""Hybrid ant colony system for the symmetric generalized traveling salesman problem."""

from .acs import AcsParams, Denominator, LocalSearch, RunResult, Tau0Rule, run
from .heuristics import brute_force_optimum, nearest_neighbor
from .instance import GtspInstance, InfeasibleTourError, InstanceError, Tour, check_feasible, tour_weight
from .localsearch import co_optimize, improve, three_opt
from .registry import BestKnownRegistry
from .tsplib import cluster_instance, load, parse_gtsp, parse_tsplib, write_gtsp

__all__ = [
    "AcsParams",
    "BestKnownRegistry",
    "Denominator",
    "GtspInstance",
    "InfeasibleTourError",
    "InstanceError",
    "LocalSearch",
    "RunResult",
    "Tau0Rule",
    "Tour",
    "brute_force_optimum",
    "check_feasible",
    "cluster_instance",
    "co_optimize",
    "improve",
    "load",
    "nearest_neighbor",
    "parse_gtsp",
    "parse_tsplib",
    "run",
    "three_opt",
    "tour_weight",
    "write_gtsp",
]
__version__ = "0.1.0"
