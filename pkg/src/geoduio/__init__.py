"""Geometric design and simulation of distributed unknown-input observers.

Modules
-------
matlin     subspace arithmetic on orthonormal bases
geomctl    invariant-subspace algorithms and quotient maps
netgraph   undirected communication graphs
synthesis  per-node design, coupling matrix and gains
sim        fixed-step simulation of plant and observers
cases      four-vehicle platoon case study
cli        command-line front end
"""

from .errors import (DimensionError, GeoDuioError, JointConditionViolated, NotInvariant,
                     NotPositiveDefinite, NumericalBlowup, StabilizationFailed, ValidationError)
from .geomctl import GoodRegion, rstar, vstar, wstar_g
from .matlin import Subspace, Tolerances
from .netgraph import Graph, laplacian
from .sim import SimConfig, Signals, Trajectory, simulate
from .synthesis import DuioDesign, NodeSpec, synthesize

__version__ = "0.1.0"

__all__ = [
    "DimensionError", "GeoDuioError", "JointConditionViolated", "NotInvariant",
    "NotPositiveDefinite", "NumericalBlowup", "StabilizationFailed", "ValidationError",
    "GoodRegion", "rstar", "vstar", "wstar_g", "Subspace", "Tolerances", "Graph", "laplacian",
    "SimConfig", "Signals", "Trajectory", "simulate", "DuioDesign", "NodeSpec", "synthesize",
]
