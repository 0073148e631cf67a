"""Distributed consensus ADMM over simulated synchronous networks, with
spectral convergence certificates checked against actual trajectories."""

from . import admm, analysis, config, graph, objectives, reporting, spectral
from .errors import AdmmNetError

__all__ = [
    "AdmmNetError",
    "admm",
    "analysis",
    "config",
    "graph",
    "objectives",
    "reporting",
    "spectral",
]

__version__ = "0.1.0"
