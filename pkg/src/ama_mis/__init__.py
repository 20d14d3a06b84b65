"""Feasibility-preserving QAOA+ simulation and adaptive mixer allocation for maximum independent set."""

__version__ = "0.1.0"
