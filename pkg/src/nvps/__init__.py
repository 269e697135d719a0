"""Spin-selective photon emission of a single NV center: simulation and analysis."""

__version__ = "0.1.0"
