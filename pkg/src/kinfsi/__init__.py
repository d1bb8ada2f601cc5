"""Finite element solvers for fluid-structure interaction with kinematically coupled splitting."""
__version__ = "0.1.0"
