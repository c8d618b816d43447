"""Variational solvers and checks for the planar Schrodinger-Maxwell system."""

__version__ = "0.1.0"
