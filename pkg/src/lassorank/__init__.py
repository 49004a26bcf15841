"""Termination arguments for linear lasso programs via ranking-function templates."""

__version__ = "0.1.0"
