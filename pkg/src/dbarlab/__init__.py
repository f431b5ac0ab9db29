"""Finite-type geometry and d-bar homotopy operators on model domains in C^2."""

__version__ = "0.1.0"
