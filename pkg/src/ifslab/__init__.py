"""Numerical toolkit for dimensions of measures of parametrized interval IFSs."""

__version__ = "0.1.0"
