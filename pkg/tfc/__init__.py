"""TFC Solver - constrained expressions and spectral least-squares PDE solving."""

__version__ = "0.1.0"
