"""Nonlinear local projections with horseshoe Bayesian neural networks."""

__version__ = "0.1.0"
