"""Bayesian inference with automated Monte Carlo precision."""

__version__ = "0.1.0"
