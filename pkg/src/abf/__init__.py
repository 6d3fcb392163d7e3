"""Approximate Bayesian forecasting: ABC posteriors, particle-filtered
predictives, proper scoring rules, and merging diagnostics."""

__version__ = "0.1.0"
