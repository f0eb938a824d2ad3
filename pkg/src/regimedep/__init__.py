"""Copula-GARCH dependence analysis across regimes."""

__version__ = "0.1.0"
