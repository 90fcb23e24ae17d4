"""Surrender-option pricing for variable annuities with death and maturity guarantees."""

__version__ = "0.1.0"
