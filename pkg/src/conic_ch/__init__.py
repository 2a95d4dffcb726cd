"""Cahn-Hilliard dynamics and indicial analysis on spindle surfaces with conical tips."""

__version__ = "0.1.0"
