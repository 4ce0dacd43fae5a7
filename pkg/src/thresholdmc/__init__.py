"""Parameterized model checker for threshold-guarded distributed algorithms."""

__version__ = "0.1.0"
