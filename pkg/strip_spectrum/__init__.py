"""Eigenvalue-count bounds for Schroedinger operators on strips, with numerical oracles."""

__version__ = "1.0.0"
