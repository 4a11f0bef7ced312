"""Reduction of directed Hamiltonian Cycle instances to trigonometric polynomial systems."""

__version__ = "0.1.0"
