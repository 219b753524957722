"""Chiral de Rham complexes, Courant algebroids and chiral T-duality."""

__version__ = "0.1.0"
