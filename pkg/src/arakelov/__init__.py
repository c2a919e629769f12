"""Arithmetic invariants of normed lattices: lattice-point counts, volumes and
inequality checks, with exact arithmetic curves and a projective-line toy model."""

__version__ = "0.1.0"
