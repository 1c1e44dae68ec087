"""Bifurcation, shooting and Kelvin-transform numerics for semilinear equations on spheres."""

__version__ = "0.1.0"
