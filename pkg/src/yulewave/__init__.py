"""Simulation and numerics for lattice oscillations of the Yule walk and random binary search trees."""

__version__ = "0.1.0"
