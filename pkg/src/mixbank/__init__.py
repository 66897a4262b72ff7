"""Simulation and blind recovery for a bank of random +-1 mixing channels."""

__version__ = "0.1.0"
