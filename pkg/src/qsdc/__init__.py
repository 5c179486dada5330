"""Simulator for direct secret messaging by teleportation over shared EPR pairs."""

__version__ = "0.1.0"
