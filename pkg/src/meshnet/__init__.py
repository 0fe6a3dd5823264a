"""Mesh-based network synthesis with integer programming."""

__version__ = "0.1.0"
