"""Cantor-Bendixson rank constructions over computable measures, at desk scale."""

__version__ = "0.1.0"
