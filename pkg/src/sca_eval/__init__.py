"""Evaluation toolkit for semantic-critical actors in driving-scene video prediction."""

__version__ = "0.1.0"
