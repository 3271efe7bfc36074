"""Concept-map-grounded MCQ generation and assessment analytics."""

__version__ = "0.1.0"
