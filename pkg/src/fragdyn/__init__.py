"""Combinatorial and numerical tools for Basilica-type fractals: circle Markov
systems, symbolic puzzles, Fuchsian and Schwarz models, and contact trees."""
from __future__ import annotations

__version__ = "0.1.0"
