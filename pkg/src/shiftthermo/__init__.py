"""Thermodynamic formalism on countable-state Markov shifts."""

__version__ = "0.1.0"
