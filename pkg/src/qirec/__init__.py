"""Coherence-based quantifiers and non-Markovianity witnesses for one- and two-qubit open systems."""

__version__ = "0.1.0"
