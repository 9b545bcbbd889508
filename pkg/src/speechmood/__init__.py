"""Telephone-speech emotion regression and mood-state analytics toolkit."""

__version__ = "0.1.0"
