"""Deterministic simulator coupling protocol implementations to abstract models."""

__version__ = "0.1.0"
