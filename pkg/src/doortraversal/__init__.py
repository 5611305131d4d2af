"""Behavior-coordination runtime and deterministic door-traversal simulation."""

__version__ = "0.1.0"
