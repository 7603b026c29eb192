"""Stance classification pipeline and interaction-network analysis for short-video posts."""

__version__ = "0.1.0"
