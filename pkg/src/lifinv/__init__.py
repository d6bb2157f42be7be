"""Excited-state potential extraction from fluorescence line positions and intensities."""

__version__ = "0.1.0"
