"""Switched Visual Tracker simulator and stability-certification toolkit."""

__version__ = "0.4.0"
