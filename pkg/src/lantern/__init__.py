"""Lantern host stack: behavior engine, hardware simulator, control protocol."""

__version__ = "0.1.0"
