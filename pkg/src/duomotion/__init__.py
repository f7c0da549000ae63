"""Dual-body contact-aware motion retargeting and interaction rewards."""

__version__ = "0.1.0"
