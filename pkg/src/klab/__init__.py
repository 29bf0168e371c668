"""Verification laboratory for classical Kantorovich operators."""

__version__ = "0.1.0"
