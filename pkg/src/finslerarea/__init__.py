"""Busemann-Hausdorff Finsler area tools."""
__version__ = "0.1.0"
