"""Unrolled physics-guided MRI reconstruction with multi-mask supervised training."""

__version__ = "0.1.0"
