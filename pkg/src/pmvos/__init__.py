"""Pixel-level matching core for semi-supervised video object segmentation."""
from ._backend import backend, set_backend

__version__ = "0.1.0"

__all__ = ["backend", "set_backend", "__version__"]
