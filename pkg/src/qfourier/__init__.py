"""Basic trigonometric functions on a q-quadratic grid and their Fourier series."""

from __future__ import annotations

__version__ = "0.1.0"
