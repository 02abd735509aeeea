"""Combinatorics of labeled trees, Möbius geometry and energy estimates for nodal sphere maps."""

from __future__ import annotations

__version__ = "0.1.0"
