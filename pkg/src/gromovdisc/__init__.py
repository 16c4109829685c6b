"""Gromov compactness toolkit for holomorphic discs with totally real boundary."""

from __future__ import annotations

__version__ = "0.1.0"
