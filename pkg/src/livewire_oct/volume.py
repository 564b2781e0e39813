"""B-scan and volume containers.

Pixels are stored as float64 arrays of shape (height, width) with
intensities in [0, 1]; (x, y) coordinates throughout the package mean
(column, row) into those arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ScanKind(enum.Enum):
    MACULAR = "Macular"
    CIRCUMPAPILLARY = "Circumpapillary"


class Eye(enum.Enum):
    OD = "OD"
    OS = "OS"
    UNKNOWN = "Unknown"


@dataclass
class BScan:
    """One cross-sectional grayscale image of a volume."""

    pixels: np.ndarray
    index: int = 0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2:
            raise ValueError("pixels must be a 2-D grid")
        h, w = self.pixels.shape
        if w < 2 or h < 2:
            raise ValueError(f"B-scan must be at least 2x2, got {w}x{h}")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("B-scan pixels must be finite (no NaN/inf)")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("B-scan intensities must lie in [0, 1]")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class Volume:
    """An ordered stack of equally sized B-scans with physical scales."""

    id: str
    bscans: list[BScan]
    scale_x_mm: float
    scale_z_mm: float
    spacing_y_mm: float
    scan_kind: ScanKind = ScanKind.MACULAR
    eye: Eye = Eye.UNKNOWN
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bscans:
            raise ValueError("volume must contain at least one B-scan")
        w, h = self.bscans[0].width, self.bscans[0].height
        for b in self.bscans:
            if (b.width, b.height) != (w, h):
                raise ValueError(
                    f"B-scan {b.index} is {b.width}x{b.height}, expected {w}x{h}"
                )
        for name in ("scale_x_mm", "scale_z_mm", "spacing_y_mm"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def width(self) -> int:
        return self.bscans[0].width

    @property
    def height(self) -> int:
        return self.bscans[0].height

    def __len__(self) -> int:
        return len(self.bscans)
