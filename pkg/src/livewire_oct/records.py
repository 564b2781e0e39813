"""Segmentation records: committed boundaries, fluid regions, effort stats.

The JSON form produced by `to_dict` round-trips exactly: y-positions are
stored at full float precision and fluid masks are re-rasterized from
their contours, which is deterministic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .config import BoundaryId
from .livewire import Anchor, Boundary, BoundaryMode


class FluidLabel(enum.Enum):
    IRF = "IRF"
    SRF = "SRF"
    UNLABELED = "Unlabeled"


def rasterize_contour(
    contour: list[tuple[int, int]], width: int, height: int
) -> np.ndarray:
    """Even-odd scanline fill of a closed pixel loop, including the
    contour pixels themselves.

    A pixel center is inside when the number of polygon-edge crossings
    strictly to its right is odd; vertical spans are half-open so shared
    vertices count once.
    """
    mask = np.zeros((height, width), dtype=bool)
    pts = list(contour)
    n = len(pts)
    if n == 0:
        return mask
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for row in range(height):
        xs = []
        for (x0, y0), (x1, y1) in edges:
            if y0 == y1:
                continue
            if min(y0, y1) <= row < max(y0, y1):
                t = (row - y0) / (y1 - y0)
                xs.append(x0 + t * (x1 - x0))
        xs.sort()
        for i in range(0, len(xs) - 1, 2):
            a, b = xs[i], xs[i + 1]
            x_start = max(0, math.ceil(a))
            x_end = min(width - 1, math.ceil(b) - 1)
            if x_start <= x_end:
                mask[row, x_start : x_end + 1] = True
    for x, y in pts:
        if 0 <= y < height and 0 <= x < width:
            mask[y, x] = True
    return mask


@dataclass
class FluidRegion:
    """A closed fluid contour with its rasterized mask."""

    label: FluidLabel
    contour: list[tuple[int, int]]
    mask: np.ndarray

    @classmethod
    def from_contour(
        cls,
        contour: list[tuple[int, int]],
        width: int,
        height: int,
        label: FluidLabel = FluidLabel.UNLABELED,
    ) -> "FluidRegion":
        mask = rasterize_contour(contour, width, height)
        if not mask.any():
            raise ValueError("fluid region rasterizes to an empty mask")
        return cls(label=label, contour=[(int(x), int(y)) for x, y in contour],
                   mask=mask)

    @property
    def area_px(self) -> int:
        return int(self.mask.sum())


@dataclass
class SessionStat:
    elapsed_seconds: float = 0.0
    click_count: int = 0

    def __post_init__(self):
        if self.elapsed_seconds < 0 or self.click_count < 0:
            raise ValueError("session stats must be non-negative")


@dataclass
class SegmentationRecord:
    """Everything one grader produced for one B-scan."""

    volume_id: str
    bscan_index: int
    grader_id: str = ""
    boundaries: dict[BoundaryId, Boundary] = field(default_factory=dict)
    fluids: list[FluidRegion] = field(default_factory=list)
    session_stats: dict[str, SessionStat] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "volume_id": self.volume_id,
            "bscan_index": self.bscan_index,
            "grader_id": self.grader_id,
            "boundaries": {
                bid.value: {
                    "y": [float(v) for v in b.y],
                    "mode": b.mode.value,
                    "anchors": [
                        {"x": a.x, "y": float(a.y), "t": float(a.t)}
                        for a in b.anchors
                    ],
                    "elapsed_seconds": float(b.elapsed_seconds),
                    "click_count": int(b.click_count),
                }
                for bid, b in sorted(self.boundaries.items(), key=lambda kv: kv[0].value)
            },
            "fluids": [
                {
                    "label": f.label.value,
                    "contour": [[int(x), int(y)] for x, y in f.contour],
                    "width": int(f.mask.shape[1]),
                    "height": int(f.mask.shape[0]),
                    "area_px": f.area_px,
                }
                for f in self.fluids
            ],
            "session_stats": {
                key: {
                    "elapsed_seconds": float(s.elapsed_seconds),
                    "click_count": int(s.click_count),
                }
                for key, s in sorted(self.session_stats.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SegmentationRecord":
        boundaries = {}
        for name, entry in data.get("boundaries", {}).items():
            bid = BoundaryId(name)
            boundaries[bid] = Boundary(
                y=np.array(entry["y"], dtype=np.float64),
                id=bid,
                mode=BoundaryMode(entry["mode"]),
                anchors=[
                    Anchor(x=int(a["x"]), y=float(a["y"]), t=float(a.get("t", 0.0)))
                    for a in entry.get("anchors", [])
                ],
                elapsed_seconds=float(entry.get("elapsed_seconds", 0.0)),
                click_count=int(entry.get("click_count", 0)),
            )
        fluids = [
            FluidRegion.from_contour(
                [(int(x), int(y)) for x, y in entry["contour"]],
                width=int(entry["width"]),
                height=int(entry["height"]),
                label=FluidLabel(entry.get("label", "Unlabeled")),
            )
            for entry in data.get("fluids", [])
        ]
        stats = {
            key: SessionStat(
                elapsed_seconds=float(s.get("elapsed_seconds", 0.0)),
                click_count=int(s.get("click_count", 0)),
            )
            for key, s in data.get("session_stats", {}).items()
        }
        return cls(
            volume_id=data["volume_id"],
            bscan_index=int(data["bscan_index"]),
            grader_id=data.get("grader_id", ""),
            boundaries=boundaries,
            fluids=fluids,
            session_stats=stats,
        )


def records_equal(a: SegmentationRecord, b: SegmentationRecord,
                  y_tol: float = 1e-9) -> bool:
    """Field-by-field equality; boundary rows compared within y_tol."""
    if (a.volume_id, a.bscan_index, a.grader_id) != (
        b.volume_id, b.bscan_index, b.grader_id
    ):
        return False
    if set(a.boundaries) != set(b.boundaries):
        return False
    for bid, ba in a.boundaries.items():
        bb = b.boundaries[bid]
        if ba.y.shape != bb.y.shape or np.abs(ba.y - bb.y).max() > y_tol:
            return False
        if (ba.mode, ba.click_count) != (bb.mode, bb.click_count):
            return False
        if abs(ba.elapsed_seconds - bb.elapsed_seconds) > y_tol:
            return False
        if ba.anchors != bb.anchors:
            return False
    if len(a.fluids) != len(b.fluids):
        return False
    for fa, fb in zip(a.fluids, b.fluids):
        if fa.label is not fb.label or fa.contour != fb.contour:
            return False
        if not np.array_equal(fa.mask, fb.mask):
            return False
    if set(a.session_stats) != set(b.session_stats):
        return False
    for key, sa in a.session_stats.items():
        sb = b.session_stats[key]
        if sa.click_count != sb.click_count:
            return False
        if abs(sa.elapsed_seconds - sb.elapsed_seconds) > y_tol:
            return False
    return True
