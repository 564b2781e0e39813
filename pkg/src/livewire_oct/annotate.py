"""Stateful grader sessions and the grid-manual interpolation mode.

A session owns one B-scan of one volume and builds boundaries anchor by
anchor: every add/undo recomputes the full preview from the pending
anchors, so an interactive sequence always matches a single batch
assembly over the same anchors. Circumpapillary scans are flattened and
shadow-inpainted once per session; anchors are taken in original image
coordinates and committed boundaries are mapped back.
"""

from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import peripapillary
from .config import BoundaryId, PipelineConfig, default_config
from .errors import (
    ClampWarning,
    DuplicateAnchorColumn,
    InsufficientAnchors,
    InvalidBoundaryForScan,
    NothingToUndo,
    OutOfBounds,
    TooFewClicks,
)
from .imgproc import CostMap, build_feature_map, fluid_feature_map
from .livewire import (
    Anchor,
    Boundary,
    BoundaryMode,
    assemble_boundary,
    close_contour,
    shortest_free_path,
    snap,
    splice_correction,
)
from .records import FluidLabel, FluidRegion, SegmentationRecord, SessionStat
from .volume import BScan, ScanKind, Volume


class ModeKind(enum.Enum):
    LAYER = "layer"
    GRID = "grid"
    FLUID = "fluid"


@dataclass(frozen=True)
class SessionMode:
    kind: ModeKind
    boundary: BoundaryId | None = None


def grid_boundary(
    clicks: list[Anchor],
    w: int,
    h: int | None = None,
    boundary_id: BoundaryId | None = None,
) -> Boundary:
    """Natural cubic spline through the clicks, sampled at every column;
    outside the click span the end values extend as constants."""
    if len(clicks) < 2:
        raise TooFewClicks("grid interpolation needs at least 2 clicks")
    ordered = sorted(clicks, key=lambda a: a.x)
    xs = np.array([a.x for a in ordered], dtype=np.float64)
    if np.unique(xs).shape[0] != xs.shape[0]:
        raise DuplicateAnchorColumn("grid clicks must use distinct columns")
    ys = np.array([a.y for a in ordered], dtype=np.float64)
    spline = CubicSpline(xs, ys, bc_type="natural")
    cols = np.arange(w, dtype=np.float64)
    y = np.empty(w, dtype=np.float64)
    lo, hi = int(xs[0]), int(xs[-1])
    inside = (cols >= lo) & (cols <= hi)
    y[inside] = spline(cols[inside])
    y[cols < lo] = ys[0]
    y[cols > hi] = ys[-1]
    if h is not None:
        clamped = np.clip(y, 0.0, h - 1.0)
        if not np.array_equal(y, clamped):
            warnings.warn("grid boundary clamped to image rows", ClampWarning)
        y = clamped
    return Boundary(
        y=y,
        id=boundary_id,
        mode=BoundaryMode.GRID,
        anchors=list(clicks),
        click_count=len(clicks),
    )


def filter_small_fluids(
    regions: list[FluidRegion], min_area_px: int
) -> list[FluidRegion]:
    """Keep the regions with area_px >= min_area_px, in order."""
    if min_area_px < 0:
        raise ValueError("min_area_px must be >= 0")
    return [r for r in regions if r.area_px >= min_area_px]


class Session:
    """Single-writer annotation session over one B-scan."""

    def __init__(
        self,
        volume: Volume,
        bscan_index: int,
        config: PipelineConfig | None = None,
        grader_id: str = "",
        clock=time.monotonic,
    ):
        if not (0 <= bscan_index < len(volume.bscans)):
            raise OutOfBounds(f"no B-scan at index {bscan_index}")
        self.volume = volume
        self.bscan_index = bscan_index
        self.bscan = volume.bscans[bscan_index]
        self.config = config if config is not None else default_config()
        self.mode: SessionMode | None = None
        self.pending_anchors: list[Anchor] = []
        self.committed = SegmentationRecord(
            volume_id=volume.id, bscan_index=bscan_index, grader_id=grader_id
        )
        self._clock = clock
        self.started_at = clock()
        self._cycle_clicks = 0
        self._first_anchor_t: float | None = None
        self._cost_cache: dict[str, CostMap] = {}
        self._flatten_map: peripapillary.FlattenMap | None = None
        self._shadow_mask: peripapillary.ShadowMask | None = None
        if volume.scan_kind is ScanKind.CIRCUMPAPILLARY:
            self._work_bscan, self._flatten_map, self._shadow_mask = (
                peripapillary.preprocess_circumpapillary(self.bscan, self.config)
            )
        else:
            self._work_bscan = self.bscan

    # --- mode and anchors ------------------------------------------------

    def set_mode(self, kind: ModeKind, boundary: BoundaryId | None = None) -> None:
        if kind in (ModeKind.LAYER, ModeKind.GRID):
            if boundary is None:
                raise ValueError("layer modes need a boundary id")
            if (
                self.volume.scan_kind is ScanKind.CIRCUMPAPILLARY
                and boundary is BoundaryId.GCL_IPL
            ):
                raise InvalidBoundaryForScan(
                    "GCL_IPL cannot be segmented on circumpapillary scans"
                )
        else:
            boundary = None
        self.mode = SessionMode(kind=kind, boundary=boundary)
        self.pending_anchors = []
        self._cycle_clicks = 0
        self._first_anchor_t = None

    def _require_mode(self) -> SessionMode:
        if self.mode is None:
            raise ValueError("no active mode; call set_mode first")
        return self.mode

    def add_anchor(self, x: int, y: float):
        """Append an anchor and return the recomputed preview."""
        mode = self._require_mode()
        if not (0 <= x < self.bscan.width and 0 <= y <= self.bscan.height - 1):
            raise OutOfBounds(f"anchor ({x}, {y}) outside B-scan")
        if mode.kind in (ModeKind.LAYER, ModeKind.GRID):
            if any(a.x == x for a in self.pending_anchors):
                raise DuplicateAnchorColumn(f"column {x} already has an anchor")
        t = self._clock()
        if self._first_anchor_t is None:
            self._first_anchor_t = t
        self.pending_anchors.append(Anchor(x=int(x), y=float(y), t=t))
        self._cycle_clicks += 1
        return self.preview()

    def undo_anchor(self):
        """Drop the last pending anchor; clicks already spent stay counted."""
        if not self.pending_anchors:
            raise NothingToUndo("no pending anchors")
        self.pending_anchors.pop()
        return self.preview()

    # --- previews ---------------------------------------------------------

    def preview(self):
        """Current assembly over the pending anchors: a Boundary in layer
        and grid modes (None when empty), an open polyline in fluid mode."""
        mode = self._require_mode()
        anchors = self.pending_anchors
        if mode.kind is ModeKind.FLUID:
            return self._fluid_polyline(anchors)
        if not anchors:
            return None
        if mode.kind is ModeKind.GRID:
            if len(anchors) == 1:
                flat = np.full(self.bscan.width, float(anchors[0].y))
                return Boundary(y=flat, id=mode.boundary, mode=BoundaryMode.GRID,
                                anchors=list(anchors), click_count=1)
            return grid_boundary(anchors, self.bscan.width, self.bscan.height,
                                 boundary_id=mode.boundary)
        return self._assemble_layer(anchors, mode.boundary)

    def _fluid_polyline(self, anchors: list[Anchor]) -> list[tuple[int, int]]:
        if not anchors:
            return []
        cost = self._fluid_cost()
        work = [Anchor(a.x, self._to_work_y(a), a.t) for a in anchors]
        line = [(work[0].x, snap(work[0].y))]
        for a, b in zip(work, work[1:]):
            if (a.x, snap(a.y)) == (b.x, snap(b.y)):
                continue
            seg = shortest_free_path(cost, a, b)
            line.extend(seg.nodes[1:])
        return [self._from_work_node(n) for n in line]

    def _assemble_layer(self, anchors, boundary: BoundaryId) -> Boundary:
        cost = self._layer_cost(boundary)
        work = [Anchor(a.x, self._to_work_y(a), a.t) for a in anchors]
        assembled = assemble_boundary(cost, work, self.config.d_max)
        assembled.anchors = list(anchors)
        return self._from_work_boundary(assembled)

    # --- commits ------------------------------------------------------------

    def commit(self) -> SegmentationRecord:
        """Store the pending assembly into the committed record."""
        mode = self._require_mode()
        n = len(self.pending_anchors)
        if mode.kind is ModeKind.LAYER and n < 1:
            raise InsufficientAnchors("layer commit needs at least 1 anchor")
        if mode.kind is ModeKind.GRID and n < 2:
            raise InsufficientAnchors("grid commit needs at least 2 anchors")
        if mode.kind is ModeKind.FLUID and n < 3:
            raise InsufficientAnchors("fluid commit needs at least 3 anchors")
        now = self._clock()
        elapsed = now - (self._first_anchor_t if self._first_anchor_t is not None
                         else now)
        if mode.kind is ModeKind.FLUID:
            cost = self._fluid_cost()
            work = [Anchor(a.x, self._to_work_y(a), a.t)
                    for a in self.pending_anchors]
            loop = close_contour(cost, work)
            loop = [self._from_work_node(p) for p in loop]
            region = FluidRegion.from_contour(
                loop, self.bscan.width, self.bscan.height, label=FluidLabel.UNLABELED
            )
            self.committed.fluids.append(region)
            prev = self.committed.session_stats.get("Fluid", SessionStat())
            self.committed.session_stats["Fluid"] = SessionStat(
                elapsed_seconds=prev.elapsed_seconds + elapsed,
                click_count=prev.click_count + self._cycle_clicks,
            )
        else:
            boundary = self.preview()
            boundary.elapsed_seconds = elapsed
            boundary.click_count = self._cycle_clicks
            self.committed.boundaries[mode.boundary] = boundary
            self.committed.session_stats[mode.boundary.value] = SessionStat(
                elapsed_seconds=elapsed, click_count=self._cycle_clicks
            )
        self.pending_anchors = []
        self._cycle_clicks = 0
        self._first_anchor_t = None
        return self.committed

    def splice(self, boundary_id: BoundaryId, a: Anchor, b: Anchor) -> Boundary:
        """Correct a committed boundary on [a.x, b.x]."""
        if boundary_id not in self.committed.boundaries:
            raise ValueError(f"no committed boundary {boundary_id.value}")
        cost = self._layer_cost(boundary_id)
        wa = Anchor(a.x, self._to_work_y(a), a.t)
        wb = Anchor(b.x, self._to_work_y(b), b.t)
        current = self.committed.boundaries[boundary_id]
        work = self._to_work_boundary(current)
        corrected = splice_correction(work, cost, wa, wb, self.config.d_max)
        result = self._from_work_boundary(corrected)
        result.elapsed_seconds = current.elapsed_seconds
        self.committed.boundaries[boundary_id] = result
        stat = self.committed.session_stats.get(boundary_id.value, SessionStat())
        self.committed.session_stats[boundary_id.value] = SessionStat(
            elapsed_seconds=stat.elapsed_seconds, click_count=stat.click_count + 2
        )
        return result

    def filter_fluids(self, min_area_px: int | None = None) -> int:
        """Apply small-object filtering to the committed fluids; returns
        how many regions remain."""
        threshold = (self.config.fluid.min_area_px if min_area_px is None
                     else min_area_px)
        self.committed.fluids = filter_small_fluids(self.committed.fluids, threshold)
        return len(self.committed.fluids)

    # --- cost maps and flattened-space transforms -------------------------

    def _layer_cost(self, boundary: BoundaryId) -> CostMap:
        key = f"layer:{boundary.value}:{self.config.boundary_hash(boundary)}"
        if key not in self._cost_cache:
            self._cost_cache[key] = build_feature_map(
                self._work_bscan, boundary, self.config
            )
        return self._cost_cache[key]

    def _fluid_cost(self) -> CostMap:
        key = f"fluid:{self.config.fluid_hash()}"
        if key not in self._cost_cache:
            self._cost_cache[key] = fluid_feature_map(self._work_bscan, self.config)
        return self._cost_cache[key]

    def _to_work_y(self, a: Anchor) -> float:
        if self._flatten_map is None:
            return a.y
        y = a.y + self._flatten_map.shift[a.x]
        return float(np.clip(y, 0, self.bscan.height - 1))

    def _from_work_node(self, node: tuple[int, int]) -> tuple[int, int]:
        if self._flatten_map is None:
            return node
        x, y = node
        y = int(np.clip(y - self._flatten_map.shift[x], 0, self.bscan.height - 1))
        return (x, y)

    def _from_work_boundary(self, boundary: Boundary) -> Boundary:
        if self._flatten_map is None:
            return boundary
        return peripapillary.unflatten_boundary(boundary, self._flatten_map)

    def _to_work_boundary(self, boundary: Boundary) -> Boundary:
        if self._flatten_map is None:
            return boundary
        return Boundary(
            y=peripapillary.flatten_rows(boundary.y, self._flatten_map),
            id=boundary.id,
            mode=boundary.mode,
            anchors=list(boundary.anchors),
            elapsed_seconds=boundary.elapsed_seconds,
            click_count=boundary.click_count,
        )
