"""Circumpapillary preprocessing: flattening and vessel-shadow removal.

Circle scans bow with the retina's curvature and are crossed by dark
vessel shadows. Before the path search runs, the scan is flattened along
a fitted baseline (the bright outer band), shadow columns are detected
and inpainted, and segmented boundaries are mapped back to the original
rows afterwards.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import PipelineConfig
from .errors import AllColumnsFlagged, ClampWarning
from .livewire import Boundary
from .volume import BScan


@dataclass(frozen=True)
class FlattenMap:
    """Per-column integer row shifts applied by flatten()."""

    shift: np.ndarray
    reference: np.ndarray
    height: int


@dataclass(frozen=True)
class ShadowMask:
    """Columns flagged as vessel shadows."""

    flags: np.ndarray  # bool per column

    @property
    def columns(self) -> set[int]:
        return {int(i) for i in np.flatnonzero(self.flags)}


def estimate_baseline(bscan: BScan) -> np.ndarray:
    """Fitted row of the brightest band per column.

    Takes each column's vertically smoothed brightness argmax, then fits
    a quadratic with iteratively reweighted least-absolute-deviations
    (10 iterations) so that shadowed or noisy columns do not drag the
    curve; returns the fitted curve.
    """
    img = bscan.pixels
    smoothed = ndimage.gaussian_filter1d(img, sigma=2.0, axis=0, mode="nearest")
    rows = np.argmax(smoothed, axis=0).astype(np.float64)
    xs = np.arange(bscan.width, dtype=np.float64)
    weights = np.ones_like(rows)
    coeffs = np.polyfit(xs, rows, 2)
    for _ in range(10):
        coeffs = np.polyfit(xs, rows, 2, w=np.sqrt(weights))
        resid = np.abs(rows - np.polyval(coeffs, xs))
        weights = 1.0 / np.maximum(resid, 1e-6)
    return np.polyval(coeffs, xs)


def flatten(bscan: BScan, baseline: np.ndarray) -> tuple[BScan, FlattenMap]:
    """Shift each column so the baseline lands on its median row;
    vacated pixels fill with 0."""
    if baseline.shape[0] != bscan.width:
        raise ValueError("baseline length must equal scan width")
    img = bscan.pixels
    h, w = img.shape
    shifts = np.rint(np.median(baseline) - baseline).astype(int)
    out = np.zeros_like(img)
    for x in range(w):
        s = int(shifts[x])
        if s >= 0:
            out[s:h, x] = img[0 : h - s, x]
        else:
            out[0 : h + s, x] = img[-s:h, x]
    fmap = FlattenMap(shift=shifts, reference=np.asarray(baseline, dtype=np.float64),
                      height=h)
    return BScan(pixels=out, index=bscan.index), fmap


def detect_vessel_shadows(
    bscan: BScan,
    baseline: np.ndarray,
    k: float = 0.7,
    band_half_width_px: int = 10,
) -> ShadowMask:
    """Flag columns whose mean intensity in the band around the baseline
    falls below k times the median band mean; flagged runs dilate by one
    column on each side."""
    img = bscan.pixels
    h, w = img.shape
    means = np.empty(w)
    for x in range(w):
        center = int(round(baseline[x]))
        lo = max(0, center - band_half_width_px)
        hi = min(h - 1, center + band_half_width_px)
        means[x] = img[lo : hi + 1, x].mean()
    med = float(np.median(means))
    flags = means < k * med
    grown = flags.copy()
    grown[1:] |= flags[:-1]
    grown[:-1] |= flags[1:]
    return ShadowMask(flags=grown)


def inpaint_shadows(bscan: BScan, mask: ShadowMask) -> BScan:
    """Replace flagged columns by row-wise linear interpolation between
    the nearest unflagged columns (border columns copy their nearest
    unflagged neighbor). Unflagged columns are untouched."""
    flags = mask.flags
    if flags.all():
        raise AllColumnsFlagged("no unflagged columns to interpolate from")
    if not flags.any():
        return BScan(pixels=bscan.pixels.copy(), index=bscan.index)
    img = bscan.pixels.copy()
    good = np.flatnonzero(~flags)
    bad = np.flatnonzero(flags)
    for r in range(img.shape[0]):
        img[r, bad] = np.interp(bad, good, img[r, good])
    return BScan(pixels=img, index=bscan.index)


def unflatten_boundary(boundary: Boundary, fmap: FlattenMap) -> Boundary:
    """Map a boundary found in flattened space back to original rows,
    clamping to the image and warning when clamping occurred."""
    if boundary.width != fmap.shift.shape[0]:
        raise ValueError("boundary and flatten map widths differ")
    y = boundary.y - fmap.shift
    clamped = np.clip(y, 0.0, fmap.height - 1.0)
    if not np.array_equal(y, clamped):
        warnings.warn("unflattened boundary clamped to image rows", ClampWarning)
    return Boundary(
        y=clamped,
        id=boundary.id,
        mode=boundary.mode,
        anchors=list(boundary.anchors),
        elapsed_seconds=boundary.elapsed_seconds,
        click_count=boundary.click_count,
    )


def flatten_rows(y: np.ndarray, fmap: FlattenMap) -> np.ndarray:
    """Original-space rows -> flattened-space rows (inverse of
    unflatten_boundary's shift)."""
    return np.asarray(y, dtype=np.float64) + fmap.shift


def preprocess_circumpapillary(
    bscan: BScan, config: PipelineConfig
) -> tuple[BScan, FlattenMap, ShadowMask]:
    """Full pipeline: estimate baseline, flatten, localize vessel
    shadows in the flattened scan, inpaint them."""
    baseline = estimate_baseline(bscan)
    flat, fmap = flatten(bscan, baseline)
    flat_baseline = np.full(bscan.width, float(np.median(baseline)))
    shadows = detect_vessel_shadows(
        flat,
        flat_baseline,
        k=config.peripapillary.shadow_k,
        band_half_width_px=config.peripapillary.band_half_width_px,
    )
    cleaned = inpaint_shadows(flat, shadows)
    return cleaned, fmap, shadows
