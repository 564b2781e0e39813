"""Image-processing primitives and per-boundary cost-map pipelines.

A cost map turns a B-scan into a per-pixel traversal cost that is low
along the boundary (or fluid edge) being segmented and high elsewhere.
Layer boundaries use a polarity-filtered vertical gradient; fluids use a
Canny edge map closed by morphology. All functions are pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .config import BoundaryId, PipelineConfig, Polarity
from .errors import InvalidBand
from .volume import BScan

# 3x3 Sobel kernels; _SOBEL_Y responds positively where intensity
# increases downward (dark above / bright below).
_SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
_SOBEL_X = _SOBEL_Y.T


class MorphOp(enum.Enum):
    DILATE = "Dilate"
    ERODE = "Erode"
    OPEN = "Open"
    CLOSE = "Close"


@dataclass(frozen=True)
class CostMap:
    """Non-negative per-pixel traversal cost over one B-scan."""

    cost: np.ndarray
    source: str
    config_hash: str

    def __post_init__(self):
        c = self.cost
        if not np.all(np.isfinite(c)) or c.min() < 0:
            raise ValueError("costs must be finite and non-negative")

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    @property
    def height(self) -> int:
        return self.cost.shape[0]


def gaussian_blur(img: np.ndarray, sigma_px: float) -> np.ndarray:
    """Separable Gaussian blur with kernel radius ceil(3*sigma) and
    replicated borders. sigma 0 is the identity."""
    if sigma_px < 0:
        raise ValueError("sigma_px must be >= 0")
    img = np.asarray(img, dtype=np.float64)
    if sigma_px == 0:
        return img.copy()
    radius = math.ceil(3.0 * sigma_px)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma_px**2))
    kernel /= kernel.sum()
    out = ndimage.convolve1d(img, kernel, axis=0, mode="nearest")
    return ndimage.convolve1d(out, kernel, axis=1, mode="nearest")


def gradient_vertical(img: np.ndarray, polarity: Polarity) -> np.ndarray:
    """Polarity-filtered vertical Sobel response, rescaled to [0, 1].

    DarkToBright keeps responses where intensity increases downward,
    BrightToDark the opposite; rejected responses clamp to 0. Both
    polarities derive from a single Sobel pass so that inverting the
    image swaps them exactly.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape[0] < 3:
        raise ValueError("image must have at least 3 rows")
    resp = ndimage.correlate(img, _SOBEL_Y, mode="nearest")
    if polarity is Polarity.BRIGHT_TO_DARK:
        resp = -resp
    feat = np.maximum(resp, 0.0)
    peak = feat.max()
    if peak > 0:
        feat = feat / peak
    return feat


def canny(img: np.ndarray, low: float, high: float) -> np.ndarray:
    """Classic Canny edge detection.

    Gaussian-smoothed Sobel gradients, non-maximum suppression along the
    quantized gradient direction, then double threshold with hysteresis.
    `low` and `high` apply to the gradient magnitude rescaled to [0, 1].
    Returns a boolean grid.
    """
    if not (0 <= low < high <= 1):
        raise ValueError("need 0 <= low < high <= 1")
    img = np.asarray(img, dtype=np.float64)
    smoothed = gaussian_blur(img, 1.0)
    gx = ndimage.correlate(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(smoothed, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    # rounding dust from the blur (~1e-16) must not masquerade as edges
    # on featureless images once magnitudes are peak-normalized
    if peak <= 1e-9:
        return np.zeros(img.shape, dtype=bool)
    mag = mag / peak

    thin = _non_maximum_suppression(mag, gx, gy)
    weak = thin > low
    strong = thin > high
    if not strong.any():
        return np.zeros(img.shape, dtype=bool)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return keep[labels]


def _non_maximum_suppression(mag, gx, gy):
    """Keep pixels whose magnitude is not exceeded along the gradient
    direction (quantized to 4 sectors); out-of-image neighbors count 0."""
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor_divide(angle + np.pi / 8, np.pi / 4).astype(int) % 4
    # sector 0: horizontal gradient -> compare left/right, 1: diagonal
    # down-right, 2: vertical -> up/down, 3: diagonal down-left
    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    out = np.zeros_like(mag)
    for s, (dy, dx) in steps.items():
        sel = sector == s
        fwd = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        bwd = padded[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        keep = sel & (mag >= fwd) & (mag >= bwd)
        out[keep] = mag[keep]
    return out


def morph(img: np.ndarray, op: MorphOp, se: tuple[int, int]) -> np.ndarray:
    """Binary morphology with a rectangular structuring element.

    se is (width_px, height_px). Pixels beyond the border count as
    background for every operation. Open and close compose the adjoint
    dilate/erode pair, which makes them idempotent for any rectangle,
    even-sized ones included.
    """
    se_w, se_h = int(se[0]), int(se[1])
    if se_w < 1 or se_h < 1:
        raise ValueError("structuring element dims must be >= 1")
    x = np.asarray(img, dtype=bool)
    if op is MorphOp.DILATE:
        return _dilate(x, se_w, se_h)
    if op is MorphOp.ERODE:
        return _erode(x, se_w, se_h)
    if op is MorphOp.OPEN:
        return _dilate(_erode(x, se_w, se_h), se_w, se_h)
    if op is MorphOp.CLOSE:
        return _erode(_dilate(x, se_w, se_h), se_w, se_h)
    raise ValueError(f"unknown morphological op {op!r}")


def _window_reduce(x, size, lead, axis, reducer, pad_value):
    # window at output index i covers input [i - lead, i - lead + size - 1]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (lead, size - 1 - lead)
    padded = np.pad(x, pad, mode="constant", constant_values=pad_value)
    return reducer(sliding_window_view(padded, size, axis=axis), axis=-1)


def _dilate(x, se_w, se_h):
    # out[p] = OR of x[p - b] for b in the SE, so the window leads by
    # the SE's lower half (reflection of the erosion window)
    out = _window_reduce(x, se_h, se_h // 2, 0, np.any, False)
    return _window_reduce(out, se_w, se_w // 2, 1, np.any, False)


def _erode(x, se_w, se_h):
    out = _window_reduce(x, se_h, (se_h - 1) // 2, 0, np.all, False)
    return _window_reduce(out, se_w, (se_w - 1) // 2, 1, np.all, False)


def build_feature_map(
    bscan: BScan, boundary: BoundaryId, config: PipelineConfig
) -> CostMap:
    """Boundary-specific cost map: contrast-normalize, blur, take the
    polarity-matched vertical gradient, invert to a cost, then penalize
    rows outside the optional search band."""
    bp = config.boundaries[boundary]
    bp.validate(boundary.value)
    img = bscan.pixels
    lo, hi = img.min(), img.max()
    norm = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    feat = gradient_vertical(gaussian_blur(norm, bp.gaussian_sigma_px), bp.polarity)
    cost = 1.0 - feat
    if bp.search_band is not None:
        row_min, row_max = bp.search_band
        if row_min < 0 or row_max >= bscan.height or row_min > row_max:
            raise InvalidBand(
                f"band ({row_min}, {row_max}) outside rows [0, {bscan.height - 1}]"
            )
        outside = np.ones(bscan.height, dtype=bool)
        outside[row_min : row_max + 1] = False
        cost[outside, :] += config.band_penalty
    cost -= cost.min()
    return CostMap(cost=cost, source=boundary.value,
                   config_hash=config.boundary_hash(boundary))


def fluid_feature_map(bscan: BScan, config: PipelineConfig) -> CostMap:
    """Fluid cost map: Canny edges, morphological close, zero cost on
    edges and unit cost elsewhere, softened by a fixed blur."""
    fc = config.fluid
    fc.validate()
    edges = canny(bscan.pixels, fc.canny_low, fc.canny_high)
    closed = morph(edges, MorphOp.CLOSE, fc.morph_close_se)
    cost = np.where(closed, 0.0, 1.0)
    cost = gaussian_blur(cost, 1.0)
    cost -= cost.min()
    return CostMap(cost=cost, source="Fluid", config_hash=config.fluid_hash())
