"""Synthetic B-scan generator with known ground truth.

Phantoms stack piecewise-constant intensity bands between layer curves,
optionally add a bright band (the RPE stand-in for circumpapillary
scans), elliptical fluid blobs, attenuated vessel-shadow column runs,
and seeded multiplicative speckle. The generator is the oracle behind
every end-to-end accuracy test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import BoundaryId
from .errors import InvalidSpec
from .volume import BScan


@dataclass
class LayerSpec:
    boundary: BoundaryId
    curve: np.ndarray  # row per column
    intensity_above: float
    intensity_below: float


@dataclass
class BrightBandSpec:
    curve: np.ndarray
    half_width_px: int
    intensity: float


@dataclass
class BlobSpec:
    center: tuple[float, float]  # (x, y)
    axes: tuple[float, float]  # (semi-axis x, semi-axis y)
    intensity: float


@dataclass
class ShadowRunSpec:
    col_start: int
    col_end: int  # inclusive
    attenuation: float


@dataclass
class PhantomSpec:
    w: int
    h: int
    layers: list[LayerSpec] = field(default_factory=list)
    bright_band: BrightBandSpec | None = None
    blobs: list[BlobSpec] = field(default_factory=list)
    shadow_runs: list[ShadowRunSpec] = field(default_factory=list)
    speckle_sigma: float = 0.0
    rng_seed: int = 0

    def validate(self) -> None:
        if self.w < 2 or self.h < 2:
            raise InvalidSpec("phantom must be at least 2x2")
        prev = None
        for layer in self.layers:
            curve = np.asarray(layer.curve, dtype=np.float64)
            if curve.shape != (self.w,):
                raise InvalidSpec("layer curve length must equal width")
            if curve.min() < 0 or curve.max() > self.h - 1:
                raise InvalidSpec("layer curve exits image rows")
            if prev is not None and np.any(curve < prev):
                raise InvalidSpec("layer curves must stack top to bottom")
            prev = curve
        if self.bright_band is not None:
            band = np.asarray(self.bright_band.curve, dtype=np.float64)
            if band.shape != (self.w,):
                raise InvalidSpec("bright band curve length must equal width")
            if self.bright_band.half_width_px < 0:
                raise InvalidSpec("bright band half width must be >= 0")
        for blob in self.blobs:
            if blob.axes[0] <= 0 or blob.axes[1] <= 0:
                raise InvalidSpec("blob axes must be positive")
        for run in self.shadow_runs:
            if not (0 <= run.col_start <= run.col_end < self.w):
                raise InvalidSpec("shadow run outside columns")
            if run.attenuation < 0:
                raise InvalidSpec("shadow attenuation must be >= 0")
        if self.speckle_sigma < 0:
            raise InvalidSpec("speckle_sigma must be >= 0")

    @classmethod
    def from_json(cls, path: str | Path) -> "PhantomSpec":
        data = json.loads(Path(path).read_text())
        w = int(data["w"])

        def curve_of(entry):
            curve = entry["curve"]
            if isinstance(curve, dict):
                # {"base": r, "amplitude": a, "period_px": p, "phase": f}
                x = np.arange(w, dtype=np.float64)
                return entry["curve"]["base"] + curve.get("amplitude", 0.0) * np.sin(
                    2.0 * np.pi * x / curve.get("period_px", w)
                    + curve.get("phase", 0.0)
                )
            return np.asarray(curve, dtype=np.float64)

        spec = cls(
            w=w,
            h=int(data["h"]),
            layers=[
                LayerSpec(
                    boundary=BoundaryId(entry["boundary"]),
                    curve=curve_of(entry),
                    intensity_above=float(entry["intensity_above"]),
                    intensity_below=float(entry["intensity_below"]),
                )
                for entry in data.get("layers", [])
            ],
            bright_band=None
            if data.get("bright_band") is None
            else BrightBandSpec(
                curve=curve_of(data["bright_band"]),
                half_width_px=int(data["bright_band"]["half_width_px"]),
                intensity=float(data["bright_band"]["intensity"]),
            ),
            blobs=[
                BlobSpec(
                    center=(float(b["center"][0]), float(b["center"][1])),
                    axes=(float(b["axes"][0]), float(b["axes"][1])),
                    intensity=float(b["intensity"]),
                )
                for b in data.get("blobs", [])
            ],
            shadow_runs=[
                ShadowRunSpec(
                    col_start=int(r["col_start"]),
                    col_end=int(r["col_end"]),
                    attenuation=float(r["attenuation"]),
                )
                for r in data.get("shadow_runs", [])
            ],
            speckle_sigma=float(data.get("speckle_sigma", 0.0)),
            rng_seed=int(data.get("rng_seed", 0)),
        )
        spec.validate()
        return spec


@dataclass
class PhantomTruth:
    boundaries: dict[BoundaryId, np.ndarray]
    fluid_masks: list[np.ndarray]
    shadow_columns: set[int]


def generate(spec: PhantomSpec) -> tuple[BScan, PhantomTruth]:
    """Render the phantom and return it with its ground truth."""
    spec.validate()
    w, h = spec.w, spec.h
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]

    if spec.layers:
        img = np.full((h, w), spec.layers[0].intensity_above, dtype=np.float64)
        for layer in spec.layers:
            curve = np.asarray(layer.curve, dtype=np.float64)[None, :]
            img = np.where(rows >= curve, layer.intensity_below, img)
    else:
        img = np.zeros((h, w), dtype=np.float64)

    if spec.bright_band is not None:
        band = np.asarray(spec.bright_band.curve, dtype=np.float64)[None, :]
        img = np.where(
            np.abs(rows - band) <= spec.bright_band.half_width_px,
            spec.bright_band.intensity,
            img,
        )

    fluid_masks = []
    for blob in spec.blobs:
        cx, cy = blob.center
        ax, ay = blob.axes
        mask = ((cols - cx) / ax) ** 2 + ((rows - cy) / ay) ** 2 <= 1.0
        img = np.where(mask, blob.intensity, img)
        fluid_masks.append(mask)

    shadow_columns: set[int] = set()
    for run in spec.shadow_runs:
        img[:, run.col_start : run.col_end + 1] *= run.attenuation
        shadow_columns.update(range(run.col_start, run.col_end + 1))

    if spec.speckle_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        gain = 1.0 + rng.normal(0.0, spec.speckle_sigma, size=(h, w))
        img = img * gain
    img = np.clip(img, 0.0, 1.0)

    truth = PhantomTruth(
        boundaries={
            layer.boundary: np.asarray(layer.curve, dtype=np.float64).copy()
            for layer in spec.layers
        },
        fluid_masks=fluid_masks,
        shadow_columns=shadow_columns,
    )
    return BScan(pixels=img, index=0), truth
