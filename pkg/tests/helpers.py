"""Shared phantom builders for the test suite."""

import numpy as np

from livewire_oct.config import BoundaryId
from livewire_oct.phantom import (
    BlobSpec,
    BrightBandSpec,
    LayerSpec,
    PhantomSpec,
    ShadowRunSpec,
)

THREE_LAYER_IDS = (BoundaryId.ILM, BoundaryId.IPL_INL, BoundaryId.OPL_ONL)


def three_layer_spec(seed: int, w: int = 512, h: int = 496,
                     speckle: float = 0.15) -> PhantomSpec:
    """Macular-style phantom: three smooth sinusoid boundaries separating
    bands whose contrasts match the default polarity of each boundary."""
    rng = np.random.default_rng(seed)
    x = np.arange(w)

    def wave(base, amp, cycles):
        return base + amp * np.sin(2 * np.pi * cycles * x / w
                                   + rng.uniform(0, 2 * np.pi))

    ilm = wave(120 + rng.uniform(-10, 10), 15, 1.0)
    ipl = ilm + 90 + 10 * np.sin(2 * np.pi * 0.8 * x / w
                                 + rng.uniform(0, 2 * np.pi))
    opl = ipl + 70 + 8 * np.sin(2 * np.pi * 1.2 * x / w
                                + rng.uniform(0, 2 * np.pi))
    return PhantomSpec(
        w=w,
        h=h,
        layers=[
            LayerSpec(BoundaryId.ILM, ilm, 0.05, 0.60),
            LayerSpec(BoundaryId.IPL_INL, ipl, 0.60, 0.30),
            LayerSpec(BoundaryId.OPL_ONL, opl, 0.30, 0.10),
        ],
        speckle_sigma=speckle,
        rng_seed=seed,
    )


def blob_spec(seed: int = 1, w: int = 200, h: int = 160,
              center=(100.0, 90.0), axes=(40.0, 28.0),
              speckle: float = 0.0, with_layer: bool = True) -> PhantomSpec:
    """Bright retina with one dark elliptical fluid blob; with_layer adds
    a horizontal boundary whose edge competes with the blob's."""
    top_row = 30.0 if with_layer else 0.0
    return PhantomSpec(
        w=w,
        h=h,
        layers=[LayerSpec(BoundaryId.ILM, np.full(w, top_row), 0.10, 0.65)],
        blobs=[BlobSpec(center=center, axes=axes, intensity=0.05)],
        speckle_sigma=speckle,
        rng_seed=seed,
    )


def peripapillary_spec(seed: int = 3, w: int = 300, h: int = 200,
                       shadow_runs=((60, 68), (150, 155), (230, 241)),
                       speckle: float = 0.05) -> PhantomSpec:
    """Circumpapillary-style phantom: parabolic bright band, one layer
    above it, and attenuated vessel-shadow column runs."""
    x = np.arange(w)
    band_curve = 120 + 0.0008 * (x - w / 2) ** 2
    layer_curve = band_curve - 50
    return PhantomSpec(
        w=w,
        h=h,
        layers=[LayerSpec(BoundaryId.ILM, layer_curve, 0.05, 0.45)],
        bright_band=BrightBandSpec(curve=band_curve, half_width_px=6,
                                   intensity=0.90),
        shadow_runs=[ShadowRunSpec(a, b, 0.35) for a, b in shadow_runs],
        speckle_sigma=speckle,
        rng_seed=seed,
    )


def ellipse_perimeter(center, axes, n: int = 2000) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.c_[center[0] + axes[0] * np.cos(t),
                 center[1] + axes[1] * np.sin(t)]


def hausdorff(points_a: np.ndarray, points_b: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    tree_a = cKDTree(points_a)
    tree_b = cKDTree(points_b)
    return max(tree_b.query(points_a)[0].max(), tree_a.query(points_b)[0].max())
