import numpy as np
import pytest

import oracles
from helpers import blob_spec, three_layer_spec
from livewire_oct.annotate import (
    ModeKind,
    Session,
    filter_small_fluids,
    grid_boundary,
)
from livewire_oct.config import BoundaryId
from livewire_oct.errors import (
    ClampWarning,
    DuplicateAnchorColumn,
    InsufficientAnchors,
    NothingToUndo,
    OutOfBounds,
    TooFewClicks,
)
from livewire_oct.imgproc import build_feature_map
from livewire_oct.livewire import Anchor, assemble_boundary
from livewire_oct.phantom import generate
from livewire_oct.records import FluidLabel, FluidRegion, rasterize_contour
from livewire_oct.volume import Volume


class StepClock:
    def __init__(self):
        self.t = -1.0

    def __call__(self):
        self.t += 1.0
        return self.t


def make_session(seed=3, w=160, h=360, speckle=0.1, clock=None):
    bscan, truth = generate(three_layer_spec(seed=seed, w=w, h=h, speckle=speckle))
    volume = Volume(id="phantom", bscans=[bscan], scale_x_mm=0.01,
                    scale_z_mm=0.004, spacing_y_mm=0.1)
    session = Session(volume, 0, clock=clock or StepClock())
    return session, truth


# --- add / undo ---------------------------------------------------------


def test_first_anchor_gives_full_width_preview():
    session, truth = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    preview = session.add_anchor(80, float(curve[80]))
    assert preview.width == session.bscan.width
    assert preview.y[80] == round(curve[80])


def test_fluid_third_anchor_open_polyline():
    session, _ = make_session()
    session.set_mode(ModeKind.FLUID)
    session.add_anchor(40, 60)
    session.add_anchor(80, 60)
    preview = session.add_anchor(80, 100)
    assert isinstance(preview, list)
    assert preview[0] == (40, 60)
    assert preview[-1] == (80, 100)
    # open polyline: the loop back to the first anchor is not included
    assert preview.count((40, 60)) == 1


def test_incremental_equals_batch(config):
    session, truth = make_session(seed=9)
    session.set_mode(ModeKind.LAYER, BoundaryId.IPL_INL)
    curve = truth.boundaries[BoundaryId.IPL_INL]
    anchors = [(10, float(curve[10])), (70, float(curve[70])),
               (130, float(curve[130]))]
    preview = None
    for x, y in anchors:
        preview = session.add_anchor(x, y)
    cm = build_feature_map(session.bscan, BoundaryId.IPL_INL, session.config)
    batch = assemble_boundary(cm, [Anchor(x, y) for x, y in anchors],
                              session.config.d_max)
    assert np.array_equal(preview.y, batch.y)


def test_add_undo_restores_previous_preview():
    session, truth = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    session.add_anchor(30, float(curve[30]))
    before = session.preview()
    session.add_anchor(100, float(curve[100]) + 12)
    after_undo = session.undo_anchor()
    assert np.array_equal(after_undo.y, before.y)


def test_undo_to_zero_fluid_gives_empty_preview():
    session, _ = make_session()
    session.set_mode(ModeKind.FLUID)
    session.add_anchor(50, 50)
    assert session.undo_anchor() == []
    with pytest.raises(NothingToUndo):
        session.undo_anchor()


def test_replay_equivalence():
    session, truth = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    a = (20, float(curve[20]))
    b = (90, float(curve[90]))
    session.add_anchor(*a)
    session.add_anchor(*b)
    session.undo_anchor()
    replayed = session.add_anchor(*b)

    session2, _ = make_session()
    session2.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    session2.add_anchor(*a)
    direct = session2.add_anchor(*b)
    assert np.array_equal(replayed.y, direct.y)


def test_add_anchor_out_of_bounds():
    session, _ = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    with pytest.raises(OutOfBounds):
        session.add_anchor(10_000, 5)
    with pytest.raises(OutOfBounds):
        session.add_anchor(5, -3)
    # session still usable afterwards
    assert session.add_anchor(5, 30.0) is not None


def test_duplicate_anchor_column_layer_mode():
    session, _ = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    session.add_anchor(40, 50)
    with pytest.raises(DuplicateAnchorColumn):
        session.add_anchor(40, 80)


# --- commit ----------------------------------------------------------------


def test_commit_counts_every_click_including_undone():
    session, truth = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    for x in (10, 40, 70, 100):
        session.add_anchor(x, float(curve[x]))
    session.undo_anchor()
    session.add_anchor(110, float(curve[110]))
    record = session.commit()
    boundary = record.boundaries[BoundaryId.ILM]
    assert boundary.click_count == 5
    assert record.session_stats["ILM"].click_count == 5


def test_commit_elapsed_is_commit_minus_first_anchor():
    clock = StepClock()
    session, truth = make_session(clock=clock)
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    session.add_anchor(10, float(curve[10]))   # t = 1
    session.add_anchor(60, float(curve[60]))   # t = 2
    record = session.commit()                  # t = 3
    assert record.boundaries[BoundaryId.ILM].elapsed_seconds == 2.0


def test_elapsed_monotone_across_commits():
    session, truth = make_session()
    elapsed = []
    for bid in (BoundaryId.ILM, BoundaryId.IPL_INL):
        session.set_mode(ModeKind.LAYER, bid)
        curve = truth.boundaries[bid]
        session.add_anchor(20, float(curve[20]))
        record = session.commit()
        elapsed.append(record.boundaries[bid].elapsed_seconds)
    assert all(e >= 0 for e in elapsed)


def test_commit_requires_minimum_anchors():
    session, _ = make_session()
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    with pytest.raises(InsufficientAnchors):
        session.commit()
    session.set_mode(ModeKind.GRID, BoundaryId.ILM)
    session.add_anchor(10, 50)
    with pytest.raises(InsufficientAnchors):
        session.commit()
    session.set_mode(ModeKind.FLUID)
    session.add_anchor(30, 60)
    session.add_anchor(60, 60)
    with pytest.raises(InsufficientAnchors):
        session.commit()


def test_fluid_commit_mask_matches_rasterization_oracle():
    bscan, _ = generate(blob_spec(seed=2, w=120, h=100,
                                  center=(60.0, 55.0), axes=(24.0, 16.0)))
    volume = Volume(id="blob", bscans=[bscan], scale_x_mm=1, scale_z_mm=1,
                    spacing_y_mm=1)
    session = Session(volume, 0, clock=StepClock())
    session.set_mode(ModeKind.FLUID)
    import math
    for t in (0, math.pi / 2, math.pi, 3 * math.pi / 2):
        session.add_anchor(int(round(60 + 24 * math.cos(t))),
                           float(55 + 16 * math.sin(t)))
    record = session.commit()
    region = record.fluids[-1]
    oracle_mask = oracles.point_in_polygon_mask(region.contour, 120, 100)
    assert np.array_equal(region.mask, oracle_mask)
    assert region.area_px == int(oracle_mask.sum())


def test_splice_through_session():
    session, truth = make_session(seed=12)
    session.set_mode(ModeKind.LAYER, BoundaryId.ILM)
    curve = truth.boundaries[BoundaryId.ILM]
    for x in (0, 80, 159):
        session.add_anchor(x, float(curve[x]))
    session.commit()
    before = session.committed.boundaries[BoundaryId.ILM].y.copy()
    clicks_before = session.committed.session_stats["ILM"].click_count
    session.splice(BoundaryId.ILM, Anchor(40, float(curve[40])),
                   Anchor(120, float(curve[120])))
    after = session.committed.boundaries[BoundaryId.ILM]
    assert np.array_equal(after.y[:40], before[:40])
    assert np.array_equal(after.y[121:], before[121:])
    assert session.committed.session_stats["ILM"].click_count == clicks_before + 2


# --- grid_boundary -------------------------------------------------------


def test_grid_constant_clicks_constant_boundary():
    clicks = [Anchor(x, 42.5) for x in (5, 30, 60, 90)]
    g = grid_boundary(clicks, 100)
    assert np.allclose(g.y, 42.5, atol=1e-9)
    assert g.mode.value == "Grid"
    assert g.click_count == 4


def test_grid_parabola_within_five_hundredths():
    w = 512
    x = np.arange(w)
    parabola = 150 + 1e-4 * (x - 255.5) ** 2
    cols = np.round(np.linspace(0, w - 1, 11)).astype(int)
    clicks = [Anchor(int(c), float(parabola[c])) for c in cols]
    g = grid_boundary(clicks, w)
    inside = slice(cols[0], cols[-1] + 1)
    assert np.abs(g.y[inside] - parabola[inside]).max() <= 0.05


def test_grid_two_clicks_line_with_flat_ends():
    g = grid_boundary([Anchor(10, 20.0), Anchor(40, 50.0)], 60)
    xs = np.arange(10, 41)
    assert np.allclose(g.y[10:41], 20.0 + (xs - 10), atol=1e-9)
    assert np.all(g.y[:10] == 20.0)
    assert np.all(g.y[41:] == 50.0)


def test_grid_passes_through_clicks_exactly():
    clicks = [Anchor(3, 17.25), Anchor(20, 33.5), Anchor(57, 12.75)]
    g = grid_boundary(clicks, 64)
    for c in clicks:
        assert g.y[c.x] == pytest.approx(c.y, abs=1e-12)


def test_grid_too_few_clicks():
    with pytest.raises(TooFewClicks):
        grid_boundary([Anchor(5, 5.0)], 10)


def test_grid_clamps_and_warns():
    clicks = [Anchor(0, 1.0), Anchor(5, 30.0), Anchor(10, 1.0)]
    with pytest.warns(ClampWarning):
        g = grid_boundary(clicks, 20, h=20)
    assert g.y.max() <= 19.0 and g.y.min() >= 0.0
    # no warning when everything stays inside
    import warnings as _warnings
    with _warnings.catch_warnings():
        _warnings.simplefilter("error")
        grid_boundary([Anchor(0, 5.0), Anchor(10, 8.0)], 20, h=20)


# --- filter_small_fluids ---------------------------------------------------


def rect_chain(w: int, h: int, x0: int = 0, y0: int = 0):
    """Full perimeter pixel chain of a w x h rectangle (clockwise)."""
    if h == 1:
        return [(x0 + i, y0) for i in range(w)] + \
               [(x0 + i, y0) for i in range(w - 2, 0, -1)]
    chain = [(x0 + i, y0) for i in range(w)]
    chain += [(x0 + w - 1, y0 + j) for j in range(1, h)]
    chain += [(x0 + i, y0 + h - 1) for i in range(w - 2, -1, -1)]
    chain += [(x0, y0 + j) for j in range(h - 2, 0, -1)]
    return chain


def _region_with_area(w: int, h: int) -> FluidRegion:
    region = FluidRegion.from_contour(rect_chain(w, h), 64, 64,
                                      label=FluidLabel.IRF)
    assert region.area_px == w * h
    return region


def test_filter_zero_threshold_is_identity():
    regions = [_region_with_area(3, 3), _region_with_area(5, 4)]
    assert filter_small_fluids(regions, 0) == regions


def test_filter_areas_5_50_500_threshold_50():
    regions = [_region_with_area(5, 1), _region_with_area(10, 5),
               _region_with_area(25, 20)]
    assert [r.area_px for r in regions] == [5, 50, 500]
    kept = filter_small_fluids(regions, 50)
    assert kept == regions[1:]


def test_filter_idempotent(rng):
    regions = [
        _region_with_area(int(a), int(b))
        for a, b in zip(rng.integers(2, 12, size=6), rng.integers(1, 9, size=6))
    ]
    threshold = 30
    once = filter_small_fluids(regions, threshold)
    twice = filter_small_fluids(once, threshold)
    assert once == twice
