import math

import numpy as np
import pytest

import oracles
from helpers import blob_spec, ellipse_perimeter, hausdorff, three_layer_spec
from livewire_oct.config import BoundaryId, default_config
from livewire_oct.errors import DuplicateAnchorColumn, NoPath
from livewire_oct.imgproc import CostMap, build_feature_map, fluid_feature_map
from livewire_oct.livewire import (
    Anchor,
    assemble_boundary,
    close_contour,
    shortest_free_path,
    shortest_layer_path,
    splice_correction,
)
from livewire_oct.metrics import unsigned_error
from livewire_oct.phantom import generate


def cost_map(arr) -> CostMap:
    return CostMap(cost=np.asarray(arr, dtype=np.float64), source="ILM",
                   config_hash="test")


# --- shortest_layer_path ----------------------------------------------


def test_layer_path_uniform_map_is_horizontal():
    cm = cost_map(np.ones((20, 30)))
    res = shortest_layer_path(cm, Anchor(2, 7), Anchor(25, 7), d_max=3)
    assert [y for _, y in res.nodes] == [7] * 24
    assert [x for x, _ in res.nodes] == list(range(2, 26))


def test_layer_path_follows_zero_cost_sine_ridge():
    h, w = 60, 90
    x = np.arange(w)
    ridge = np.rint(30 + 10 * np.sin(2 * np.pi * x / 60.0)).astype(int)
    cost = np.ones((h, w))
    cost[ridge, x] = 0.0
    cm = cost_map(cost)
    res = shortest_layer_path(
        cm, Anchor(0, int(ridge[0])), Anchor(w - 1, int(ridge[-1])), d_max=3
    )
    assert [y for _, y in res.nodes] == list(ridge)


def test_layer_path_matches_exhaustive_enumeration(rng):
    # 12x12 map; the span is kept small enough to enumerate literally
    c = rng.random((12, 12))
    cm = cost_map(c)
    c0 = cm.cost
    for y0, y1 in [(2, 9), (5, 5), (11, 0)]:
        got = shortest_layer_path(cm, Anchor(3, y0), Anchor(9, y1), d_max=2)
        want = oracles.layer_path_cost_enumerate(c0, 3, y0, 9, y1, 2)
        assert got.total_cost == pytest.approx(want, abs=1e-9)
        # and the Bellman-Ford oracle agrees with the literal enumeration
        bf = oracles.layer_path_cost_bf(c0, 3, y0, 9, y1, 2)
        assert bf == pytest.approx(want, abs=1e-9)


def test_layer_path_infeasible_slope_raises():
    cm = cost_map(np.ones((40, 10)))
    with pytest.raises(NoPath):
        shortest_layer_path(cm, Anchor(0, 0), Anchor(5, 30), d_max=3)


def test_layer_path_total_cost_is_edge_sum(rng):
    c = rng.random((10, 14))
    cm = cost_map(c)
    res = shortest_layer_path(cm, Anchor(0, 3), Anchor(13, 6), d_max=2)
    total = 0.0
    for (x0, y0), (x1, y1) in zip(res.nodes, res.nodes[1:]):
        assert x1 == x0 + 1 and abs(y1 - y0) <= 2
        total += (cm.cost[y0, x0] + cm.cost[y1, x1]) / 2 * math.hypot(1, y1 - y0)
    assert res.total_cost == pytest.approx(total, abs=1e-12)


def test_layer_path_deterministic(rng):
    c = rng.random((15, 15))
    cm = cost_map(c)
    a = shortest_layer_path(cm, Anchor(0, 7), Anchor(14, 7), d_max=3)
    b = shortest_layer_path(cm, Anchor(0, 7), Anchor(14, 7), d_max=3)
    assert a.nodes == b.nodes and a.total_cost == b.total_cost


def test_layer_path_scaling_invariance(rng):
    # scaling every cost by lambda scales path costs and keeps the path
    c = rng.random((12, 12)) + 0.1
    lam = 3.7
    a = shortest_layer_path(cost_map(c), Anchor(0, 4), Anchor(11, 8), 2)
    b = shortest_layer_path(cost_map(c * lam), Anchor(0, 4), Anchor(11, 8), 2)
    assert b.nodes == a.nodes
    assert b.total_cost == pytest.approx(lam * a.total_cost, rel=1e-12)


# --- shortest_free_path -------------------------------------------------


def test_free_path_uniform_same_row_is_straight():
    cm = cost_map(np.ones((12, 20)))
    res = shortest_free_path(cm, Anchor(3, 5), Anchor(15, 5))
    assert res.nodes == [(x, 5) for x in range(3, 16)]


def test_free_path_single_edge_cost():
    c = np.array([[0.2, 0.8], [0.4, 0.6]])
    cm = CostMap(cost=c - c.min(), source="Fluid", config_hash="t")
    res = shortest_free_path(cm, Anchor(0, 0), Anchor(1, 0))
    assert len(res.nodes) == 2
    want = (cm.cost[0, 0] + cm.cost[0, 1]) / 2 * 1.0
    assert res.total_cost == pytest.approx(want, abs=1e-12)
    # diagonal neighbor: length sqrt(2)
    res2 = shortest_free_path(cm, Anchor(0, 0), Anchor(1, 1))
    direct = (cm.cost[0, 0] + cm.cost[1, 1]) / 2 * math.sqrt(2)
    assert res2.total_cost <= direct + 1e-12


def test_free_path_matches_bellman_ford(rng):
    c = rng.random((15, 15))
    cm = cost_map(c)
    for _ in range(5):
        y0, x0, y1, x1 = rng.integers(0, 15, size=4)
        if (x0, y0) == (x1, y1):
            continue
        res = shortest_free_path(cm, Anchor(int(x0), int(y0)),
                                 Anchor(int(x1), int(y1)))
        want = oracles.free_path_cost_bf(cm.cost, int(x0), int(y0),
                                         int(x1), int(y1))
        assert res.total_cost == pytest.approx(want, abs=1e-9)


# --- assemble_boundary ----------------------------------------------------


def test_assemble_single_anchor_on_phantom(config):
    bscan, truth = generate(three_layer_spec(seed=5, w=256, h=300))
    cm = build_feature_map(bscan, BoundaryId.ILM, config)
    curve = truth.boundaries[BoundaryId.ILM]
    boundary = assemble_boundary(cm, [Anchor(128, float(curve[128]))], config.d_max)
    assert boundary.width == 256
    assert boundary.click_count == 1
    assert unsigned_error(boundary.y, curve) <= 2.0


def test_assemble_follows_ridge_between_anchors():
    h, w = 80, 200
    x = np.arange(w)
    ridge = np.rint(40 + 12 * np.sin(2 * np.pi * x / 150.0)).astype(int)
    cost = np.ones((h, w))
    cost[ridge, x] = 0.0
    cm = cost_map(cost)
    anchors = [Anchor(int(c), int(ridge[c])) for c in range(0, w, 50)]
    boundary = assemble_boundary(cm, anchors, d_max=3)
    lo, hi = anchors[0].x, anchors[-1].x
    assert np.array_equal(boundary.y[lo : hi + 1], ridge[lo : hi + 1])


def test_assemble_two_anchors_uniform_constant():
    cm = cost_map(np.ones((30, 40)))
    boundary = assemble_boundary(cm, [Anchor(5, 12), Anchor(30, 12)], d_max=3)
    assert np.all(boundary.y == 12)
    assert boundary.width == 40


def test_assemble_passes_through_snapped_anchors(rng):
    c = rng.random((40, 60))
    cm = cost_map(c)
    anchors = [Anchor(7, 20.4), Anchor(25, 33.6), Anchor(52, 5.2)]
    boundary = assemble_boundary(cm, anchors, d_max=3)
    for a in anchors:
        assert boundary.y[a.x] == round(a.y)
    deltas = np.abs(np.diff(boundary.y))
    assert deltas.max() <= 3


def test_assemble_rejects_duplicate_columns():
    cm = cost_map(np.ones((10, 10)))
    with pytest.raises(DuplicateAnchorColumn):
        assemble_boundary(cm, [Anchor(4, 2), Anchor(4, 6)], d_max=2)


def test_assemble_anchors_autosorted(rng):
    c = rng.random((20, 30))
    cm = cost_map(c)
    a = assemble_boundary(cm, [Anchor(20, 10), Anchor(4, 5)], d_max=3)
    b = assemble_boundary(cm, [Anchor(4, 5), Anchor(20, 10)], d_max=3)
    assert np.array_equal(a.y, b.y)


# --- splice_correction ---------------------------------------------------


def test_splice_on_ridge_is_fixed_point():
    h, w = 50, 120
    x = np.arange(w)
    ridge = np.rint(25 + 8 * np.sin(2 * np.pi * x / 80.0)).astype(int)
    cost = np.ones((h, w))
    cost[ridge, x] = 0.0
    cm = cost_map(cost)
    boundary = assemble_boundary(
        cm, [Anchor(0, int(ridge[0])), Anchor(w - 1, int(ridge[-1]))], 3
    )
    a = Anchor(30, int(boundary.y[30]))
    b = Anchor(80, int(boundary.y[80]))
    fixed = splice_correction(boundary, cm, a, b, 3)
    assert np.array_equal(fixed.y, boundary.y)
    assert fixed.click_count == boundary.click_count + 2


def test_splice_restores_corrupted_interval(config):
    bscan, truth = generate(three_layer_spec(seed=8, w=256, h=300))
    cm = build_feature_map(bscan, BoundaryId.IPL_INL, config)
    curve = truth.boundaries[BoundaryId.IPL_INL]
    anchors = [Anchor(int(c), float(curve[c])) for c in range(0, 256, 60)]
    boundary = assemble_boundary(cm, anchors, config.d_max)
    corrupted = boundary.y.copy()
    corrupted[100:130] += 25
    boundary.y = corrupted
    fixed = splice_correction(
        boundary, cm, Anchor(95, float(curve[95])), Anchor(135, float(curve[135])),
        config.d_max,
    )
    err = np.abs(fixed.y[95:136] - curve[95:136]).mean()
    assert err <= 2.0


def test_splice_leaves_outside_bit_exact(rng):
    c = rng.random((30, 80))
    cm = cost_map(c)
    boundary = assemble_boundary(cm, [Anchor(0, 15), Anchor(79, 15)], 3)
    before = boundary.y.copy()
    out = splice_correction(boundary, cm, Anchor(20, 10), Anchor(50, 20), 3)
    assert np.array_equal(out.y[:20], before[:20])
    assert np.array_equal(out.y[51:], before[51:])
    assert out.mode.value == "Corrected"
    # the input boundary is untouched
    assert np.array_equal(boundary.y, before)


# --- close_contour --------------------------------------------------------


def test_close_contour_blob(config):
    spec = blob_spec(seed=1)
    bscan, _ = generate(spec)
    cm = fluid_feature_map(bscan, config)
    cx, cy = spec.blobs[0].center
    ax, ay = spec.blobs[0].axes
    anchors = [
        Anchor(int(round(cx + ax * math.cos(t))),
               float(cy + ay * math.sin(t)))
        for t in (0, math.pi / 2, math.pi, 3 * math.pi / 2)
    ]
    loop = close_contour(cm, anchors)
    truth = ellipse_perimeter((cx, cy), (ax, ay))
    assert hausdorff(np.array(loop, dtype=float), truth) <= 2.0
    # consecutive nodes (and the wrap-around pair) are 8-adjacent
    closed = loop + [loop[0]]
    for (x0, y0), (x1, y1) in zip(closed, closed[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) <= 1


def test_close_contour_tiny_triangle():
    cm = cost_map(np.ones((8, 8)))
    loop = close_contour(cm, [Anchor(2, 2), Anchor(3, 2), Anchor(2, 3)])
    assert len(set(loop)) >= 3
    closed = loop + [loop[0]]
    for (x0, y0), (x1, y1) in zip(closed, closed[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) <= 1


def test_close_contour_rotation_invariant(rng):
    c = rng.random((25, 25))
    cm = cost_map(c)
    anchors = [Anchor(4, 4), Anchor(20, 5), Anchor(18, 20), Anchor(5, 18)]
    loops = []
    for shift in range(4):
        rotated = anchors[shift:] + anchors[:shift]
        loop = close_contour(cm, rotated)
        # normalize the cyclic order to compare loops as sets of cycles
        k = loop.index(min(loop))
        loops.append(loop[k:] + loop[:k])
    assert all(lp == loops[0] for lp in loops[1:])
