"""Shortest-path searches over cost maps and boundary assembly.

Layer boundaries are column-monotone: the search graph is a DAG whose
edges run from (x, y) to (x+1, y+dy) with |dy| <= d_max, so every column
gets exactly one row. Fluid contours use full 8-connected Dijkstra.
Edge weight in both graphs is the mean of the endpoint costs times the
Euclidean step length.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .config import BoundaryId
from .errors import DegenerateLoop, DuplicateAnchorColumn, NoPath
from .imgproc import CostMap

_SQRT2 = math.sqrt(2.0)


def snap(y: float) -> int:
    """Anchor rows snap to the nearest integer pixel for the search."""
    return int(round(float(y)))


@dataclass(frozen=True)
class Anchor:
    """One user click: integer column, fractional row, click time."""

    x: int
    y: float
    t: float = 0.0


class BoundaryMode(enum.Enum):
    LIVEWIRE = "Livewire"
    GRID = "Grid"
    CORRECTED = "Corrected"


@dataclass
class Boundary:
    """One row position per column for a named retinal interface."""

    y: np.ndarray
    id: BoundaryId | None = None
    mode: BoundaryMode = BoundaryMode.LIVEWIRE
    anchors: list[Anchor] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    click_count: int = 0

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim != 1:
            raise ValueError("boundary y must be one row per column")

    @property
    def width(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class PathResult:
    """Pixel path plus its total edge weight."""

    nodes: list[tuple[int, int]]  # (x, y) per node
    total_cost: float


def _path_cost(cost: np.ndarray, nodes: list[tuple[int, int]]) -> float:
    total = 0.0
    for (x0, y0), (x1, y1) in zip(nodes, nodes[1:]):
        length = math.hypot(x1 - x0, y1 - y0)
        total += (cost[y0, x0] + cost[y1, x1]) / 2.0 * length
    return total


def _check_bounds(cost: CostMap, a: Anchor) -> None:
    if not (0 <= a.x < cost.width and 0 <= snap(a.y) < cost.height):
        raise ValueError(f"anchor ({a.x}, {a.y}) outside {cost.width}x{cost.height}")


# --- column-monotone layer search ------------------------------------


def _dy_candidates(d_max: int) -> list[int]:
    # preference order for equal-cost ties: smaller |dy| first, and for
    # the same |dy| the positive step (whose predecessor row is smaller)
    dys = [0]
    for k in range(1, d_max + 1):
        dys.extend((k, -k))
    return dys


def _forward_pass(cost, x_from, x_to, dist0, d_max):
    """Forward DP over columns [x_from, x_to]; dist0 seeds column x_from.
    Returns final distances and per-step chosen dy for backtracking."""
    h = cost.shape[0]
    dys = _dy_candidates(d_max)
    lengths = [math.sqrt(1.0 + dy * dy) for dy in dys]
    dist = dist0
    steps = x_to - x_from
    parents = np.zeros((steps, h), dtype=np.int16)
    rows = np.arange(h)
    for i in range(steps):
        x = x_from + i + 1
        cand = np.full((len(dys), h), np.inf)
        for k, dy in enumerate(dys):
            if dy >= 0:
                dst = slice(dy, h)
                src = slice(0, h - dy)
            else:
                dst = slice(0, h + dy)
                src = slice(-dy, h)
            edge = (cost[src, x - 1] + cost[dst, x]) / 2.0 * lengths[k]
            cand[k, dst] = dist[src] + edge
        best = np.argmin(cand, axis=0)
        dist = cand[best, rows]
        parents[i] = np.asarray(dys, dtype=np.int16)[best]
    return dist, parents


def _backtrack(parents, y_end):
    ys = [y_end]
    y = y_end
    for i in range(parents.shape[0] - 1, -1, -1):
        y = y - int(parents[i, y])
        ys.append(y)
    ys.reverse()
    return ys


def shortest_layer_path(
    cost: CostMap, start: Anchor, end: Anchor, d_max: int
) -> PathResult:
    """Minimum-cost column-monotone path between two anchors.

    Raises NoPath when the row gap is not reachable within d_max per
    column step (never clamps).
    """
    _check_bounds(cost, start)
    _check_bounds(cost, end)
    if start.x >= end.x:
        raise ValueError("start anchor must lie strictly left of end anchor")
    y0, y1 = snap(start.y), snap(end.y)
    span = end.x - start.x
    if d_max * span < abs(y1 - y0):
        raise NoPath(
            f"|dy|={abs(y1 - y0)} unreachable over {span} columns with d_max={d_max}"
        )
    c = cost.cost
    dist0 = np.full(c.shape[0], np.inf)
    dist0[y0] = 0.0
    dist, parents = _forward_pass(c, start.x, end.x, dist0, d_max)
    if not np.isfinite(dist[y1]):
        raise NoPath("end anchor unreachable")
    ys = _backtrack(parents, y1)
    nodes = [(start.x + i, y) for i, y in enumerate(ys)]
    return PathResult(nodes=nodes, total_cost=_path_cost(c, nodes))


# --- free 8-connected search ------------------------------------------

_NEIGHBORS = (
    (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
    (-1, -1, _SQRT2), (-1, 1, _SQRT2), (1, -1, _SQRT2), (1, 1, _SQRT2),
)


def shortest_free_path(cost: CostMap, start: Anchor, end: Anchor) -> PathResult:
    """Dijkstra over the 8-connected pixel graph; ties pop in (smaller
    row, then smaller column) order, so results are deterministic."""
    _check_bounds(cost, start)
    _check_bounds(cost, end)
    c = cost.cost
    h, w = c.shape
    sx, sy = start.x, snap(start.y)
    tx, ty = end.x, snap(end.y)
    if (sx, sy) == (tx, ty):
        raise ValueError("anchors must snap to distinct pixels")
    dist = np.full((h, w), np.inf)
    done = np.zeros((h, w), dtype=bool)
    parent = {}
    dist[sy, sx] = 0.0
    heap = [(0.0, sy, sx)]
    while heap:
        d, y, x = heapq.heappop(heap)
        if done[y, x]:
            continue
        done[y, x] = True
        if (x, y) == (tx, ty):
            break
        base = c[y, x]
        for dy, dx, length in _NEIGHBORS:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not done[ny, nx]:
                nd = d + (base + c[ny, nx]) / 2.0 * length
                if nd < dist[ny, nx]:
                    dist[ny, nx] = nd
                    parent[(nx, ny)] = (x, y)
                    heapq.heappush(heap, (nd, ny, nx))
    nodes = [(tx, ty)]
    while nodes[-1] != (sx, sy):
        nodes.append(parent[nodes[-1]])
    nodes.reverse()
    return PathResult(nodes=nodes, total_cost=_path_cost(c, nodes))


# --- boundary assembly -------------------------------------------------


def _source_for(cost: CostMap) -> BoundaryId | None:
    try:
        return BoundaryId(cost.source)
    except ValueError:
        return None


def assemble_boundary(cost: CostMap, anchors: list[Anchor], d_max: int) -> Boundary:
    """Chain layer paths through the anchors and extend to both image
    borders via zero-cost virtual source/sink columns, producing one row
    per column across the full width."""
    if not anchors:
        raise ValueError("at least one anchor required")
    for a in anchors:
        _check_bounds(cost, a)
    ordered = sorted(anchors, key=lambda a: a.x)
    for a, b in zip(ordered, ordered[1:]):
        if a.x == b.x:
            raise DuplicateAnchorColumn(f"two anchors share column {a.x}")
    c = cost.cost
    h, w = c.shape
    y = np.empty(w, dtype=np.float64)

    first, last = ordered[0], ordered[-1]
    if first.x > 0:
        # virtual source joins every pixel of column 0 at zero cost
        dist0 = np.zeros(h)
        dist, parents = _forward_pass(c, 0, first.x, dist0, d_max)
        if not np.isfinite(dist[snap(first.y)]):
            raise NoPath("left border extension unreachable")
        ys = _backtrack(parents, snap(first.y))
        y[0 : first.x + 1] = ys
    else:
        y[0] = snap(first.y)

    for a, b in zip(ordered, ordered[1:]):
        seg = shortest_layer_path(cost, a, b, d_max)
        y[a.x : b.x + 1] = [row for _, row in seg.nodes]

    if last.x < w - 1:
        dist0 = np.full(h, np.inf)
        dist0[snap(last.y)] = 0.0
        dist, parents = _forward_pass(c, last.x, w - 1, dist0, d_max)
        y_end = int(np.argmin(dist))  # virtual sink; ties take the smaller row
        if not np.isfinite(dist[y_end]):
            raise NoPath("right border extension unreachable")
        ys = _backtrack(parents, y_end)
        y[last.x : w] = ys
    else:
        y[w - 1] = snap(last.y)

    return Boundary(
        y=y,
        id=_source_for(cost),
        mode=BoundaryMode.LIVEWIRE,
        anchors=list(ordered),
        click_count=len(anchors),
    )


def splice_correction(
    boundary: Boundary, cost: CostMap, a: Anchor, b: Anchor, d_max: int
) -> Boundary:
    """Recompute the path on [a.x, b.x] and splice it into a copy of the
    boundary; columns outside the interval are untouched."""
    if a.x >= b.x:
        raise ValueError("correction anchors must satisfy a.x < b.x")
    if boundary.width != cost.width:
        raise ValueError("boundary and cost map widths differ")
    seg = shortest_layer_path(cost, a, b, d_max)
    y = boundary.y.copy()
    y[a.x : b.x + 1] = [row for _, row in seg.nodes]
    return Boundary(
        y=y,
        id=boundary.id,
        mode=BoundaryMode.CORRECTED,
        anchors=list(boundary.anchors) + [a, b],
        elapsed_seconds=boundary.elapsed_seconds,
        click_count=boundary.click_count + 2,
    )


def close_contour(cost: CostMap, anchors: list[Anchor]) -> list[tuple[int, int]]:
    """Chain free paths through the anchors in click order and back to
    the first, yielding a closed pixel loop (last node adjacent to the
    first, which is not repeated)."""
    if len(anchors) < 3:
        raise ValueError("a closed contour needs at least 3 anchors")
    for a in anchors:
        _check_bounds(cost, a)
    loop: list[tuple[int, int]] = []
    n = len(anchors)
    for i in range(n):
        a, b = anchors[i], anchors[(i + 1) % n]
        if (a.x, snap(a.y)) == (b.x, snap(b.y)):
            continue  # coincident clicks contribute no segment
        seg = shortest_free_path(cost, a, b)
        loop.extend(seg.nodes[:-1])  # each segment's end starts the next
    if len(set(loop)) < 3:
        raise DegenerateLoop("contour collapses to fewer than 3 pixels")
    return loop
